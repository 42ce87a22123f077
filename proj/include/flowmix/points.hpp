#pragma once

#include <vector>

#include "flowmix/common.hpp"

namespace flowmix {

// An unordered set of N points in R^d (d = 2 or 3; d = 1 for toys), row-major.
// `labels` optionally carries per-point component/part ids.
struct PointCloud {
    int d = 0;
    std::vector<double> pts;   // n x d
    std::vector<int> labels;   // empty or size n

    int size() const { return d == 0 ? 0 : static_cast<int>(pts.size()) / d; }
    double at(int i, int c) const { return pts[static_cast<std::size_t>(i) * d + c]; }
    double& at(int i, int c) { return pts[static_cast<std::size_t>(i) * d + c]; }

    static PointCloud empty(int d, int n) {
        PointCloud pc;
        pc.d = d;
        pc.pts.assign(static_cast<std::size_t>(n) * d, 0.0);
        return pc;
    }
};

// Per-cloud normalization parameters (zero mean, max norm 1).
struct NormalizeParams {
    std::vector<double> center;
    double scale = 1.0;
};

NormalizeParams normalize_cloud(PointCloud& pc);
void denormalize_cloud(PointCloud& pc, const NormalizeParams& p);

} // namespace flowmix
