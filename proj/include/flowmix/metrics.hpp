#pragma once

#include <string>
#include <vector>

#include "flowmix/points.hpp"

namespace flowmix::metrics {

// Nearest-neighbor index over one cloud (median-split kd-tree).
class KdTree {
public:
    explicit KdTree(const PointCloud& pc);
    // squared distance from q (length d) to the nearest stored point
    double nearest_sq(const double* q) const;

private:
    struct NodeRec {
        int left = -1, right = -1;
        int point = -1;
        int axis = 0;
        double split = 0.0;
    };
    int build(std::vector<int>& idx, int lo, int hi, int depth);
    void search(int node, const double* q, double& best) const;

    int d_;
    std::vector<double> pts_;
    std::vector<NodeRec> nodes_;
    int root_ = -1;
};

// Symmetric squared-distance Chamfer: mean over A of squared nearest distance
// to B plus the mirrored term.
double chamfer(const PointCloud& a, const PointCloud& b);

struct EmdOptions {
    int n_exact = 512;           // Hungarian up to this size
    double eps_factor = 0.002;   // Sinkhorn epsilon = factor * mean pairwise distance
    int sinkhorn_iters = 500;
    bool force_approximate = false;
};

// Minimum-cost perfect-matching mean Euclidean distance; exact for
// n <= n_exact, entropic-regularized above.
double emd(const PointCloud& a, const PointCloud& b, const EmdOptions& opt = {});

// Percentage F1 with a squared-distance threshold tau (matches the squared
// Chamfer convention).
double f1_score(const PointCloud& pred, const PointCloud& gt, double tau);

// Jensen-Shannon divergence (natural log) between the marginal voxel
// histograms of the two sets, over the shared bounding cube at resolution
// r_voxels per side.
double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref, int r_voxels);

enum class PairMetric { CD, EMD, F1 };
std::string pair_metric_name(PairMetric m);

struct CovMmd {
    double cov = 0.0;
    double mmd = 0.0;
};

// COV: fraction of reference clouds claimed by at least one generated cloud's
// best match. MMD: mean over reference clouds of the best pair value in the
// generated set (min for CD/EMD, max for F1).
CovMmd cov_mmd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
               PairMetric metric, double tau = 1e-2, const EmdOptions& opt = {});

// Leave-one-out 1-NN accuracy distinguishing generated from reference clouds;
// 0.5 means indistinguishable. Requires |gen| == |ref|.
double nna1(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
            PairMetric metric, double tau = 1e-2, const EmdOptions& opt = {});

// Full suite between two cloud sets; every setting that affects a number is
// recorded alongside it.
struct MetricsReport {
    double cd_mean = 0.0;  // mean pairwise CD over matched index pairs
    double emd_mean = 0.0;
    double f1_mean = 0.0;
    double jsd_val = 0.0;
    double cov_cd = 0.0, cov_emd = 0.0, cov_f1 = 0.0;
    double mmd_cd = 0.0, mmd_emd = 0.0, mmd_f1 = 0.0;
    double nna_cd = 0.0, nna_emd = 0.0, nna_f1 = 0.0;
    // settings
    double tau = 1e-2;
    int grid_resolution = 28;
    int emd_n_exact = 512;
    double emd_eps_factor = 0.002;
    int emd_iters = 500;
    std::uint64_t seed = 0;

    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

MetricsReport evaluate_sets(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
                            double tau, int grid_resolution, const EmdOptions& opt,
                            std::uint64_t seed);

} // namespace flowmix::metrics
