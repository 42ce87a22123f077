#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "flowmix/autodiff.hpp"

namespace testutil {

using flowmix::ad::Tensor;

// Central finite differences of a scalar-valued function with respect to every
// entry of `x`, compared against the analytic gradient produced by backward().
// `make_loss` must rebuild the graph from scratch each call (the tape is
// single-use). Returns the max relative error over all entries.
inline double finite_diff_max_rel_err(const std::function<Tensor(Tensor&)>& make_loss,
                                      const std::vector<double>& x0, int rows, int cols,
                                      double h = 1e-6) {
    // analytic
    Tensor x = Tensor::from(rows, cols, x0, true);
    Tensor loss = make_loss(x);
    flowmix::ad::backward(loss);
    const std::vector<double> g = x.grad();

    double max_rel = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        std::vector<double> xp = x0, xm = x0;
        xp[i] += h;
        xm[i] -= h;
        Tensor tp = Tensor::from(rows, cols, xp, true);
        Tensor tm = Tensor::from(rows, cols, xm, true);
        const double fp = make_loss(tp).item();
        const double fm = make_loss(tm).item();
        const double num = (fp - fm) / (2.0 * h);
        const double denom = std::max({std::abs(num), std::abs(g[i]), 1e-4});
        max_rel = std::max(max_rel, std::abs(num - g[i]) / denom);
    }
    return max_rel;
}

inline std::vector<double> random_vec(flowmix::Rng& rng, std::size_t n, double lo = -1.0,
                                      double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

} // namespace testutil
