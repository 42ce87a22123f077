#include "flowmix/nn.hpp"

#include <cmath>

namespace flowmix::nn {

Linear::Linear(int in_dim, int out_dim, Rng& rng, bool zero_init) : in(in_dim), out(out_dim) {
    std::vector<double> w(static_cast<std::size_t>(in_dim) * out_dim, 0.0);
    if (!zero_init) {
        double bound = std::sqrt(6.0 / in_dim);
        for (double& v : w) v = rng.uniform(-bound, bound);
    }
    W = Tensor::from(in_dim, out_dim, std::move(w), true);
    b = Tensor::zeros(1, out_dim, true);
}

BatchNorm1d::BatchNorm1d(int features_) : features(features_) {
    gamma = Tensor::constant(1, features_, 1.0);
    gamma.node()->requires_grad = true;
    beta = Tensor::zeros(1, features_, true);
    run_mean = Tensor::zeros(1, features_);
    run_var = Tensor::constant(1, features_, 1.0);
}

Tensor BatchNorm1d::operator()(const Tensor& x, bool train) const {
    if (x.cols() != features) throw DimensionError("batchnorm: feature count mismatch");
    if (train) {
        if (x.rows() < 2) throw DimensionError("batchnorm: train mode needs batch size >= 2");
        Tensor mu = ad::mean_cols(x);
        Tensor xc = ad::sub_row(x, mu);
        Tensor var = ad::mean_cols(ad::square(xc));
        Tensor norm = ad::mul_row(xc, ad::rsqrt(ad::add_scalar(var, eps)));
        // Running stats track the batch statistics outside the graph.
        auto& rm = const_cast<Tensor&>(run_mean).data();
        auto& rv = const_cast<Tensor&>(run_var).data();
        for (int c = 0; c < features; ++c) {
            rm[c] = (1.0 - momentum) * rm[c] + momentum * mu.data()[c];
            rv[c] = (1.0 - momentum) * rv[c] + momentum * var.data()[c];
        }
        return ad::add_row(ad::mul_row(norm, gamma), beta);
    }
    Tensor mu = Tensor::from(1, features, run_mean.data());
    Tensor sd_inv = Tensor::zeros(1, features);
    for (int c = 0; c < features; ++c)
        sd_inv.data()[c] = 1.0 / std::sqrt(run_var.data()[c] + eps);
    Tensor norm = ad::mul_row(ad::sub_row(x, mu), sd_inv);
    return ad::add_row(ad::mul_row(norm, gamma), beta);
}

void Adam::step(const std::vector<Tensor>& params) {
    if (slots_.size() != params.size()) slots_.resize(params.size());
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = const_cast<Tensor&>(params[i]);
        auto& s = slots_[i];
        if (s.m.empty()) {
            s.m.assign(p.size(), 0.0);
            s.v.assign(p.size(), 0.0);
        }
        if (s.m.size() != p.size()) throw DimensionError("adam: state/param shape mismatch");
        const auto& g = p.grad();
        auto& d = p.data();
        for (std::size_t j = 0; j < d.size(); ++j) {
            s.m[j] = beta1 * s.m[j] + (1.0 - beta1) * g[j];
            s.v[j] = beta2 * s.v[j] + (1.0 - beta2) * g[j] * g[j];
            const double mhat = s.m[j] / bc1;
            const double vhat = s.v[j] / bc2;
            d[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double Adam::clip_grad_norm(const std::vector<Tensor>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        for (double g : const_cast<Tensor&>(p).grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (const auto& p : params)
            for (double& g : const_cast<Tensor&>(p).grad()) g *= s;
    }
    return norm;
}

} // namespace flowmix::nn
