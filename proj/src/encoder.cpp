#include "flowmix/encoder.hpp"

#include <cmath>

namespace flowmix::enc {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

Tensor ShapePosterior::sample(Rng& rng) const {
    Tensor eps = Tensor::zeros(mu.rows(), mu.cols());
    for (double& v : eps.data()) v = rng.normal();
    return ad::add(mu, ad::mul(ad::exp(ad::scale(logvar, 0.5)), eps));
}

Tensor ShapePosterior::entropy() const {
    const double c = 0.5 * latent_dim() * (1.0 + kLog2Pi);
    return ad::add_scalar(ad::scale(ad::sum_rows(logvar), 0.5), c);
}

SetEncoder::SetEncoder(int d, std::vector<int> widths, int latent_dim, Rng& rng)
    : d_(d), latent_(latent_dim), widths_(std::move(widths)) {
    if (widths_.empty()) throw ConfigError("encoder needs at least one pointwise layer");
    int in = d;
    for (int w : widths_) {
        point_layers_.emplace_back(in, w, rng);
        point_bns_.emplace_back(w);
        in = w;
    }
    const int pooled = widths_.back();
    head1_ = nn::Linear(pooled, pooled, rng);
    head_bn_ = nn::BatchNorm1d(pooled);
    head2_ = nn::Linear(pooled, 2 * latent_dim, rng);
}

ShapePosterior SetEncoder::encode(const Tensor& x, int points_per_shape, bool train) const {
    if (points_per_shape < 1 || x.rows() % points_per_shape != 0)
        throw InputError("encoder: rows not divisible by points_per_shape");
    if (x.rows() == 0) throw InputError("encoder: empty point cloud");
    if (x.cols() != d_) throw DimensionError("encoder: point dimension mismatch");

    Tensor h = x;
    for (std::size_t i = 0; i < point_layers_.size(); ++i)
        h = ad::swish(point_bns_[i](point_layers_[i](h), train));
    Tensor pooled = ad::group_max(h, points_per_shape);
    Tensor g = ad::swish(head_bn_(head1_(pooled), train));
    Tensor out = head2_(g);

    std::vector<int> mu_idx(latent_), lv_idx(latent_);
    for (int i = 0; i < latent_; ++i) { mu_idx[i] = i; lv_idx[i] = latent_ + i; }
    ShapePosterior post;
    post.mu = ad::select_cols(out, mu_idx);
    post.logvar = ad::clamp(ad::select_cols(out, lv_idx), -10.0, 10.0);
    return post;
}

void SetEncoder::register_params(ParamRegistry& reg, const std::string& prefix) const {
    for (std::size_t i = 0; i < point_layers_.size(); ++i) {
        point_layers_[i].register_params(reg, prefix + ".pt" + std::to_string(i));
        point_bns_[i].register_params(reg, prefix + ".ptbn" + std::to_string(i));
    }
    head1_.register_params(reg, prefix + ".head1");
    head_bn_.register_params(reg, prefix + ".head_bn");
    head2_.register_params(reg, prefix + ".head2");
}

} // namespace flowmix::enc
