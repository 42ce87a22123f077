#pragma once

#include <string>
#include <vector>

#include "flowmix/nn.hpp"

namespace flowmix::enc {

using ad::Tensor;
using nn::ParamRegistry;

// Gaussian posterior over the latent shape code: one row per shape.
struct ShapePosterior {
    Tensor mu;     // B x L
    Tensor logvar; // B x L, clamped to [-10, 10]

    int latent_dim() const { return mu.cols(); }
    int batch() const { return mu.rows(); }

    // Reparameterized draw z = mu + exp(logvar/2) * eps; differentiable in mu
    // and logvar.
    Tensor sample(Rng& rng) const;

    // Full Gaussian entropy per shape (B x 1): L/2 (1 + log 2pi) + 1/2 sum logvar.
    Tensor entropy() const;
};

// Permutation-invariant set encoder: pointwise MLP, max-pool over the points
// of each shape, then a head MLP emitting (mu, logvar). Batchnorm in the
// pointwise stack runs over the flattened point batch.
class SetEncoder {
public:
    SetEncoder() = default;
    SetEncoder(int d, std::vector<int> widths, int latent_dim, Rng& rng);

    // x holds points_per_shape consecutive rows per shape.
    ShapePosterior encode(const Tensor& x, int points_per_shape, bool train) const;

    int latent_dim() const { return latent_; }
    void register_params(ParamRegistry& reg, const std::string& prefix) const;

private:
    int d_ = 0, latent_ = 0;
    std::vector<int> widths_;
    std::vector<nn::Linear> point_layers_;
    std::vector<nn::BatchNorm1d> point_bns_;
    nn::Linear head1_, head2_; // pooled -> pooled width -> 2L
    nn::BatchNorm1d head_bn_;
};

} // namespace flowmix::enc
