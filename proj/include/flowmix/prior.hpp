#pragma once

#include "flowmix/encoder.hpp"
#include "flowmix/flow.hpp"

namespace flowmix::prior {

using ad::Tensor;
using nn::ParamRegistry;

// Learned prior over shape codes: a coupling-layer flow with a standard normal
// base, optionally conditioned on an external condition vector. With all
// layers at their identity initialization this is exactly N(0, I).
class PriorFlow {
public:
    PriorFlow() = default;
    PriorFlow(int latent_dim, int n_layers, int hidden, int cond_dim, Rng& rng);

    bool conditional() const { return flow_.conditional(); }
    int latent_dim() const { return latent_; }

    // log p_psi(z) per row; `condition` one row per z row (undefined when
    // unconditional).
    Tensor log_prob(const Tensor& z, const Tensor& condition, bool train) const;

    // z = g_psi(eps), eps ~ N(0, I). Throws ConfigError when a condition is
    // passed to an unconditional prior (and vice versa).
    Tensor sample(int n, const Tensor& condition, Rng& rng) const;

    // L_Prior rows: -H(posterior) - log p_psi(z_sample); differentiable in both
    // the posterior parameters (through z) and the prior parameters.
    Tensor loss(const enc::ShapePosterior& post, const Tensor& z_sample, const Tensor& condition,
                bool train) const;

    void register_params(ParamRegistry& reg, const std::string& prefix) const;

private:
    int latent_ = 0;
    flow::FlowStack flow_;
    flow::GaussianBase base_;
};

} // namespace flowmix::prior
