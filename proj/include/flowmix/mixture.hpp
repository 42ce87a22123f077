#pragma once

#include <string>
#include <vector>

#include "flowmix/flow.hpp"

namespace flowmix::mix {

using ad::Tensor;
using flow::FlowStack;
using flow::GaussianBase;
using nn::ParamRegistry;

// Per-point posterior over mixture components. Rows sum to 1; argmax ties are
// broken toward the lowest component index.
struct Responsibilities {
    int n_points = 0;
    int m = 0;
    std::vector<double> r;   // n_points x m, row-major
    std::vector<int> argmax; // n_points

    double at(int point, int comp) const { return r[static_cast<std::size_t>(point) * m + comp]; }
};

struct SizingReport {
    int m = 0;
    int n_ref = 0, h_ref = 0;
    int n_hat = 0, h_hat = 0;
    std::size_t param_count = 0;
    std::size_t ref_param_count = 0;
};

// p(x|z) as a mixture of m conditional flows sharing one conditional Gaussian
// base, with z-dependent weights. During warm-up the weights are hard-fixed to
// 1/m and the weight network receives no gradient.
class MixtureFlowDecoder {
public:
    MixtureFlowDecoder() = default;
    // d >= 2 builds conditional coupling stacks; d == 1 builds elementwise
    // affine stacks (conditioning then enters through the base only).
    MixtureFlowDecoder(int d, int m, int n_layers, int hidden, int cond_dim, Rng& rng);

    int dim() const { return d_; }
    int components() const { return m_; }
    int layers_per_flow() const { return n_layers_; }
    int hidden() const { return hidden_; }
    int cond_dim() const { return cond_dim_; }

    bool warmup_active() const { return warmup_; }
    void set_warmup(bool on) { warmup_ = on; }

    // log w_i(z), B x m. Uniform (constant, no gradient) while warm-up is on
    // or when m == 1.
    Tensor log_weights(const Tensor& z, bool train) const;

    // Per-component log-densities, (shapes * points_per_shape) x m.
    Tensor component_log_probs(const Tensor& x, const Tensor& z, int points_per_shape, bool train) const;

    // log p(x|z) = logsumexp_i [log w_i(z) + log p_i(x|z)], column vector.
    Tensor log_prob(const Tensor& x, const Tensor& z, int points_per_shape, bool train) const;

    Responsibilities responsibilities(const Tensor& x, const Tensor& z, int points_per_shape) const;

    // Ancestral sampling for one shape code (1 x L): component per point from
    // Categorical(w(z)), then the component flow maps base samples out.
    std::pair<Tensor, std::vector<int>> sample(const Tensor& z, int n, Rng& rng) const;

    // Ancestral sampling where each component flow may receive its own shape
    // code (per-component interpolation); weights and base use `z_shared`.
    std::pair<Tensor, std::vector<int>> sample_per_component(const Tensor& z_shared,
                                                             const std::vector<Tensor>& z_per_flow,
                                                             int n, Rng& rng) const;

    // Average Jensen gap  E_x[ sum_i w_i (-log p_i) - (-log sum_i w_i p_i) ] >= 0.
    double jensen_gap(const Tensor& x, const Tensor& z, int points_per_shape) const;

    void register_params(ParamRegistry& reg, const std::string& prefix) const;
    std::vector<Tensor> weight_net_params() const;

    const FlowStack& flow(int i) const { return flows_[i]; }
    const GaussianBase& base() const { return base_; }

private:
    int d_ = 0, m_ = 0, n_layers_ = 0, hidden_ = 0, cond_dim_ = 0;
    bool warmup_ = false;
    std::vector<FlowStack> flows_;
    GaussianBase base_;
    nn::Linear w1_, w2_; // weight net z -> 64 -> m, present when m > 1
};

// Parameter-matched sizing: each component gets ceil(n_ref / sqrt(m)) layers
// and the largest hidden width keeping the mixture strictly below the
// single-flow reference parameter count.
MixtureFlowDecoder sized_mixture(int m, int n_ref, int h_ref, int d, int cond_dim, Rng& rng,
                                 SizingReport* report = nullptr);

std::size_t decoder_param_count(int d, int m, int n_layers, int hidden, int cond_dim);

} // namespace flowmix::mix
