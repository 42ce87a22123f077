#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flowmix/nn.hpp"

namespace flowmix::flow {

using ad::Tensor;
using nn::ParamRegistry;

// One invertible block of a flow. forward maps base space -> data space and
// returns (x, logdet of the forward Jacobian); inverse returns (y, logdet of
// the inverse Jacobian). `cond` is a per-row condition encoding (B x K) or an
// undefined tensor for unconditional layers.
//
// Batchnorm inside the nets follows `train`: density evaluation during
// training runs in train mode (batch statistics, running stats updated), while
// sampling passes always run with running statistics so the sampling map is a
// fixed deterministic function.
struct FlowLayer {
    virtual ~FlowLayer() = default;
    virtual std::pair<Tensor, Tensor> forward(const Tensor& y, const Tensor& cond, bool train) const = 0;
    virtual std::pair<Tensor, Tensor> inverse(const Tensor& x, const Tensor& cond, bool train) const = 0;
    virtual bool conditional() const = 0;
    virtual void register_params(ParamRegistry& reg, const std::string& prefix) const = 0;
};

// Scale or translation stack of a coupling layer:
//   masked input -> linear(d->H) -> batchnorm -> swish -> linear(H->H)
//   [FiLM: h <- (1 + g(cond)) * h + b(cond), heads zero-initialized]
//   -> relu -> linear(H->k, zero-initialized)
struct CouplingNet {
    nn::Linear l1, l2, out;
    nn::BatchNorm1d bn1;
    nn::Linear film_gain, film_shift; // only when conditional
    bool is_conditional = false;

    CouplingNet() = default;
    CouplingNet(int d, int hidden, int out_dim, bool conditional, Rng& rng);

    Tensor run(const Tensor& masked, const Tensor& cond, bool train) const;
    void register_params(ParamRegistry& reg, const std::string& prefix) const;
};

// Affine coupling layer. Coordinates in `pass_idx` go through unchanged; the
// complement is scaled by exp(alpha * tanh(raw_s)) and translated. The tanh
// bound keeps the log-det from exploding early in training.
class CouplingLayer final : public FlowLayer {
public:
    CouplingLayer(int d, std::vector<int> pass_idx, int hidden, bool conditional, Rng& rng);

    std::pair<Tensor, Tensor> forward(const Tensor& y, const Tensor& cond, bool train) const override;
    std::pair<Tensor, Tensor> inverse(const Tensor& x, const Tensor& cond, bool train) const override;
    bool conditional() const override { return scale_net.is_conditional; }
    void register_params(ParamRegistry& reg, const std::string& prefix) const override;

    const std::vector<int>& pass_indices() const { return pass_idx_; }
    const std::vector<int>& transform_indices() const { return trans_idx_; }

    CouplingNet scale_net, translate_net;
    double alpha = 5.0; // log-scale bound

private:
    // (log_s, t) for the transformed coordinates, computed from the masked input.
    std::pair<Tensor, Tensor> nets(const Tensor& full, const Tensor& cond, bool train) const;

    int d_;
    std::vector<int> pass_idx_, trans_idx_;
    Tensor mask_; // 1 x d, 1 on pass coordinates
};

// Per-dimension learnable affine map x = exp(log_s) * y + t. The only layer
// usable at d = 1; also serves as a hand-settable fixed map in tests.
class ElementwiseAffineLayer final : public FlowLayer {
public:
    explicit ElementwiseAffineLayer(int d);
    ElementwiseAffineLayer(int d, const std::vector<double>& log_s, const std::vector<double>& t);

    std::pair<Tensor, Tensor> forward(const Tensor& y, const Tensor& cond, bool train) const override;
    std::pair<Tensor, Tensor> inverse(const Tensor& x, const Tensor& cond, bool train) const override;
    bool conditional() const override { return false; }
    void register_params(ParamRegistry& reg, const std::string& prefix) const override;

    Tensor log_s, t; // 1 x d
private:
    int d_;
};

// Shared per-flow condition encoder: z -> linear(L->H) -> batchnorm -> swish
// -> linear(H->H). Feeds both FiLM modulation in every layer of the flow.
struct ConditionEncoder {
    nn::Linear l1, l2;
    nn::BatchNorm1d bn;
    int cond_dim = 0, width = 0;

    ConditionEncoder() = default;
    ConditionEncoder(int cond_dim_, int width_, Rng& rng);

    Tensor encode(const Tensor& z, bool train) const;
    void register_params(ParamRegistry& reg, const std::string& prefix) const;
};

// Gaussian base distribution, optionally with condition-dependent mean and
// diagonal covariance. Conditional nets are zero-initialized at the output so
// the base starts as N(0, I); log-variances are bounded by a tanh squashing.
struct GaussianBase {
    bool is_conditional = false;
    int d = 0;
    nn::Linear mu_l1, mu_l2;
    nn::Linear lv_l1, lv_l2;
    double logvar_bound = 5.0;

    GaussianBase() = default;
    static GaussianBase standard(int d);
    static GaussianBase conditional(int d, int cond_dim, int hidden, Rng& rng);

    // (mu, logvar), each B x d, from per-shape conditions; unconditional base
    // ignores z and needs a row count.
    std::pair<Tensor, Tensor> params(const Tensor& z, int rows) const;

    // Row-wise diagonal Gaussian log-density.
    static Tensor log_pdf(const Tensor& y, const Tensor& mu, const Tensor& logvar);

    void register_params(ParamRegistry& reg, const std::string& prefix) const;
};

// A stack of invertible layers over dimension d with one optional condition
// encoder shared by all layers.
class FlowStack {
public:
    FlowStack() = default;
    FlowStack(int d, std::vector<std::unique_ptr<FlowLayer>> layers,
              std::optional<ConditionEncoder> cond_enc = std::nullopt);

    int dim() const { return d_; }
    int depth() const { return static_cast<int>(layers_.size()); }
    bool conditional() const { return cond_enc_.has_value(); }
    const ConditionEncoder& condition_encoder() const { return *cond_enc_; }

    // Encode a per-shape condition batch into the per-flow encoding (B x H).
    Tensor encode_condition(const Tensor& z, bool train) const;

    // x -> (y, logdet of inverse). `cond` is a per-row encoding aligned with x
    // rows (undefined for unconditional stacks). Throws NumericError naming the
    // layer when an intermediate goes non-finite.
    std::pair<Tensor, Tensor> inverse_pass(const Tensor& x, const Tensor& cond, bool train) const;
    std::pair<Tensor, Tensor> forward_pass(const Tensor& y, const Tensor& cond, bool train) const;

    void register_params(ParamRegistry& reg, const std::string& prefix) const;

    const FlowLayer& layer(int i) const { return *layers_[i]; }

private:
    int d_ = 0;
    std::vector<std::unique_ptr<FlowLayer>> layers_;
    std::optional<ConditionEncoder> cond_enc_;
};

// Alternating-parity conditional/unconditional coupling stack. Even layers
// pass even coordinate indices through, odd layers pass odd indices.
FlowStack make_coupling_stack(int d, int n_layers, int hidden, int cond_dim, Rng& rng);
// Stack of elementwise affine layers (for d = 1 toys).
FlowStack make_affine_stack(int d, int n_layers);

// log p(x) under the flow; x holds `points_per_shape` consecutive rows per
// shape, z is one row per shape (undefined for the unconditional case).
Tensor flow_log_prob(const FlowStack& flow, const GaussianBase& base, const Tensor& x,
                     const Tensor& z, int points_per_shape, bool train);

// Draw n i.i.d. points conditioned on a single z row (or unconditional).
Tensor flow_sample(const FlowStack& flow, const GaussianBase& base, const Tensor& z, int n, Rng& rng);

} // namespace flowmix::flow
