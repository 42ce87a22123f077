#include "flowmix/flow.hpp"

#include <cmath>

namespace flowmix::flow {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_finite(const Tensor& t, const char* what, int layer) {
    for (double v : t.data())
        if (!std::isfinite(v))
            throw NumericError(std::string(what) + " non-finite at layer " + std::to_string(layer));
}
} // namespace

CouplingNet::CouplingNet(int d, int hidden, int out_dim, bool conditional, Rng& rng)
    : l1(d, hidden, rng), l2(hidden, hidden, rng), out(hidden, out_dim, rng, /*zero_init=*/true),
      bn1(hidden), is_conditional(conditional) {
    if (conditional) {
        film_gain = nn::Linear(hidden, hidden, rng, /*zero_init=*/true);
        film_shift = nn::Linear(hidden, hidden, rng, /*zero_init=*/true);
    }
}

Tensor CouplingNet::run(const Tensor& masked, const Tensor& cond, bool train) const {
    Tensor h = l2(ad::swish(bn1(l1(masked), train)));
    if (is_conditional) {
        if (!cond.defined()) throw ConfigError("conditional coupling net called without condition");
        Tensor g = ad::add_scalar(film_gain(cond), 1.0);
        Tensor s = film_shift(cond);
        h = ad::add(ad::mul(h, g), s);
    }
    return out(ad::relu(h));
}

void CouplingNet::register_params(ParamRegistry& reg, const std::string& prefix) const {
    l1.register_params(reg, prefix + ".l1");
    bn1.register_params(reg, prefix + ".bn1");
    l2.register_params(reg, prefix + ".l2");
    if (is_conditional) {
        film_gain.register_params(reg, prefix + ".film_gain");
        film_shift.register_params(reg, prefix + ".film_shift");
    }
    out.register_params(reg, prefix + ".out");
}

CouplingLayer::CouplingLayer(int d, std::vector<int> pass_idx, int hidden, bool conditional, Rng& rng)
    : d_(d), pass_idx_(std::move(pass_idx)) {
    if (d < 2) throw ConfigError("coupling layer needs d >= 2");
    std::vector<bool> is_pass(d, false);
    for (int i : pass_idx_) is_pass[i] = true;
    for (int i = 0; i < d; ++i)
        if (!is_pass[i]) trans_idx_.push_back(i);
    if (pass_idx_.empty() || trans_idx_.empty())
        throw ConfigError("coupling split must be a proper partition");
    std::vector<double> m(d, 0.0);
    for (int i : pass_idx_) m[i] = 1.0;
    mask_ = Tensor::from(1, d, m);
    const int k = static_cast<int>(trans_idx_.size());
    scale_net = CouplingNet(d, hidden, k, conditional, rng);
    translate_net = CouplingNet(d, hidden, k, conditional, rng);
}

std::pair<Tensor, Tensor> CouplingLayer::nets(const Tensor& full, const Tensor& cond, bool train) const {
    Tensor masked = ad::mul_row(full, mask_);
    Tensor log_s = ad::scale(ad::tanh(scale_net.run(masked, cond, train)), alpha);
    Tensor t = translate_net.run(masked, cond, train);
    return {log_s, t};
}

std::pair<Tensor, Tensor> CouplingLayer::forward(const Tensor& y, const Tensor& cond, bool train) const {
    auto [log_s, t] = nets(y, cond, train);
    Tensor yk = ad::select_cols(y, trans_idx_);
    Tensor xk = ad::add(ad::mul(yk, ad::exp(log_s)), t);
    Tensor x = ad::merge_cols(d_, pass_idx_, ad::select_cols(y, pass_idx_), trans_idx_, xk);
    return {x, ad::sum_rows(log_s)};
}

std::pair<Tensor, Tensor> CouplingLayer::inverse(const Tensor& x, const Tensor& cond, bool train) const {
    auto [log_s, t] = nets(x, cond, train); // pass coords identical in both directions
    Tensor xk = ad::select_cols(x, trans_idx_);
    Tensor yk = ad::mul(ad::sub(xk, t), ad::exp(ad::neg(log_s)));
    Tensor y = ad::merge_cols(d_, pass_idx_, ad::select_cols(x, pass_idx_), trans_idx_, yk);
    return {y, ad::neg(ad::sum_rows(log_s))};
}

void CouplingLayer::register_params(ParamRegistry& reg, const std::string& prefix) const {
    scale_net.register_params(reg, prefix + ".s");
    translate_net.register_params(reg, prefix + ".t");
}

ElementwiseAffineLayer::ElementwiseAffineLayer(int d) : d_(d) {
    log_s = Tensor::zeros(1, d, true);
    t = Tensor::zeros(1, d, true);
}

ElementwiseAffineLayer::ElementwiseAffineLayer(int d, const std::vector<double>& ls,
                                               const std::vector<double>& tt)
    : ElementwiseAffineLayer(d) {
    log_s.data() = ls;
    t.data() = tt;
}

std::pair<Tensor, Tensor> ElementwiseAffineLayer::forward(const Tensor& y, const Tensor&, bool) const {
    Tensor x = ad::add_row(ad::mul_row(y, ad::exp(log_s)), t);
    Tensor ones = Tensor::constant(y.rows(), 1, 1.0);
    Tensor ld = ad::matmul(ones, ad::sum_rows(ad::sum_cols(log_s)));
    return {x, ld};
}

std::pair<Tensor, Tensor> ElementwiseAffineLayer::inverse(const Tensor& x, const Tensor&, bool) const {
    Tensor y = ad::mul_row(ad::sub_row(x, t), ad::exp(ad::neg(log_s)));
    Tensor ones = Tensor::constant(x.rows(), 1, 1.0);
    Tensor ld = ad::matmul(ones, ad::neg(ad::sum_rows(ad::sum_cols(log_s))));
    return {y, ld};
}

void ElementwiseAffineLayer::register_params(ParamRegistry& reg, const std::string& prefix) const {
    reg.add(prefix + ".log_s", log_s);
    reg.add(prefix + ".t", t);
}

ConditionEncoder::ConditionEncoder(int cond_dim_, int width_, Rng& rng)
    : l1(cond_dim_, width_, rng), l2(width_, width_, rng), bn(width_), cond_dim(cond_dim_), width(width_) {}

Tensor ConditionEncoder::encode(const Tensor& z, bool train) const {
    return l2(ad::swish(bn(l1(z), train)));
}

void ConditionEncoder::register_params(ParamRegistry& reg, const std::string& prefix) const {
    l1.register_params(reg, prefix + ".l1");
    bn.register_params(reg, prefix + ".bn");
    l2.register_params(reg, prefix + ".l2");
}

GaussianBase GaussianBase::standard(int d) {
    GaussianBase b;
    b.d = d;
    return b;
}

GaussianBase GaussianBase::conditional(int d, int cond_dim, int hidden, Rng& rng) {
    GaussianBase b;
    b.d = d;
    b.is_conditional = true;
    b.mu_l1 = nn::Linear(cond_dim, hidden, rng);
    b.mu_l2 = nn::Linear(hidden, d, rng, /*zero_init=*/true);
    b.lv_l1 = nn::Linear(cond_dim, hidden, rng);
    b.lv_l2 = nn::Linear(hidden, d, rng, /*zero_init=*/true);
    return b;
}

std::pair<Tensor, Tensor> GaussianBase::params(const Tensor& z, int rows) const {
    if (!is_conditional) return {Tensor::zeros(rows, d), Tensor::zeros(rows, d)};
    if (!z.defined()) throw ConfigError("conditional base called without condition");
    Tensor mu = mu_l2(ad::swish(mu_l1(z)));
    Tensor logvar = ad::scale(ad::tanh(lv_l2(ad::swish(lv_l1(z)))), logvar_bound);
    return {mu, logvar};
}

Tensor GaussianBase::log_pdf(const Tensor& y, const Tensor& mu, const Tensor& logvar) {
    Tensor diff = ad::sub(y, mu);
    Tensor quad = ad::mul(ad::square(diff), ad::exp(ad::neg(logvar)));
    Tensor per_dim = ad::add_scalar(ad::add(quad, logvar), kLog2Pi);
    return ad::scale(ad::sum_rows(per_dim), -0.5);
}

void GaussianBase::register_params(ParamRegistry& reg, const std::string& prefix) const {
    if (!is_conditional) return;
    mu_l1.register_params(reg, prefix + ".mu_l1");
    mu_l2.register_params(reg, prefix + ".mu_l2");
    lv_l1.register_params(reg, prefix + ".lv_l1");
    lv_l2.register_params(reg, prefix + ".lv_l2");
}

FlowStack::FlowStack(int d, std::vector<std::unique_ptr<FlowLayer>> layers,
                     std::optional<ConditionEncoder> cond_enc)
    : d_(d), layers_(std::move(layers)), cond_enc_(std::move(cond_enc)) {}

Tensor FlowStack::encode_condition(const Tensor& z, bool train) const {
    if (!cond_enc_) return Tensor();
    if (!z.defined()) throw ConfigError("conditional flow called without condition");
    return cond_enc_->encode(z, train);
}

std::pair<Tensor, Tensor> FlowStack::inverse_pass(const Tensor& x, const Tensor& cond, bool train) const {
    Tensor cur = x;
    Tensor logdet = Tensor::zeros(x.rows(), 1);
    for (int i = depth() - 1; i >= 0; --i) {
        auto [y, ld] = layers_[i]->inverse(cur, cond, train);
        check_finite(y, "inverse", i);
        cur = y;
        logdet = ad::add(logdet, ld);
    }
    return {cur, logdet};
}

std::pair<Tensor, Tensor> FlowStack::forward_pass(const Tensor& y, const Tensor& cond, bool train) const {
    Tensor cur = y;
    Tensor logdet = Tensor::zeros(y.rows(), 1);
    for (int i = 0; i < depth(); ++i) {
        auto [x, ld] = layers_[i]->forward(cur, cond, train);
        check_finite(x, "forward", i);
        cur = x;
        logdet = ad::add(logdet, ld);
    }
    return {cur, logdet};
}

void FlowStack::register_params(ParamRegistry& reg, const std::string& prefix) const {
    if (cond_enc_) cond_enc_->register_params(reg, prefix + ".cond");
    for (int i = 0; i < depth(); ++i)
        layers_[i]->register_params(reg, prefix + ".layer" + std::to_string(i));
}

FlowStack make_coupling_stack(int d, int n_layers, int hidden, int cond_dim, Rng& rng) {
    std::vector<std::unique_ptr<FlowLayer>> layers;
    std::vector<int> even, odd;
    for (int i = 0; i < d; ++i) (i % 2 == 0 ? even : odd).push_back(i);
    const bool conditional = cond_dim > 0;
    for (int i = 0; i < n_layers; ++i) {
        const auto& pass = (i % 2 == 0) ? even : odd;
        layers.push_back(std::make_unique<CouplingLayer>(d, pass, hidden, conditional, rng));
    }
    std::optional<ConditionEncoder> enc;
    if (conditional) enc.emplace(cond_dim, hidden, rng);
    return FlowStack(d, std::move(layers), std::move(enc));
}

FlowStack make_affine_stack(int d, int n_layers) {
    std::vector<std::unique_ptr<FlowLayer>> layers;
    for (int i = 0; i < n_layers; ++i) layers.push_back(std::make_unique<ElementwiseAffineLayer>(d));
    return FlowStack(d, std::move(layers));
}

Tensor flow_log_prob(const FlowStack& flow, const GaussianBase& base, const Tensor& x,
                     const Tensor& z, int points_per_shape, bool train) {
    const int n_shapes = z.defined() ? z.rows() : 1;
    if (points_per_shape * n_shapes != x.rows())
        throw DimensionError("flow_log_prob: rows != shapes * points_per_shape");
    Tensor cond;
    if (flow.conditional()) {
        cond = flow.encode_condition(z, train);
        cond = ad::repeat_rows(cond, points_per_shape);
    }
    auto [y, logdet_inv] = flow.inverse_pass(x, cond, train);
    auto [mu, logvar] = base.params(z, n_shapes);
    if (base.is_conditional || z.defined()) {
        mu = ad::repeat_rows(mu, points_per_shape);
        logvar = ad::repeat_rows(logvar, points_per_shape);
    } else {
        mu = Tensor::zeros(x.rows(), base.d);
        logvar = Tensor::zeros(x.rows(), base.d);
    }
    return ad::add(GaussianBase::log_pdf(y, mu, logvar), logdet_inv);
}

Tensor flow_sample(const FlowStack& flow, const GaussianBase& base, const Tensor& z, int n, Rng& rng) {
    if (n < 1) throw InputError("flow_sample: n must be >= 1");
    auto [mu1, logvar1] = base.params(z, 1);
    Tensor y = Tensor::zeros(n, flow.dim());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < flow.dim(); ++c)
            y.at(r, c) = mu1(0, c) + std::exp(0.5 * logvar1(0, c)) * rng.normal();
    Tensor cond;
    if (flow.conditional()) cond = ad::repeat_rows(flow.encode_condition(z, false), n);
    auto [x, ld] = flow.forward_pass(y, cond, false);
    (void)ld;
    return x;
}

} // namespace flowmix::flow
