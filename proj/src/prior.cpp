#include "flowmix/prior.hpp"

namespace flowmix::prior {

PriorFlow::PriorFlow(int latent_dim, int n_layers, int hidden, int cond_dim, Rng& rng)
    : latent_(latent_dim) {
    if (latent_dim < 2) throw ConfigError("prior flow needs latent dim >= 2 for coupling layers");
    flow_ = flow::make_coupling_stack(latent_dim, n_layers, hidden, cond_dim, rng);
    base_ = flow::GaussianBase::standard(latent_dim);
}

Tensor PriorFlow::log_prob(const Tensor& z, const Tensor& condition, bool train) const {
    if (flow_.conditional() && !condition.defined())
        throw ConfigError("conditional prior needs a condition");
    if (!flow_.conditional() && condition.defined())
        throw ConfigError("condition passed to unconditional prior");
    Tensor cond;
    if (flow_.conditional()) cond = flow_.encode_condition(condition, train);
    auto [eps, logdet_inv] = flow_.inverse_pass(z, cond, train);
    Tensor mu = Tensor::zeros(z.rows(), latent_);
    Tensor lv = Tensor::zeros(z.rows(), latent_);
    return ad::add(flow::GaussianBase::log_pdf(eps, mu, lv), logdet_inv);
}

Tensor PriorFlow::sample(int n, const Tensor& condition, Rng& rng) const {
    if (n < 1) throw InputError("prior sample: n must be >= 1");
    if (flow_.conditional() && !condition.defined())
        throw ConfigError("conditional prior needs a condition");
    if (!flow_.conditional() && condition.defined())
        throw ConfigError("condition passed to unconditional prior");
    Tensor eps = Tensor::zeros(n, latent_);
    for (double& v : eps.data()) v = rng.normal();
    Tensor cond;
    if (flow_.conditional()) {
        Tensor enc = flow_.encode_condition(condition, false);
        cond = (enc.rows() == n) ? enc : ad::repeat_rows(enc, n);
    }
    auto [z, ld] = flow_.forward_pass(eps, cond, false);
    (void)ld;
    return z;
}

Tensor PriorFlow::loss(const enc::ShapePosterior& post, const Tensor& z_sample,
                       const Tensor& condition, bool train) const {
    Tensor neg_h = ad::neg(post.entropy());
    Tensor lp = log_prob(z_sample, condition, train);
    return ad::sub(neg_h, lp);
}

void PriorFlow::register_params(ParamRegistry& reg, const std::string& prefix) const {
    flow_.register_params(reg, prefix + ".flow");
}

} // namespace flowmix::prior
