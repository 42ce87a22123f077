#include "flowmix/mixture.hpp"

#include <cmath>
#include <limits>

namespace flowmix::mix {

namespace {
constexpr int kWeightNetHidden = 64;

flow::FlowStack make_component(int d, int n_layers, int hidden, int cond_dim, Rng& rng) {
    if (d >= 2) return flow::make_coupling_stack(d, n_layers, hidden, cond_dim, rng);
    return flow::make_affine_stack(d, n_layers);
}
} // namespace

MixtureFlowDecoder::MixtureFlowDecoder(int d, int m, int n_layers, int hidden, int cond_dim, Rng& rng)
    : d_(d), m_(m), n_layers_(n_layers), hidden_(hidden), cond_dim_(cond_dim) {
    if (m < 1) throw ConfigError("mixture needs m >= 1");
    for (int i = 0; i < m; ++i) flows_.push_back(make_component(d, n_layers, hidden, cond_dim, rng));
    if (cond_dim > 0)
        base_ = GaussianBase::conditional(d, cond_dim, std::max(8, hidden), rng);
    else
        base_ = GaussianBase::standard(d);
    if (m > 1) {
        w1_ = nn::Linear(cond_dim > 0 ? cond_dim : 1, kWeightNetHidden, rng);
        w2_ = nn::Linear(kWeightNetHidden, m, rng);
    }
}

Tensor MixtureFlowDecoder::log_weights(const Tensor& z, bool train) const {
    const int rows = z.defined() ? z.rows() : 1;
    if (m_ == 1) return Tensor::zeros(rows, 1);
    if (warmup_) return Tensor::constant(rows, m_, -std::log(static_cast<double>(m_)));
    Tensor in = z.defined() ? z : Tensor::zeros(rows, 1);
    Tensor logits = w2_(ad::swish(w1_(in)));
    (void)train;
    return ad::sub_col(logits, ad::logsumexp_rows(logits));
}

Tensor MixtureFlowDecoder::component_log_probs(const Tensor& x, const Tensor& z,
                                               int points_per_shape, bool train) const {
    const int n_shapes = z.defined() ? z.rows() : 1;
    if (n_shapes * points_per_shape != x.rows())
        throw DimensionError("mixture: rows != shapes * points_per_shape");
    auto [mu, logvar] = base_.params(z, n_shapes);
    Tensor mu_pts = ad::repeat_rows(mu, points_per_shape);
    Tensor lv_pts = ad::repeat_rows(logvar, points_per_shape);
    std::vector<Tensor> cols;
    for (int i = 0; i < m_; ++i) {
        Tensor cond;
        if (flows_[i].conditional())
            cond = ad::repeat_rows(flows_[i].encode_condition(z, train), points_per_shape);
        Tensor lp;
        try {
            auto [y, logdet_inv] = flows_[i].inverse_pass(x, cond, train);
            lp = ad::add(GaussianBase::log_pdf(y, mu_pts, lv_pts), logdet_inv);
        } catch (const NumericError& e) {
            throw NumericError("component " + std::to_string(i) + ": " + e.what());
        }
        cols.push_back(lp);
    }
    return ad::concat_cols(cols);
}

Tensor MixtureFlowDecoder::log_prob(const Tensor& x, const Tensor& z, int points_per_shape,
                                    bool train) const {
    Tensor comp = component_log_probs(x, z, points_per_shape, train);
    Tensor lw = log_weights(z, train);
    Tensor lw_pts = ad::repeat_rows(lw, points_per_shape);
    return ad::logsumexp_rows(ad::add(comp, lw_pts));
}

Responsibilities MixtureFlowDecoder::responsibilities(const Tensor& x, const Tensor& z,
                                                      int points_per_shape) const {
    Tensor comp = component_log_probs(x, z, points_per_shape, false);
    Tensor lw = log_weights(z, false);
    Tensor lw_pts = ad::repeat_rows(lw, points_per_shape);
    Tensor joint = ad::add(comp, lw_pts);

    Responsibilities out;
    out.n_points = x.rows();
    out.m = m_;
    out.r.resize(static_cast<std::size_t>(out.n_points) * m_);
    out.argmax.resize(out.n_points);
    for (int p = 0; p < out.n_points; ++p) {
        double mx = joint(p, 0);
        for (int i = 1; i < m_; ++i) mx = std::max(mx, joint(p, i));
        double s = 0.0;
        for (int i = 0; i < m_; ++i) s += std::exp(joint(p, i) - mx);
        int best = 0;
        double best_v = joint(p, 0);
        for (int i = 0; i < m_; ++i) {
            out.r[static_cast<std::size_t>(p) * m_ + i] = std::exp(joint(p, i) - mx) / s;
            if (joint(p, i) > best_v) { best_v = joint(p, i); best = i; }
        }
        out.argmax[p] = best;
    }
    return out;
}

std::pair<Tensor, std::vector<int>> MixtureFlowDecoder::sample(const Tensor& z, int n, Rng& rng) const {
    if (n < 1) throw InputError("mixture sample: n must be >= 1");
    Tensor lw = log_weights(z, false);
    std::vector<double> w(m_);
    for (int i = 0; i < m_; ++i) w[i] = std::exp(lw(0, i));

    // Component id per point, then base draws in point order so the stream is
    // independent of how points get grouped per flow.
    std::vector<int> ids(n);
    for (int p = 0; p < n; ++p) {
        double u = rng.u01(), acc = 0.0;
        int pick = m_ - 1;
        for (int i = 0; i < m_; ++i) {
            acc += w[i];
            if (u < acc) { pick = i; break; }
        }
        ids[p] = pick;
    }
    const int n_shapes = 1;
    auto [mu, logvar] = base_.params(z, n_shapes);
    Tensor y = Tensor::zeros(n, d_);
    for (int p = 0; p < n; ++p)
        for (int c = 0; c < d_; ++c)
            y.at(p, c) = mu(0, c) + std::exp(0.5 * logvar(0, c)) * rng.normal();

    Tensor out_pts = Tensor::zeros(n, d_);
    for (int i = 0; i < m_; ++i) {
        std::vector<int> rows;
        for (int p = 0; p < n; ++p)
            if (ids[p] == i) rows.push_back(p);
        if (rows.empty()) continue;
        Tensor yi = Tensor::zeros(static_cast<int>(rows.size()), d_);
        for (std::size_t k = 0; k < rows.size(); ++k)
            for (int c = 0; c < d_; ++c) yi.at(static_cast<int>(k), c) = y(rows[k], c);
        Tensor cond;
        if (flows_[i].conditional())
            cond = ad::repeat_rows(flows_[i].encode_condition(z, false), static_cast<int>(rows.size()));
        auto [xi, ld] = flows_[i].forward_pass(yi, cond, false);
        (void)ld;
        for (std::size_t k = 0; k < rows.size(); ++k)
            for (int c = 0; c < d_; ++c) out_pts.at(rows[k], c) = xi(static_cast<int>(k), c);
    }
    return {out_pts, ids};
}

std::pair<Tensor, std::vector<int>> MixtureFlowDecoder::sample_per_component(
    const Tensor& z_shared, const std::vector<Tensor>& z_per_flow, int n, Rng& rng) const {
    if (n < 1) throw InputError("mixture sample: n must be >= 1");
    if (static_cast<int>(z_per_flow.size()) != m_)
        throw DimensionError("sample_per_component: need one shape code per component");
    Tensor lw = log_weights(z_shared, false);
    std::vector<double> w(m_);
    for (int i = 0; i < m_; ++i) w[i] = std::exp(lw(0, i));

    std::vector<int> ids(n);
    for (int p = 0; p < n; ++p) {
        double u = rng.u01(), acc = 0.0;
        int pick = m_ - 1;
        for (int i = 0; i < m_; ++i) {
            acc += w[i];
            if (u < acc) { pick = i; break; }
        }
        ids[p] = pick;
    }
    auto [mu, logvar] = base_.params(z_shared, 1);
    Tensor y = Tensor::zeros(n, d_);
    for (int p = 0; p < n; ++p)
        for (int c = 0; c < d_; ++c)
            y.at(p, c) = mu(0, c) + std::exp(0.5 * logvar(0, c)) * rng.normal();

    Tensor out_pts = Tensor::zeros(n, d_);
    for (int i = 0; i < m_; ++i) {
        std::vector<int> rows;
        for (int p = 0; p < n; ++p)
            if (ids[p] == i) rows.push_back(p);
        if (rows.empty()) continue;
        Tensor yi = Tensor::zeros(static_cast<int>(rows.size()), d_);
        for (std::size_t k = 0; k < rows.size(); ++k)
            for (int c = 0; c < d_; ++c) yi.at(static_cast<int>(k), c) = y(rows[k], c);
        Tensor cond;
        if (flows_[i].conditional())
            cond = ad::repeat_rows(flows_[i].encode_condition(z_per_flow[i], false),
                                   static_cast<int>(rows.size()));
        auto [xi, ld] = flows_[i].forward_pass(yi, cond, false);
        (void)ld;
        for (std::size_t k = 0; k < rows.size(); ++k)
            for (int c = 0; c < d_; ++c) out_pts.at(rows[k], c) = xi(static_cast<int>(k), c);
    }
    return {out_pts, ids};
}

double MixtureFlowDecoder::jensen_gap(const Tensor& x, const Tensor& z, int points_per_shape) const {
    Tensor comp = component_log_probs(x, z, points_per_shape, false);
    Tensor lw = log_weights(z, false);
    Tensor lw_pts = ad::repeat_rows(lw, points_per_shape);
    double gap = 0.0;
    for (int p = 0; p < x.rows(); ++p) {
        double weighted_nll = 0.0;
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i) mx = std::max(mx, lw_pts(p, i) + comp(p, i));
        double s = 0.0;
        for (int i = 0; i < m_; ++i) {
            weighted_nll += std::exp(lw_pts(p, i)) * (-comp(p, i));
            s += std::exp(lw_pts(p, i) + comp(p, i) - mx);
        }
        const double mix_nll = -(mx + std::log(s));
        gap += weighted_nll - mix_nll;
    }
    return gap / x.rows();
}

void MixtureFlowDecoder::register_params(ParamRegistry& reg, const std::string& prefix) const {
    base_.register_params(reg, prefix + ".base");
    for (int i = 0; i < m_; ++i)
        flows_[i].register_params(reg, prefix + ".flow" + std::to_string(i));
    if (m_ > 1) {
        w1_.register_params(reg, prefix + ".w1");
        w2_.register_params(reg, prefix + ".w2");
    }
}

std::vector<Tensor> MixtureFlowDecoder::weight_net_params() const {
    if (m_ == 1) return {};
    return {w1_.W, w1_.b, w2_.W, w2_.b};
}

std::size_t decoder_param_count(int d, int m, int n_layers, int hidden, int cond_dim) {
    Rng rng(0);
    MixtureFlowDecoder dec(d, m, n_layers, hidden, cond_dim, rng);
    ParamRegistry reg;
    dec.register_params(reg, "dec");
    return reg.total_param_count();
}

MixtureFlowDecoder sized_mixture(int m, int n_ref, int h_ref, int d, int cond_dim, Rng& rng,
                                 SizingReport* report) {
    if (m < 1 || n_ref < 1 || h_ref < 1) throw ConfigError("sized_mixture: m, N, H must be >= 1");
    const std::size_t ref_count = decoder_param_count(d, 1, n_ref, h_ref, cond_dim);
    int n_hat = n_ref, h_hat = h_ref;
    std::size_t count = ref_count;
    if (m > 1) {
        n_hat = static_cast<int>(std::ceil(n_ref / std::sqrt(static_cast<double>(m))));
        h_hat = 0;
        for (int h = h_ref; h >= 1; --h) {
            std::size_t c = decoder_param_count(d, m, n_hat, h, cond_dim);
            if (c < ref_count) { h_hat = h; count = c; break; }
        }
        if (h_hat < 1) throw ConfigError("sized_mixture: no feasible hidden width >= 1");
    }
    if (report) *report = {m, n_ref, h_ref, n_hat, h_hat, count, ref_count};
    return MixtureFlowDecoder(d, m, n_hat, h_hat, cond_dim, rng);
}

} // namespace flowmix::mix
