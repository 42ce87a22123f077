#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flowmix/prior.hpp"
#include "testutil.hpp"

using namespace flowmix;
using ad::Tensor;

namespace {

double std_normal_log_pdf(const Tensor& z, int row) {
    double lp = 0.0;
    for (int c = 0; c < z.cols(); ++c)
        lp += -0.5 * z(row, c) * z(row, c) - 0.5 * std::log(2.0 * M_PI);
    return lp;
}

void perturb_prior(const prior::PriorFlow& p, Rng& rng, double scale) {
    nn::ParamRegistry reg;
    p.register_params(reg, "prior");
    for (auto& e : reg.entries) {
        if (e.buffer) continue;
        for (auto& v : e.tensor.data()) v += scale * rng.normal();
    }
}

} // namespace

TEST_CASE("prior at identity initialization is exactly N(0, I)") {
    Rng rng(1);
    prior::PriorFlow p(4, 6, 16, 0, rng);
    Tensor z = Tensor::zeros(5, 4);
    for (auto& v : z.data()) v = rng.uniform(-2, 2);
    Tensor lp = p.log_prob(z, Tensor(), false);
    for (int r = 0; r < 5; ++r)
        CHECK(lp(r, 0) == doctest::Approx(std_normal_log_pdf(z, r)).epsilon(1e-12));
}

TEST_CASE("prior samples at initialization pass a KS test against N(0,1)") {
    Rng rng(2);
    prior::PriorFlow p(2, 4, 16, 0, rng);
    Rng srng(13);
    const int n = 4000;
    Tensor z = p.sample(n, Tensor(), srng);

    // One-sample Kolmogorov-Smirnov on the first coordinate.
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = z(i, 0);
    std::sort(v.begin(), v.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double cdf = 0.5 * std::erfc(-v[i] / std::sqrt(2.0));
        d = std::max(d, std::abs(cdf - (i + 1.0) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    // 1% critical value for n=4000 is ~1.63/sqrt(n).
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sampled codes score higher than far-out codes") {
    Rng rng(3);
    prior::PriorFlow p(3, 4, 16, 0, rng);
    perturb_prior(p, rng, 0.05);
    Rng srng(5);
    Tensor z = p.sample(200, Tensor(), srng);
    Tensor lp = p.log_prob(z, Tensor(), false);
    double mean_lp = 0.0;
    for (int i = 0; i < 200; ++i) mean_lp += lp(i, 0) / 200.0;

    Tensor far = Tensor::constant(1, 3, 25.0);
    CHECK(p.log_prob(far, Tensor(), false)(0, 0) < mean_lp - 10.0);
}

TEST_CASE("conditional prior rejects mismatched conditions") {
    Rng rng(4);
    prior::PriorFlow uncond(3, 4, 16, 0, rng);
    prior::PriorFlow cond(3, 4, 16, 5, rng);
    Tensor c = Tensor::zeros(2, 5);
    Rng srng(1);
    CHECK_THROWS_AS((void)uncond.sample(2, c, srng), ConfigError);
    CHECK_THROWS_AS((void)cond.sample(2, Tensor(), srng), ConfigError);
    CHECK_NOTHROW((void)cond.sample(2, c, srng));
}

TEST_CASE("prior loss equals negative entropy minus log-density") {
    Rng rng(5);
    prior::PriorFlow p(3, 4, 16, 0, rng);
    perturb_prior(p, rng, 0.05);

    enc::ShapePosterior post;
    post.mu = Tensor::from(2, 3, {0.1, -0.4, 0.8, 0.0, 0.3, -0.2});
    post.logvar = Tensor::from(2, 3, {0.2, -0.1, 0.0, 0.4, -0.3, 0.1});
    Rng srng(8);
    Tensor z = post.sample(srng);

    Tensor loss = p.loss(post, z, Tensor(), false);
    Tensor ent = post.entropy();
    Tensor lp = p.log_prob(z, Tensor(), false);
    for (int r = 0; r < 2; ++r)
        CHECK(loss(r, 0) == doctest::Approx(-ent(r, 0) - lp(r, 0)).epsilon(1e-12));
}

TEST_CASE("prior loss gradients pass finite differences") {
    // Differentiate through the posterior parameters (mu rows) with the noise
    // draw held fixed, covering the reparameterization path into the prior.
    Rng rng(6);
    auto x0 = testutil::random_vec(rng, 2 * 3, -0.5, 0.5);
    auto fn = [](Tensor& mu) {
        Rng wrng(9);
        prior::PriorFlow p(3, 4, 8, 0, wrng);
        perturb_prior(p, wrng, 0.05);
        enc::ShapePosterior post;
        post.mu = mu;
        post.logvar = Tensor::from(2, 3, std::vector<double>(6, -0.5));
        Rng eps(17);
        Tensor z = post.sample(eps);
        return ad::mean_all(p.loss(post, z, Tensor(), true));
    };
    CHECK(testutil::finite_diff_max_rel_err(fn, x0, 2, 3) < 1e-3);
}
