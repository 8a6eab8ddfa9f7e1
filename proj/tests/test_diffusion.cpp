#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "zstyle/diffusion.hpp"
#include "zstyle/rng.hpp"

using namespace zstyle;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_gaussian() * scale;
    return t;
}

// Denoiser that knows the clean sample; algebraically exact at every step.
Denoiser oracle_denoiser(Tensor x0, NoiseSchedule s) {
    return Denoiser{[x0 = std::move(x0), s = std::move(s)](const Tensor& x, int t) {
        const double a = s.alpha(t);
        Tensor eps = x;
        const double sa = std::sqrt(a), se = std::sqrt(1.0 - a);
        for (std::size_t i = 0; i < x.size(); ++i) eps[i] = (x[i] - sa * x0[i]) / se;
        return eps;
    }};
}

double invert_reverse_error(int T, double sigma0) {
    NoiseSchedule s = make_schedule(T, ScheduleKind::LinearAlpha, 0.01);
    Rng rng(17);
    Tensor mu({4, 4, 1});
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = rng.next_gaussian() * 0.3;
    Denoiser d = analytic_gaussian_denoiser(mu, sigma0, s);
    Tensor x0 = mu;
    for (std::size_t i = 0; i < x0.size(); ++i) x0[i] += rng.next_gaussian() * sigma0;
    Trajectory fwd = ddim_invert(x0, d, s);
    Trajectory rev = ddim_reverse(fwd.states.back(), d, s);
    return max_abs_diff(rev.states.back(), x0);
}

}  // namespace

TEST_CASE("make_schedule: linear endpoints and length") {
    NoiseSchedule s1 = make_schedule(1, ScheduleKind::LinearAlpha, 0.02);
    CHECK(s1.alphas.size() == 2);
    CHECK(s1.alphas[0] == 1.0);
    CHECK(s1.alphas[1] == doctest::Approx(0.02).epsilon(1e-15));

    NoiseSchedule s30 = make_schedule(30, ScheduleKind::LinearAlpha, 0.01);
    CHECK(s30.alphas.size() == 31);
    CHECK(s30.deterministic());
    for (int t = 1; t <= 30; ++t) CHECK(s30.alpha(t) < s30.alpha(t - 1));
}

TEST_CASE("make_schedule: cosine matches its closed form") {
    const int T = 25;
    const double amin = 0.005;
    NoiseSchedule s = make_schedule(T, ScheduleKind::Cosine, amin);
    for (int t = 0; t <= T; ++t) {
        const double c = std::cos(M_PI * 0.5 * t / T);
        const double expected = t == 0 ? 1.0 : amin + (1.0 - amin) * c * c;
        CHECK(s.alpha(t) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("make_schedule: invalid parameters are config errors") {
    CHECK_THROWS_AS(make_schedule(0, ScheduleKind::LinearAlpha, 0.01), ConfigError);
    CHECK_THROWS_AS(make_schedule(10, ScheduleKind::LinearAlpha, 0.0), ConfigError);
    CHECK_THROWS_AS(make_schedule(10, ScheduleKind::LinearAlpha, 1.0), ConfigError);
}

TEST_CASE("forward_noise: alpha endpoints and analytic case") {
    NoiseSchedule s = make_schedule(4, ScheduleKind::LinearAlpha, 0.25);
    Tensor x0({2, 2, 1}, 1.0);
    Tensor z({2, 2, 1}, 2.0);
    CHECK(max_abs_diff(forward_noise(x0, 0, z, s), x0) == 0.0);

    // Hand-built schedule reaching alpha == 0 gives back pure noise.
    NoiseSchedule s0;
    s0.alphas = {1.0, 0.0};
    s0.sigmas = {0.0, 0.0};
    CHECK(max_abs_diff(forward_noise(x0, 1, z, s0), z) == 0.0);

    NoiseSchedule s25;
    s25.alphas = {1.0, 0.25};
    s25.sigmas = {0.0, 0.0};
    Tensor xt = forward_noise(x0, 1, z, s25);
    CHECK(xt[0] == doctest::Approx(2.2320508075688772).epsilon(1e-12));

    CHECK_THROWS_AS(forward_noise(x0, 9, z, s), DomainError);
}

TEST_CASE("predict_x0: inverse of forward_noise, zero eps, random oracle") {
    NoiseSchedule s = make_schedule(8, ScheduleKind::Cosine, 0.02);
    Rng rng(5);
    Tensor x0 = random_tensor({3, 3, 1}, rng);
    Tensor z = random_tensor({3, 3, 1}, rng);
    for (int t = 1; t <= 8; ++t) {
        Tensor xt = forward_noise(x0, t, z, s);
        CHECK(max_abs_diff(predict_x0(xt, z, t, s), x0) < 1e-12);
    }

    Tensor zero = Tensor::zeros_like(x0);
    Tensor xt = forward_noise(x0, 3, z, s);
    Tensor scaled = predict_x0(xt, zero, 3, s);
    for (std::size_t i = 0; i < xt.size(); ++i)
        CHECK(scaled[i] == doctest::Approx(xt[i] / std::sqrt(s.alpha(3))).epsilon(1e-12));

    // Direct-formula oracle on a random case.
    Tensor eps = random_tensor({3, 3, 1}, rng);
    Tensor got = predict_x0(xt, eps, 5, s);
    const double a = s.alpha(5);
    for (std::size_t i = 0; i < xt.size(); ++i)
        CHECK(got[i] ==
              doctest::Approx((xt[i] - std::sqrt(1.0 - a) * eps[i]) / std::sqrt(a)).epsilon(1e-12));

    NoiseSchedule s0;
    s0.alphas = {1.0, 0.0};
    s0.sigmas = {0.0, 0.0};
    CHECK_THROWS_AS(predict_x0(xt, eps, 1, s0), DomainError);
}

TEST_CASE("ddim_step: oracle denoiser reproduces the forward relation") {
    NoiseSchedule s = make_schedule(6, ScheduleKind::LinearAlpha, 0.05);
    Rng rng(9);
    Tensor x0 = random_tensor({2, 2, 1}, rng);
    Denoiser d = oracle_denoiser(x0, s);
    // Start exactly on a trajectory with known epsilon.
    Tensor eps_true = random_tensor({2, 2, 1}, rng);
    for (int t = 6; t >= 2; --t) {
        Tensor xt = forward_noise(x0, t, eps_true, s);
        Tensor prev = ddim_step(xt, t, d, s);
        Tensor expected = forward_noise(x0, t - 1, eps_true, s);
        CHECK(max_abs_diff(prev, expected) < 1e-12);
    }
}

TEST_CASE("ddim_step: t=1 with alpha_0 = 1 returns the x0 prediction") {
    NoiseSchedule s = make_schedule(3, ScheduleKind::LinearAlpha, 0.1);
    Rng rng(13);
    Tensor x0 = random_tensor({2, 2, 1}, rng);
    Denoiser d = oracle_denoiser(x0, s);
    Tensor z = random_tensor({2, 2, 1}, rng);
    Tensor x1 = forward_noise(x0, 1, z, s);
    Tensor out = ddim_step(x1, 1, d, s);
    CHECK(max_abs_diff(out, x0) < 1e-12);
    CHECK_THROWS_AS(ddim_step(x1, 0, d, s), DomainError);
}

TEST_CASE("ddim_step: matches a hand-unrolled two-step composition on a scalar") {
    NoiseSchedule s = make_schedule(2, ScheduleKind::LinearAlpha, 0.2);
    // Fixed-epsilon denoiser makes the unroll purely algebraic.
    const double eps_c = 0.7;
    Denoiser d{[&](const Tensor& x, int) {
        Tensor e = x;
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = eps_c;
        return e;
    }};
    Tensor x2({1}, 1.3);
    Tensor x1 = ddim_step(x2, 2, d, s);
    Tensor x0 = ddim_step(x1, 1, d, s);

    // Scalar unroll oracle.
    auto step = [&](double x, int t) {
        const double a = s.alpha(t), ap = s.alpha(t - 1);
        const double x0h = (x - std::sqrt(1.0 - a) * eps_c) / std::sqrt(a);
        return std::sqrt(ap) * x0h + std::sqrt(1.0 - ap) * eps_c;
    };
    const double expected = step(step(1.3, 2), 1);
    CHECK(x0[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ddim_step: sigma policy validation") {
    NoiseSchedule s = make_schedule(4, ScheduleKind::LinearAlpha, 0.05);
    s.sigmas[2] = 2.0;  // sigma^2 > 1 - alpha_1
    Rng rng(21);
    Tensor x0 = random_tensor({2, 2, 1}, rng);
    Denoiser d = oracle_denoiser(x0, s);
    Tensor xt = random_tensor({2, 2, 1}, rng);
    CHECK_THROWS_AS(ddim_step(xt, 2, d, s), ConfigError);
    CHECK_THROWS_AS(ddim_invert(x0, d, s), ConfigError);
}

TEST_CASE("ddim_invert: trajectory shape, exact oracle round trip, determinism") {
    NoiseSchedule s = make_schedule(12, ScheduleKind::LinearAlpha, 0.01);
    Rng rng(33);
    Tensor x0 = random_tensor({4, 4, 1}, rng, 0.5);
    Denoiser d = oracle_denoiser(x0, s);

    Trajectory fwd = ddim_invert(x0, d, s);
    CHECK(fwd.states.size() == 13);
    CHECK(fwd.forward_direction);
    CHECK(max_abs_diff(fwd.states.front(), x0) == 0.0);

    Trajectory rev = ddim_reverse(fwd.states.back(), d, s);
    CHECK(max_abs_diff(rev.states.back(), x0) < 1e-10);

    Trajectory fwd2 = ddim_invert(x0, d, s);
    for (std::size_t i = 0; i < fwd.states.size(); ++i)
        CHECK(max_abs_diff(fwd.states[i], fwd2.states[i]) == 0.0);
}

TEST_CASE("ddim_invert: denoiser shape mismatch is a contract error") {
    NoiseSchedule s = make_schedule(4, ScheduleKind::LinearAlpha, 0.05);
    Denoiser bad{[](const Tensor&, int) { return Tensor({1}, 0.0); }};
    Tensor x0({2, 2, 1}, 0.3);
    CHECK_THROWS_AS(ddim_invert(x0, bad, s), ContractError);
}

TEST_CASE("round trip with the analytic Gaussian denoiser tightens as T grows") {
    const double e10 = invert_reverse_error(10, 0.5);
    const double e30 = invert_reverse_error(30, 0.5);
    const double e100 = invert_reverse_error(100, 0.5);
    CHECK(e30 < 1e-3);
    CHECK(e30 < e10);
    CHECK(e100 < e30);
}

TEST_CASE("analytic_gaussian_denoiser: degenerate prior and fixed point") {
    NoiseSchedule s = make_schedule(6, ScheduleKind::LinearAlpha, 0.05);
    Rng rng(3);
    Tensor mu = random_tensor({2, 2, 1}, rng);

    // sigma0 -> 0: posterior mean collapses to mu.
    Denoiser tight = analytic_gaussian_denoiser(mu, 1e-9, s);
    Tensor x = random_tensor({2, 2, 1}, rng);
    const int t = 3;
    Tensor eps = tight.predict_noise(x, t);
    Tensor post = predict_x0(x, eps, t, s);
    CHECK(max_abs_diff(post, mu) < 1e-9);

    // x_t = sqrt(alpha) mu is a fixed point: predicted noise is exactly zero.
    Denoiser d = analytic_gaussian_denoiser(mu, 0.7, s);
    Tensor xfix = mu;
    xfix *= std::sqrt(s.alpha(t));
    Tensor eps_fix = d.predict_noise(xfix, t);
    CHECK(max_abs(eps_fix) < 1e-12);

    CHECK_THROWS_AS(d.predict_noise(x, 0), DomainError);
    CHECK_THROWS_AS(analytic_gaussian_denoiser(mu, 0.0, s), DomainError);
}

TEST_CASE("analytic_gaussian_denoiser: posterior mean matches 1-D Bayes quadrature") {
    NoiseSchedule s = make_schedule(10, ScheduleKind::LinearAlpha, 0.02);
    const double mu0 = 0.7, sigma0 = 0.5, xt_val = 1.2;
    const int t = 4;
    Tensor mu({1}, mu0);
    Denoiser d = analytic_gaussian_denoiser(mu, sigma0, s);
    Tensor xt({1}, xt_val);
    Tensor post = predict_x0(xt, d.predict_noise(xt, t), t, s);

    // Midpoint-rule quadrature over the prior-times-likelihood density.
    const double a = s.alpha(t);
    const int n = 200001;
    const double lo = mu0 - 12.0 * sigma0, hi = mu0 + 12.0 * sigma0;
    const double dx = (hi - lo) / (n - 1);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x0 = lo + dx * i;
        const double prior = std::exp(-0.5 * (x0 - mu0) * (x0 - mu0) / (sigma0 * sigma0));
        const double r = xt_val - std::sqrt(a) * x0;
        const double lik = std::exp(-0.5 * r * r / (1.0 - a));
        num += x0 * prior * lik;
        den += prior * lik;
    }
    CHECK(post[0] == doctest::Approx(num / den).epsilon(1e-6));
}

TEST_CASE("property: forward then predict with the true noise is the identity") {
    Rng rng(77);
    NoiseSchedule s = make_schedule(20, ScheduleKind::Cosine, 0.01);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x0 = random_tensor({2, 3, 1}, rng, 2.0);
        Tensor z = random_tensor({2, 3, 1}, rng);
        const int t = 1 + static_cast<int>(rng.next_below(20));
        CHECK(max_abs_diff(predict_x0(forward_noise(x0, t, z, s), z, t, s), x0) < 1e-10);
    }
}
