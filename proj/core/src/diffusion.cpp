#include "zstyle/diffusion.hpp"

#include <cmath>
#include <utility>
#include <limits>

namespace zstyle {

double NoiseSchedule::alpha(int t) const {
    if (t < 0 || t >= static_cast<int>(alphas.size()))
        throw DomainError("timestep outside schedule range");
    return alphas[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int steps, ScheduleKind kind, double alpha_min) {
    if (steps < 1) throw ConfigError("schedule needs at least one step");
    if (!(alpha_min > 0.0) || !(alpha_min < 1.0))
        throw ConfigError("schedule alpha_min must lie in (0, 1)");
    NoiseSchedule s;
    s.alphas.resize(static_cast<std::size_t>(steps) + 1);
    for (int t = 0; t <= steps; ++t) {
        const double u = static_cast<double>(t) / steps;
        double a = 0.0;
        switch (kind) {
            case ScheduleKind::LinearAlpha:
                a = 1.0 - (1.0 - alpha_min) * u;
                break;
            case ScheduleKind::Cosine: {
                const double c = std::cos(1.5707963267948966 * u);
                a = alpha_min + (1.0 - alpha_min) * c * c;
                break;
            }
        }
        s.alphas[static_cast<std::size_t>(t)] = a;
    }
    s.alphas[0] = 1.0;
    for (int t = 1; t <= steps; ++t)
        if (!(s.alphas[static_cast<std::size_t>(t)] < s.alphas[static_cast<std::size_t>(t - 1)]))
            throw ConfigError("schedule is not strictly decreasing");
    s.sigmas.assign(static_cast<std::size_t>(steps) + 1, 0.0);
    return s;
}

Tensor forward_noise(const Tensor& x0, int t, const Tensor& z, const NoiseSchedule& s) {
    if (!x0.same_shape(z)) throw ShapeError("forward_noise shapes disagree");
    const double a = s.alpha(t);
    const double ca = std::sqrt(a), cz = std::sqrt(1.0 - a);
    Tensor out = x0;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * x0[i] + cz * z[i];
    return out;
}

Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s) {
    if (!x_t.same_shape(eps_hat)) throw ShapeError("predict_x0 shapes disagree");
    const double a = s.alpha(t);
    if (a == 0.0) throw DomainError("singular step: alpha_t == 0 in predict_x0");
    const double ce = std::sqrt(1.0 - a), inv = 1.0 / std::sqrt(a);
    Tensor out = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - ce * eps_hat[i]) * inv;
    return out;
}

Tensor ddim_update(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s) {
    if (t < 1) throw DomainError("ddim update needs t >= 1");
    Tensor x0_hat = predict_x0(x_t, eps_hat, t, s);
    const double ap = s.alpha(t - 1);
    const double ca = std::sqrt(ap), ce = std::sqrt(1.0 - ap);
    Tensor out = x0_hat;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * x0_hat[i] + ce * eps_hat[i];
    return out;
}

Tensor ddim_step(const Tensor& x_t, int t, const Denoiser& d, const NoiseSchedule& s,
                 const Tensor* z) {
    if (t < 1) throw DomainError("ddim step needs t >= 1");
    const double sigma = s.sigmas[static_cast<std::size_t>(t)];
    const double ap = s.alpha(t - 1);
    if (sigma * sigma > 1.0 - ap) throw ConfigError("sigma_t^2 exceeds 1 - alpha_{t-1}");
    Tensor eps = d.predict_noise(x_t, t);
    if (!eps.same_shape(x_t)) throw ContractError("denoiser returned a mismatched shape");
    Tensor x0_hat = predict_x0(x_t, eps, t, s);
    const double ca = std::sqrt(ap);
    const double ce = std::sqrt(1.0 - ap - sigma * sigma);
    Tensor out = x0_hat;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * x0_hat[i] + ce * eps[i];
    if (sigma > 0.0) {
        if (z == nullptr) throw DomainError("stochastic step needs a noise sample");
        if (!z->same_shape(x_t)) throw ShapeError("noise sample shape disagrees");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * (*z)[i];
    }
    return out;
}

Trajectory ddim_invert(const Tensor& x0, const Denoiser& d, const NoiseSchedule& s) {
    if (!s.deterministic()) throw ConfigError("inversion requires the deterministic sigma policy");
    const int T = s.steps();
    // Fixed-point sweeps per step. Each sweep re-evaluates the predicted noise
    // at the candidate target state, converging on the x_{t+1} whose reverse
    // step reproduces x_t. The count is fixed so runs stay deterministic.
    constexpr int kInversionSweeps = 6;
    Trajectory traj;
    traj.forward_direction = true;
    traj.states.reserve(static_cast<std::size_t>(T) + 1);
    traj.states.push_back(x0);
    Tensor x = x0;
    for (int t = 0; t < T; ++t) {
        const double an = s.alpha(t + 1);
        const double ca = std::sqrt(an), ce = std::sqrt(1.0 - an);
        auto forward_step = [&](const Tensor& eps) {
            Tensor x0_hat = predict_x0(x, eps, t, s);
            Tensor next = x0_hat;
            for (std::size_t i = 0; i < next.size(); ++i) next[i] = ca * x0_hat[i] + ce * eps[i];
            return next;
        };
        const int tq = t == 0 ? 1 : t;  // step 0 carries no noise to predict
        Tensor eps = d.predict_noise(x, tq);
        if (!eps.same_shape(x)) throw ContractError("denoiser returned a mismatched shape");
        Tensor next = forward_step(eps);
        // Accept refinements only while the sweeps contract; a denoiser whose
        // local slope exceeds the contraction bound keeps the seed step.
        double prev_residual = std::numeric_limits<double>::infinity();
        for (int sweep = 0; sweep < kInversionSweeps; ++sweep) {
            eps = d.predict_noise(next, t + 1);
            if (!eps.same_shape(x)) throw ContractError("denoiser returned a mismatched shape");
            Tensor candidate = forward_step(eps);
            const double residual = max_abs_diff(candidate, next);
            if (!std::isfinite(residual) || residual >= prev_residual) break;
            prev_residual = residual;
            next = std::move(candidate);
        }
        traj.states.push_back(next);
        x = std::move(next);
    }
    return traj;
}

Trajectory ddim_reverse(const Tensor& x_T, const Denoiser& d, const NoiseSchedule& s) {
    const int T = s.steps();
    Trajectory traj;
    traj.forward_direction = false;
    traj.states.reserve(static_cast<std::size_t>(T) + 1);
    traj.states.push_back(x_T);
    Tensor x = x_T;
    for (int t = T; t >= 1; --t) {
        x = ddim_step(x, t, d, s);
        traj.states.push_back(x);
    }
    return traj;
}

Denoiser analytic_gaussian_denoiser(Tensor mu, double sigma0, NoiseSchedule s) {
    if (!(sigma0 > 0.0)) throw DomainError("analytic denoiser needs sigma0 > 0");
    const double var0 = sigma0 * sigma0;
    return Denoiser{[mu = std::move(mu), var0, s = std::move(s)](const Tensor& x, int t) {
        if (t <= 0) throw DomainError("analytic denoiser undefined at t = 0");
        if (!x.same_shape(mu)) throw ShapeError("analytic denoiser shape mismatch");
        const double a = s.alpha(t);
        const double sa = std::sqrt(a), se = std::sqrt(1.0 - a);
        const double denom = a * var0 + (1.0 - a);
        Tensor eps = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double post_mean = (var0 * sa * x[i] + (1.0 - a) * mu[i]) / denom;
            eps[i] = (x[i] - sa * post_mean) / se;
        }
        return eps;
    }};
}

}  // namespace zstyle
