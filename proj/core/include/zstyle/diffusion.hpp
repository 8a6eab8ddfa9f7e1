#pragma once

#include <functional>

#include "zstyle/tensor.hpp"

namespace zstyle {

// Alpha-bar sequence plus the per-step sigma policy. alphas[0] == 1 and the
// sequence is strictly decreasing afterwards; deterministic DDIM keeps every
// sigma at zero, which is what inversion requires.
struct NoiseSchedule {
    std::vector<double> alphas;  // T + 1 entries, index by timestep
    std::vector<double> sigmas;  // T + 1 entries, sigmas[t] used by step t -> t-1

    int steps() const { return static_cast<int>(alphas.size()) - 1; }
    bool deterministic() const {
        for (double s : sigmas)
            if (s != 0.0) return false;
        return true;
    }
    double alpha(int t) const;
};

enum class ScheduleKind { LinearAlpha, Cosine };

// LinearAlpha: alpha_t = 1 - (1 - alpha_min) * t / T.
// Cosine:      alpha_t = alpha_min + (1 - alpha_min) * cos^2(pi t / (2 T)).
// Both keep alpha_T = alpha_min > 0 so every reverse step stays regular.
NoiseSchedule make_schedule(int steps, ScheduleKind kind, double alpha_min = 0.01);

// Pluggable noise predictor. Must return a tensor shaped like its input and
// be deterministic in (x_t, t).
struct Denoiser {
    std::function<Tensor(const Tensor& x_t, int t)> predict_noise;
};

struct Trajectory {
    std::vector<Tensor> states;  // T + 1 states
    bool forward_direction = true;  // true: x_0..x_T, false: x_T..x_0

    int steps() const { return static_cast<int>(states.size()) - 1; }
};

// x_t = sqrt(alpha_t) x0 + sqrt(1 - alpha_t) z.
Tensor forward_noise(const Tensor& x0, int t, const Tensor& z, const NoiseSchedule& s);

// x0_hat = (x_t - sqrt(1 - alpha_t) eps_hat) / sqrt(alpha_t). Throws on alpha_t == 0.
Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s);

// Deterministic core of the reverse update given an already-evaluated eps_hat:
// x_{t-1} = sqrt(alpha_{t-1}) x0_hat + sqrt(1 - alpha_{t-1}) eps_hat.
Tensor ddim_update(const Tensor& x_t, const Tensor& eps_hat, int t, const NoiseSchedule& s);

// Full reverse step x_t -> x_{t-1}; with sigma_t > 0 adds sigma_t * z.
Tensor ddim_step(const Tensor& x_t, int t, const Denoiser& d, const NoiseSchedule& s,
                 const Tensor* z = nullptr);

// Deterministic inversion x_0 -> x_T: each step solves the reverse-step
// relation for x_{t+1} by a fixed number of fixed-point sweeps, seeded by the
// first-order guess eps_hat(x_t, max(t, 1)).
Trajectory ddim_invert(const Tensor& x0, const Denoiser& d, const NoiseSchedule& s);

// Convenience full reverse pass x_T -> x_0 (deterministic sigma policy).
Trajectory ddim_reverse(const Tensor& x_T, const Denoiser& d, const NoiseSchedule& s);

// Closed-form optimal noise predictor for data distributed N(mu, sigma0^2 I).
// Enables exact round-trip and posterior-mean tests without any training.
Denoiser analytic_gaussian_denoiser(Tensor mu, double sigma0, NoiseSchedule s);

}  // namespace zstyle
