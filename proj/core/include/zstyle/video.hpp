#pragma once

#include <string>
#include <vector>

#include "zstyle/pipeline.hpp"

namespace zstyle {

// Anchor-frame and previous-frame taps replacing a frame's own K/V, plus the
// previous frame's per-step noise-free predictions for energy guidance.
struct FrameContext {
    const Tensor& k0;
    const Tensor& v0;
    const Tensor& k_prev;
    const Tensor& v_prev;
};

// attend(Q_i, [K0; K_prev], [V0; V_prev]); the frame's own K/V are validated
// for shape and then replaced, exactly as the concatenation rule states.
Tensor interframe_attend(const Tensor& q_i, const Tensor& k_i, const Tensor& v_i,
                         const FrameContext& ctx);

struct GuidanceConfig {
    double weight = 0.05;  // latent update step size; 0 disables guidance
};

// One guided reverse step: E = 1/2 ||x0_hat - prev_x0_hat||^2, the gradient
// w.r.t. the latent is (x0_hat - prev_x0_hat)/sqrt(alpha_t) with eps_hat held
// constant; the latent moves by -weight * gradient and then takes a normal
// DDIM step.
Tensor energy_guidance_step(const Tensor& x_t, int t, const Denoiser& d, const NoiseSchedule& s,
                            const Tensor& prev_x0hat, const GuidanceConfig& g);

struct ConsistencyReport {
    double mean_diff = 0.0;
    double var_diff = 0.0;               // population variance
    std::vector<double> diffs;           // || F_i - F_{i-1} ||_F per adjacent pair
};

ConsistencyReport consistency_report(const std::vector<Tensor>& frames);

// CSV: header "i,diff", one row per adjacent pair, then labeled trailer rows
// for the mean and variance.
std::string consistency_csv(const ConsistencyReport& report);

struct VideoResult {
    std::vector<Tensor> frames;
    ConsistencyReport report;
    std::vector<StylizeResult> per_frame;
};

// Frame 0 goes through the image pipeline unchanged; frames i >= 1 add
// inter-frame attention against frame 0 and frame i-1 in the injection blocks
// and energy guidance inside the injection step window.
VideoResult stylize_video(const std::vector<Tensor>& frames, const Tensor& style,
                          const ToyDenoiser& model, const NoiseSchedule& sched,
                          const InjectionConfig& cfg, const GuidanceConfig& g);

}  // namespace zstyle
