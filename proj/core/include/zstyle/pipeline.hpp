#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zstyle/attention.hpp"
#include "zstyle/extractor.hpp"
#include "zstyle/toy_denoiser.hpp"

namespace zstyle {

enum class SainMode { Off, ProseSign, PrintedSign };

// Where and how strongly the reweighted fusion replaces self-attention.
// window_[start,end) counts reverse steps from the start of denoising
// (step 0 happens at t = T); blocks index the denoiser's attention blocks.
struct InjectionConfig {
    double lambda = 1.2;
    int window_start = 5;
    int window_end = 30;
    std::set<int> blocks = {2, 3};
    SainMode sain = SainMode::ProseSign;
    int sain_bins = 32;
    std::optional<StyleMask> mask;
    bool record_cosine = false;
};

struct StepDiagnostics {
    int t = 0;
    double gram_style_stylized = 0.0;
    double gram_style_content = 0.0;
    std::vector<double> cosine_cross_self;  // optional, per query token
};

struct StylizeResult {
    Tensor image;
    std::vector<StepDiagnostics> diags;
    double sain_w = 1.0;
    double sain_kl = 0.0;
};

// Per-pass record of the content path: tap sinks and noise-free predictions
// for every step. The video extension feeds these back as the anchor frame
// and previous frame of inter-frame attention and energy guidance.
struct FrameRecord {
    std::vector<TapRequest> taps_by_t;  // index by timestep, entries 1..T used
    std::vector<Tensor> x0hat_by_t;
};

struct ReverseHooks {
    const FrameRecord* anchor = nullptr;
    const FrameRecord* prev = nullptr;
    FrameRecord* record = nullptr;
    double guidance_weight = 0.0;  // applied inside the injection window when prev is set
};

// Dual-path stylization: invert every input, adjust the content latent with
// SAIN against the first style's x_T, then run synchronized reverse passes
// where the configured (step, block) window swaps self-attention for the
// reweighted fusion against the style path's taps. Also runs a plain content
// reconstruction alongside to fill the per-step Gram diagnostics.
StylizeResult stylize(const Tensor& content, const std::vector<Tensor>& styles,
                      const ToyDenoiser& model, const NoiseSchedule& sched,
                      const InjectionConfig& cfg);

// Engine entry with video hooks; stylize() is the hookless special case.
StylizeResult stylize_with_hooks(const Tensor& content, const std::vector<Tensor>& styles,
                                 const ToyDenoiser& model, const NoiseSchedule& sched,
                                 const InjectionConfig& cfg, const ReverseHooks& hooks);

// || G(a) - G(b) ||_F with G(x) = X^T X / (tokens * channels).
double gram_style_distance(const Tensor& a, const Tensor& b);

// Content loss: deepest-stage feature distance. Style loss: mean over stages
// of per-channel mean and variance distances.
std::pair<double, double> perceptual_losses(const Tensor& result, const Tensor& content,
                                            const Tensor& style, const FeatureExtractor& ext);

// CSV with header "t,gram_style_stylized,gram_style_content"; values
// round-trip through parsing at full precision.
std::string diagnostics_csv(const std::vector<StepDiagnostics>& diags);

// Per-style-token admission weights from a mask image: 255 = full style
// attention, 0 = masked, intermediate values ramp linearly. One weight per
// patch token, averaged over the patch.
StyleMask style_mask_from_image(const Tensor& mask_image, int patch);

}  // namespace zstyle
