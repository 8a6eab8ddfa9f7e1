#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "zstyle/diffusion.hpp"
#include "zstyle/tensor.hpp"

namespace zstyle {

// Row-major patch tokenization: image [H, W, C] <-> tokens [N, patch*patch*C]
// with N = (H/patch) * (W/patch).
Tensor patchify(const Tensor& image, int patch);
Tensor unpatchify(const Tensor& tokens, std::size_t h, std::size_t w, std::size_t c, int patch);

struct BlockWeights {
    Tensor wq, wk, wv, wo;  // d x d projections
    Tensor w1, b1, w2, b2;  // residual MLP, hidden width h
};

struct BlockTaps {
    Tensor q, k, v;  // [N, d] as fed into the block's attention
};

// Q/K/V recording slots for one forward call; the caller keys sinks by
// timestep when it needs the full per-(t, block) record.
struct TapRequest {
    std::set<int> blocks;
    std::map<int, BlockTaps> taps;
};

// Replacement for a block's attention: receives the block's own Q/K/V and
// must return an [N, d] tensor (typically a fusion closed over style taps).
using BlockOverride = std::function<Tensor(const Tensor& q, const Tensor& k, const Tensor& v)>;
using AttentionOverride = std::map<int, BlockOverride>;

struct ToyDenoiserConfig {
    int patch = 4;
    int embed_dim = 32;
    int hidden = 64;
    int num_blocks = 4;
    int steps = 30;  // time embedding covers t in [0, steps]
    int channels = 1;
};

// Patch embedding -> num_blocks single-head attention blocks with residual
// tanh MLPs -> unembedding. Deterministic, pure per call; taps and overrides
// give the stylization engine access to every block's attention site.
struct ToyDenoiser {
    ToyDenoiserConfig cfg;
    Tensor w_in, b_in;    // [P, d], [d] with P = patch^2 * channels
    Tensor time_emb;      // [steps + 1, d]
    std::vector<BlockWeights> blocks;
    Tensor w_out, b_out;  // [d, P], [P]

    static ToyDenoiser init(const ToyDenoiserConfig& cfg, std::uint64_t seed);

    Tensor forward(const Tensor& x_t, int t, const AttentionOverride* overrides = nullptr,
                   TapRequest* taps = nullptr) const;

    Denoiser as_denoiser() const;

    ToyDenoiser zeros_like() const;

    // Fixed parameter traversal order shared by SGD, the gradient check and
    // the weights file: w_in, b_in, time_emb, per block (wq wk wv wo w1 b1 w2
    // b2), w_out, b_out.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
};

// Weights file: "ZTOY <patch> <d> <L> <T>\n" then each parameter as a ZTEN
// block in traversal order. Channel count and hidden width are recovered from
// the stored shapes.
void save_toy_denoiser(const std::string& path, const ToyDenoiser& model);
ToyDenoiser load_toy_denoiser(const std::string& path);

// Epsilon-prediction MSE for one (x0, t, z) sample; accumulates parameter
// gradients into *grads when non-null. This is the training-side forward; the
// inference forward above is the one the stylization engine sees.
double loss_and_gradients(const ToyDenoiser& model, const Tensor& x0, int t, const Tensor& z,
                          const NoiseSchedule& sched, ToyDenoiser* grads);

struct TrainResult {
    std::vector<double> epoch_mse;
};

// Plain SGD over epsilon-prediction regression, one update per example,
// deterministic in seed. Throws TrainingError naming the epoch if the loss
// stops being finite.
TrainResult train(ToyDenoiser& model, const std::vector<Tensor>& dataset,
                  const NoiseSchedule& sched, int epochs, double lr, std::uint64_t seed);

}  // namespace zstyle
