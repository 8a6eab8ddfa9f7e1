#pragma once

#include <cstdint>
#include <vector>

#include "zstyle/tensor.hpp"

namespace zstyle {

// Deterministic 5-stage feature extractor: each stage is a 3x3 stride-2
// zero-padded convolution with frozen seed-derived weights followed by tanh,
// so stage i+1's spatial extent is ceil(stage i / 2). A fixed random stack
// stands in for a pretrained perceptual network.
struct FeatureExtractor {
    struct Stage {
        Tensor kernel;  // [3, 3, c_in * c_out] flattened as (ky, kx, ci * c_out + co)
        std::size_t c_in = 0, c_out = 0;
    };
    std::vector<Stage> stages;

    // Feature maps [H_i, W_i, C_i] for every stage, shallowest first.
    std::vector<Tensor> features(const Tensor& image) const;
};

FeatureExtractor deterministic_extractor(std::uint64_t seed, int in_channels = 1);

}  // namespace zstyle
