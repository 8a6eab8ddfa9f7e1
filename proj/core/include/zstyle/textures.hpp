#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zstyle/tensor.hpp"

namespace zstyle {

enum class TextureKind { Stripes, Dots, GaussianBlobs };

TextureKind texture_kind_from_name(const std::string& name);

// One deterministic single-channel texture in [0, 1]. Stripes take an exact
// integer period so autocorrelation tests can probe it.
Tensor make_texture(TextureKind kind, std::size_t size, std::uint64_t seed);

// Axis-aligned sinusoidal stripes with an explicit period (in pixels).
Tensor make_stripes(std::size_t size, double period, bool vertical, double phase);

// n procedural images of extent size x size x 1, cycling through kinds.
// Deterministic in (kinds, n, size, seed).
std::vector<Tensor> make_texture_dataset(const std::vector<TextureKind>& kinds, std::size_t n,
                                         std::size_t size, std::uint64_t seed);

}  // namespace zstyle
