#pragma once

#include <string>

#include "zstyle/tensor.hpp"

namespace zstyle {

// Binary PPM (P6) / PGM (P5), 8-bit only. Images map to rank-3 tensors
// [H, W, C] with values in [0, 1]; C is 1 for PGM and 3 for PPM. Malformed or
// truncated files raise IoError naming the byte offset.
Tensor read_image(const std::string& path);

// Writes P5 for C == 1 and P6 for C == 3; values are clamped to [0, 1] then
// rounded to 8 bits.
void write_image(const std::string& path, const Tensor& image);

}  // namespace zstyle
