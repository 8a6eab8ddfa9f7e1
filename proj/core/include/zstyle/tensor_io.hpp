#pragma once

#include <iosfwd>
#include <string>

#include "zstyle/diffusion.hpp"
#include "zstyle/tensor.hpp"

namespace zstyle {

// Raw tensor format: ASCII header line "ZTEN <rank> <extent...>\n" followed by
// little-endian 8-byte floats in row-major order.
void write_zten(std::ostream& out, const Tensor& t);
Tensor read_zten(std::istream& in);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// A trajectory serializes as a directory of ZTEN files (state_000.zten, ...)
// plus a manifest line "T=<n> dir=<fwd|rev>".
void save_trajectory(const std::string& dir, const Trajectory& traj);
Trajectory load_trajectory(const std::string& dir);

}  // namespace zstyle
