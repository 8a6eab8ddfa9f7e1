#include "zstyle/textures.hpp"

#include <cmath>

#include "zstyle/rng.hpp"

namespace zstyle {

namespace {

constexpr double kTwoPi = 6.28318530717958647692528676655900577;

Tensor stripes(std::size_t size, Rng& rng) {
    // Integer period in [4, size/2], axis chosen per sample, random phase,
    // amplitude and brightness so the dataset spans a range of means.
    const std::uint64_t max_period = std::max<std::uint64_t>(4, size / 2);
    const double period = static_cast<double>(4 + rng.next_below(max_period - 3));
    const bool vertical = rng.next_below(2) == 0;
    const double phase = rng.next_double() * kTwoPi;
    const double amp = 0.25 + rng.next_double() * 0.25;
    const double base = amp + rng.next_double() * (1.0 - 2.0 * amp);
    Tensor img = make_stripes(size, period, vertical, phase);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = base + amp * (2.0 * img[i] - 1.0);
    return img;
}

Tensor dots(std::size_t size, Rng& rng) {
    const std::uint64_t spacing = 4 + rng.next_below(std::max<std::uint64_t>(1, size / 4));
    const double radius = 0.8 + rng.next_double() * 1.2;
    const double ox = rng.next_double() * static_cast<double>(spacing);
    const double oy = rng.next_double() * static_cast<double>(spacing);
    const double background = rng.next_double() * 0.3;
    const double peak = 0.7 + rng.next_double() * 0.3;
    Tensor img({size, size, 1});
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            // Distance to the nearest lattice point of the dot grid.
            const double gx = std::fmod(static_cast<double>(x) - ox + 8.0 * spacing, static_cast<double>(spacing));
            const double gy = std::fmod(static_cast<double>(y) - oy + 8.0 * spacing, static_cast<double>(spacing));
            const double dx = std::min(gx, spacing - gx);
            const double dy = std::min(gy, spacing - gy);
            const double d2 = dx * dx + dy * dy;
            img(y, x, 0) = background + (peak - background) * std::exp(-d2 / (2.0 * radius * radius));
        }
    return img;
}

Tensor gaussian_blobs(std::size_t size, Rng& rng) {
    const std::uint64_t count = 3 + rng.next_below(4);
    const double base = rng.next_double() * 0.25;
    struct Blob { double cx, cy, sigma, amp; };
    std::vector<Blob> blobs(count);
    for (Blob& b : blobs) {
        b.cx = rng.next_double() * static_cast<double>(size);
        b.cy = rng.next_double() * static_cast<double>(size);
        b.sigma = 1.5 + rng.next_double() * static_cast<double>(size) / 6.0;
        b.amp = 0.4 + rng.next_double() * 0.6;
    }
    Tensor img({size, size, 1});
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            double v = base;
            for (const Blob& b : blobs) {
                const double dx = static_cast<double>(x) - b.cx;
                const double dy = static_cast<double>(y) - b.cy;
                v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
            }
            img(y, x, 0) = std::min(1.0, v);
        }
    return img;
}

}  // namespace

Tensor make_stripes(std::size_t size, double period, bool vertical, double phase) {
    if (size == 0) throw ConfigError("texture size must be positive");
    if (!(period > 0.0)) throw ConfigError("stripe period must be positive");
    Tensor img({size, size, 1});
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double u = static_cast<double>(vertical ? x : y);
            img(y, x, 0) = 0.5 + 0.5 * std::cos(kTwoPi * u / period + phase);
        }
    return img;
}

TextureKind texture_kind_from_name(const std::string& name) {
    if (name == "stripes") return TextureKind::Stripes;
    if (name == "dots") return TextureKind::Dots;
    if (name == "blobs" || name == "gaussian-blobs") return TextureKind::GaussianBlobs;
    throw ConfigError("unknown texture kind: " + name);
}

Tensor make_texture(TextureKind kind, std::size_t size, std::uint64_t seed) {
    if (size == 0) throw ConfigError("texture size must be positive");
    Rng rng(seed, 0xA11CE);
    switch (kind) {
        case TextureKind::Stripes: return stripes(size, rng);
        case TextureKind::Dots: return dots(size, rng);
        case TextureKind::GaussianBlobs: return gaussian_blobs(size, rng);
    }
    throw ConfigError("unknown texture kind");
}

std::vector<Tensor> make_texture_dataset(const std::vector<TextureKind>& kinds, std::size_t n,
                                         std::size_t size, std::uint64_t seed) {
    if (kinds.empty() && n > 0) throw ConfigError("texture dataset needs at least one kind");
    std::vector<Tensor> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(make_texture(kinds[i % kinds.size()], size, seed + 0x1000 * (i + 1)));
    return out;
}

}  // namespace zstyle
