#include "zstyle/extractor.hpp"

#include <cmath>

#include "zstyle/rng.hpp"

namespace zstyle {

namespace {

Tensor conv3x3_stride2_tanh(const Tensor& in, const FeatureExtractor::Stage& st) {
    const std::size_t h = in.extent(0), w = in.extent(1), ci = in.extent(2);
    if (ci != st.c_in) throw ShapeError("extractor stage channel mismatch");
    const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
    Tensor out({oh, ow, st.c_out});
    for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
            for (std::size_t co = 0; co < st.c_out; ++co) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < 3; ++ky)
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(2 * oy + ky) - 1;
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(2 * ox + kx) - 1;
                        if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                            ix >= static_cast<std::ptrdiff_t>(w))
                            continue;
                        for (std::size_t c = 0; c < ci; ++c)
                            acc += st.kernel(ky, kx, c * st.c_out + co) *
                                   in(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), c);
                    }
                out(oy, ox, co) = std::tanh(acc);
            }
    return out;
}

}  // namespace

std::vector<Tensor> FeatureExtractor::features(const Tensor& image) const {
    if (image.rank() != 3) throw ShapeError("extractor expects an [H, W, C] tensor");
    std::vector<Tensor> maps;
    maps.reserve(stages.size());
    Tensor cur = image;
    for (const Stage& st : stages) {
        cur = conv3x3_stride2_tanh(cur, st);
        maps.push_back(cur);
    }
    return maps;
}

FeatureExtractor deterministic_extractor(std::uint64_t seed, int in_channels) {
    if (in_channels < 1) throw ConfigError("extractor needs at least one input channel");
    Rng rng(seed, 0xFEA7);
    const std::size_t widths[5] = {6, 12, 24, 48, 96};
    FeatureExtractor ext;
    std::size_t ci = static_cast<std::size_t>(in_channels);
    for (std::size_t s = 0; s < 5; ++s) {
        FeatureExtractor::Stage st;
        st.c_in = ci;
        st.c_out = widths[s];
        st.kernel = Tensor({3, 3, ci * st.c_out});
        const double scale = 1.0 / std::sqrt(9.0 * static_cast<double>(ci));
        for (std::size_t i = 0; i < st.kernel.size(); ++i)
            st.kernel[i] = rng.next_gaussian() * scale;
        ext.stages.push_back(std::move(st));
        ci = widths[s];
    }
    return ext;
}

}  // namespace zstyle
