#include "zstyle/sain.hpp"

#include <algorithm>
#include <cmath>

namespace zstyle {

namespace {

void check_features(const Tensor& f_c, const Tensor& f_s) {
    if (f_c.rank() != 2 || f_s.rank() != 2)
        throw ShapeError("feature tensors must be rank-2 tokens x channels");
    if (f_c.cols() != f_s.cols()) throw ShapeError("feature channel extents disagree");
}

}  // namespace

Tensor sain_with_weight(const Tensor& f_c, const Tensor& f_s, double w) {
    check_features(f_c, f_s);
    const Moments mc = channel_moments(f_c);
    const Moments ms = channel_moments(f_s);
    Tensor out = f_c;
    const std::size_t n = f_c.rows(), d = f_c.cols();
    for (std::size_t j = 0; j < d; ++j) {
        const double shift = w * (ms.mean[j] - mc.mean[j]);
        for (std::size_t i = 0; i < n; ++i) out(i, j) += shift;
    }
    return out;
}

Tensor mean_adjust(const Tensor& f_c, const Tensor& f_s) {
    return sain_with_weight(f_c, f_s, 1.0);
}

ScaleWeight scale_weight(const Tensor& f_c, const Tensor& f_s, int bins) {
    check_features(f_c, f_s);
    double lo = f_c[0], hi = f_c[0];
    for (std::size_t i = 0; i < f_c.size(); ++i) {
        lo = std::min(lo, f_c[i]);
        hi = std::max(hi, f_c[i]);
    }
    for (std::size_t i = 0; i < f_s.size(); ++i) {
        lo = std::min(lo, f_s[i]);
        hi = std::max(hi, f_s[i]);
    }
    if (lo == hi) {  // constant inputs: any symmetric window gives KL = 0
        lo -= 0.5;
        hi += 0.5;
    }
    const Histogram p = histogram_pdf(f_s.reshaped({f_s.size()}), bins, lo, hi);
    const Histogram q = histogram_pdf(f_c.reshaped({f_c.size()}), bins, lo, hi);
    ScaleWeight sw;
    sw.kl = kl_divergence(p, q);
    sw.w = std::exp(-sw.kl);
    return sw;
}

Tensor sain(const Tensor& f_c, const Tensor& f_s, const ScaleWeight& sw) {
    return sain_with_weight(f_c, f_s, sw.w);
}

}  // namespace zstyle
