#pragma once

#include "zstyle/tensor.hpp"

namespace zstyle {

// Scale weight derived from the histogram KL divergence between style and
// content features: w = exp(-kl), so larger distribution gaps shift less.
struct ScaleWeight {
    double w = 1.0;
    double kl = 0.0;
};

// f_c - mu_c + mu_s per channel: plain mean replacement.
Tensor mean_adjust(const Tensor& f_c, const Tensor& f_s);

// Pools every value of both feature sets into one histogram each over the
// joint min/max range, then w = exp(-KL(p(f_s) || q(f_c))).
ScaleWeight scale_weight(const Tensor& f_c, const Tensor& f_s, int bins = 32);

// f_c - mu_c * w + mu_s * w per channel; output means land at
// mu_c + w (mu_s - mu_c) and variances are untouched.
Tensor sain(const Tensor& f_c, const Tensor& f_s, const ScaleWeight& sw);

// Same shift with an explicit weight; used for the printed-sign variant
// w = exp(+kl), which is not representable as a ScaleWeight.
Tensor sain_with_weight(const Tensor& f_c, const Tensor& f_s, double w);

}  // namespace zstyle
