#include "zstyle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zstyle {

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (std::size_t e : shape_) {
        if (e == 0) throw ShapeError("tensor extents must be positive");
        n *= e;
    }
    if (shape_.empty()) throw ShapeError("tensor rank must be at least 1");
    data_.assign(n, fill);
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    if (r == 0) throw ShapeError("from_rows needs at least one row");
    const std::size_t c = rows.begin()->size();
    Tensor out({r, c});
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("from_rows rows have unequal lengths");
        for (double v : row) out.data_[i++] = v;
    }
    return out;
}

Tensor Tensor::vector_of(std::initializer_list<double> values) {
    Tensor out({values.size()});
    std::copy(values.begin(), values.end(), out.data_.begin());
    return out;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) throw ShapeError("axis out of range");
    return shape_[axis];
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    Tensor out;
    std::size_t n = 1;
    for (std::size_t e : new_shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive");
        n *= e;
    }
    if (n != data_.size()) throw ShapeError("reshape must preserve element count");
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    return out;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (!same_shape(other)) throw ShapeError("elementwise add on mismatched shapes");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (!same_shape(other)) throw ShapeError("elementwise subtract on mismatched shapes");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul expects rank-2 operands");
    if (a.cols() != b.rows()) throw ShapeError("matmul inner extents disagree");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            const double* brow = b.data() + p * m;
            double* orow = out.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose expects a rank-2 tensor");
    Tensor out({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) throw ShapeError("softmax_rows expects a rank-2 tensor");
    const std::size_t n = logits.rows(), m = logits.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, logits(i, j));
        if (mx <= kMaskedLogit) throw DomainError("softmax row is entirely masked");
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double e = std::exp(logits(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < m; ++j) out(i, j) /= sum;
    }
    return out;
}

Moments channel_moments(const Tensor& features) {
    if (features.rank() != 2) throw ShapeError("channel_moments expects tokens x channels");
    const std::size_t n = features.rows(), d = features.cols();
    if (n == 0) throw DomainError("channel_moments needs at least one token");
    Moments mo;
    mo.mean.assign(d, 0.0);
    mo.variance.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mo.mean[j] += features(i, j);
    for (std::size_t j = 0; j < d; ++j) mo.mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double dlt = features(i, j) - mo.mean[j];
            mo.variance[j] += dlt * dlt;
        }
    for (std::size_t j = 0; j < d; ++j) mo.variance[j] /= static_cast<double>(n);
    return mo;
}

Histogram histogram_pdf(const Tensor& values, int bins, double lo, double hi) {
    if (bins < 2) throw DomainError("histogram needs at least 2 bins");
    if (!(lo < hi)) throw DomainError("histogram range must satisfy lo < hi");
    if (values.size() == 0) throw DomainError("histogram needs at least one sample");
    Histogram h;
    h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    const double width = (hi - lo) / bins;
    for (int i = 0; i <= bins; ++i) h.bin_edges[static_cast<std::size_t>(i)] = lo + width * i;
    h.probabilities.assign(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        int b = static_cast<int>(std::floor((values[i] - lo) / width));
        b = std::clamp(b, 0, bins - 1);  // out-of-range samples land in edge bins
        h.probabilities[static_cast<std::size_t>(b)] += 1.0;
    }
    const double n = static_cast<double>(values.size());
    double total = 0.0;
    for (double& p : h.probabilities) {
        p = std::max(p / n, kHistFloor);
        total += p;
    }
    for (double& p : h.probabilities) p /= total;
    return h;
}

double kl_divergence(const Histogram& p, const Histogram& q) {
    if (p.bin_edges != q.bin_edges) throw DomainError("kl_divergence needs identical binning");
    if (p.probabilities.size() != q.probabilities.size())
        throw DomainError("kl_divergence needs identical bin counts");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.probabilities.size(); ++i)
        kl += p.probabilities[i] * std::log(p.probabilities[i] / q.probabilities[i]);
    return std::max(kl, 0.0);
}

Tensor cosine_similarity_rows(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || !a.same_shape(b)) throw ShapeError("cosine_similarity_rows expects equal rank-2 shapes");
    const std::size_t n = a.rows(), d = a.cols();
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dot += a(i, j) * b(i, j);
            na += a(i, j) * a(i, j);
            nb += b(i, j) * b(i, j);
        }
        if (na == 0.0 || nb == 0.0) throw DomainError("cosine similarity of a zero-norm row");
        out[i] = dot / (std::sqrt(na) * std::sqrt(nb));
    }
    return out;
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff on mismatched shapes");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double frobenius_norm(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
    return std::sqrt(s);
}

bool all_finite(const Tensor& a) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

}  // namespace zstyle
