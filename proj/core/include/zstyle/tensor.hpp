#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "zstyle/errors.hpp"

namespace zstyle {

// Dense row-major tensor of doubles: the single numeric carrier for images,
// latents, token features, attention matrices and projection weights.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

    // Rank-2 constructor for literals in tests and small fixtures.
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector_of(std::initializer_list<double> values);
    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t extent(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Rank-2 element access.
    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    // Rank-3 element access.
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    std::size_t rows() const { return extent(0); }
    std::size_t cols() const { return extent(1); }

    // Size-preserving reinterpretation of the extents.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double s);

    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(Tensor a, double s) { return a *= s; }
    friend Tensor operator*(double s, Tensor a) { return a *= s; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Per-channel first and second population moments of a token-by-channel matrix.
struct Moments {
    std::vector<double> mean;
    std::vector<double> variance;
};

// Probability mass over contiguous bins; probabilities are floored at
// kHistFloor and renormalized so KL divergences stay finite.
struct Histogram {
    std::vector<double> bin_edges;      // bins + 1 strictly increasing edges
    std::vector<double> probabilities;  // bins entries, sums to 1
};

// Finite stand-in for -inf in masked attention logits. Large enough that
// exp(logit - rowmax) underflows to exactly zero next to any sane logit.
inline constexpr double kMaskedLogit = -1e9;
inline constexpr double kHistFloor = 1e-10;

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Row-wise stabilized softmax. Throws DomainError on a row whose every entry
// is at or below the masked-logit sentinel.
Tensor softmax_rows(const Tensor& logits);

Moments channel_moments(const Tensor& features);

Histogram histogram_pdf(const Tensor& values, int bins, double lo, double hi);

double kl_divergence(const Histogram& p, const Histogram& q);

Tensor cosine_similarity_rows(const Tensor& a, const Tensor& b);

// Small shared helpers.
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& a);
bool all_finite(const Tensor& a);

}  // namespace zstyle
