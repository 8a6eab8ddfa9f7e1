#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "zstyle/rng.hpp"
#include "zstyle/tensor.hpp"

using namespace zstyle;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Tensor m({r, c});
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.next_gaussian() * scale;
    return m;
}

// Independent naive triple-loop oracle for matrix products.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    Tensor out({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

}  // namespace

TEST_CASE("matmul: identity leaves the operand unchanged") {
    Tensor id = Tensor::from_rows({{1, 0}, {0, 1}});
    Tensor m = Tensor::from_rows({{3, -1}, {2, 7}});
    CHECK(max_abs_diff(matmul(id, m), m) == 0.0);
}

TEST_CASE("matmul: hand-checkable 2x2 by 2x1") {
    Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
    Tensor b = Tensor::from_rows({{0}, {1}});
    Tensor c = matmul(a, b);
    CHECK(c(0, 0) == 2.0);
    CHECK(c(1, 0) == 4.0);
}

TEST_CASE("matmul: random 5x7 * 7x3 matches the triple-loop oracle") {
    Rng rng(11);
    Tensor a = random_matrix(5, 7, rng);
    Tensor b = random_matrix(7, 3, rng);
    CHECK(max_abs_diff(matmul(a, b), matmul_oracle(a, b)) < 1e-12);
}

TEST_CASE("matmul: inner extent mismatch throws") {
    Tensor a({2, 3}), b({4, 2});
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("softmax_rows: symmetric, analytic and shifted rows") {
    Tensor s1 = softmax_rows(Tensor::from_rows({{0, 0}}));
    CHECK(s1(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    Tensor s2 = softmax_rows(Tensor::from_rows({{std::log(2.0), 0.0}}));
    CHECK(s2(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s2(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    Tensor s3 = softmax_rows(Tensor::from_rows({{1000.0, 1000.0}}));
    CHECK(s3(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(all_finite(s3));
}

TEST_CASE("softmax_rows: fully masked row is an error") {
    Tensor logits = Tensor::from_rows({{kMaskedLogit, kMaskedLogit}});
    CHECK_THROWS_AS(softmax_rows(logits), DomainError);
}

TEST_CASE("softmax_rows property: rows sum to one and shifts cancel") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor logits = random_matrix(3, 6, rng, 5.0);
        Tensor p = softmax_rows(logits);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p.cols(); ++j) {
                CHECK(p(i, j) >= 0.0);
                sum += p(i, j);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
        Tensor shifted = logits;
        const double c = rng.next_gaussian() * 10.0;
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += c;
        CHECK(max_abs_diff(softmax_rows(shifted), p) < 1e-9);
    }
}

TEST_CASE("channel_moments: constant and analytic columns") {
    Tensor f = Tensor::from_rows({{3.0, 0.0}, {3.0, 2.0}});
    Moments mo = channel_moments(f);
    CHECK(mo.mean[0] == 3.0);
    CHECK(mo.variance[0] == 0.0);
    CHECK(mo.mean[1] == 1.0);
    CHECK(mo.variance[1] == 1.0);
}

TEST_CASE("channel_moments: random 100x4 matches the two-pass oracle") {
    Rng rng(23);
    Tensor f = random_matrix(100, 4, rng, 2.5);
    Moments mo = channel_moments(f);
    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 100; ++i) mean += f(i, j);
        mean /= 100.0;
        double var = 0.0;
        for (std::size_t i = 0; i < 100; ++i) var += (f(i, j) - mean) * (f(i, j) - mean);
        var /= 100.0;
        CHECK(mo.mean[j] == doctest::Approx(mean).epsilon(1e-10));
        CHECK(mo.variance[j] == doctest::Approx(var).epsilon(1e-10));
    }
}

TEST_CASE("channel_moments property: variance equals mean of squares minus squared mean") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor f = random_matrix(17, 3, rng, 1.5);
        Moments mo = channel_moments(f);
        for (std::size_t j = 0; j < 3; ++j) {
            double sq = 0.0, mean = 0.0;
            for (std::size_t i = 0; i < f.rows(); ++i) {
                sq += f(i, j) * f(i, j);
                mean += f(i, j);
            }
            sq /= static_cast<double>(f.rows());
            mean /= static_cast<double>(f.rows());
            CHECK(mo.variance[j] == doctest::Approx(sq - mean * mean).epsilon(1e-9));
            CHECK(mo.variance[j] >= 0.0);
        }
    }
}

TEST_CASE("channel_moments: wrong rank throws") {
    CHECK_THROWS_AS(channel_moments(Tensor({4})), ShapeError);
}

TEST_CASE("histogram_pdf: constant values concentrate in one bin") {
    Tensor v({10}, 1.25);
    Histogram h = histogram_pdf(v, 8, 0.0, 2.0);
    double peak = 0.0, total = 0.0;
    for (double p : h.probabilities) {
        peak = std::max(peak, p);
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(peak > 1.0 - 1e-8);
    CHECK(h.probabilities.size() == 8);
    CHECK(h.bin_edges.size() == 9);
}

TEST_CASE("histogram_pdf: evenly dividing uniform grid gives equal probabilities") {
    const int bins = 8, per_bin = 4;
    Tensor v({static_cast<std::size_t>(bins * per_bin)});
    for (int i = 0; i < bins * per_bin; ++i)
        v[static_cast<std::size_t>(i)] = (i + 0.5) / (bins * per_bin);
    Histogram h = histogram_pdf(v, bins, 0.0, 1.0);
    for (double p : h.probabilities) CHECK(p == doctest::Approx(1.0 / bins).epsilon(1e-12));
}

TEST_CASE("histogram_pdf: 1000 normal samples match the counting oracle") {
    Rng rng(5);
    Tensor v({1000});
    for (std::size_t i = 0; i < 1000; ++i) v[i] = rng.next_gaussian();
    const int bins = 32;
    Histogram h = histogram_pdf(v, bins, -4.0, 4.0);

    // Direct counting oracle with the same clamp/floor/renormalize contract.
    std::vector<double> counts(bins, 0.0);
    const double width = 8.0 / bins;
    for (std::size_t i = 0; i < 1000; ++i) {
        int b = static_cast<int>(std::floor((v[i] + 4.0) / width));
        b = std::min(bins - 1, std::max(0, b));
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    double total = 0.0;
    for (double& c : counts) {
        c = std::max(c / 1000.0, kHistFloor);
        total += c;
    }
    for (double& c : counts) c /= total;
    for (int b = 0; b < bins; ++b)
        CHECK(h.probabilities[static_cast<std::size_t>(b)] ==
              doctest::Approx(counts[static_cast<std::size_t>(b)]).epsilon(1e-14));
}

TEST_CASE("histogram_pdf: domain errors") {
    Tensor v({4}, 0.5);
    CHECK_THROWS_AS(histogram_pdf(v, 1, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(histogram_pdf(v, 4, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(histogram_pdf(v, 4, 2.0, 1.0), DomainError);
}

TEST_CASE("kl_divergence: zero on itself, analytic two-bin value") {
    Tensor v({8});
    for (std::size_t i = 0; i < 8; ++i) v[i] = static_cast<double>(i) / 8.0;
    Histogram p = histogram_pdf(v, 4, 0.0, 1.0);
    CHECK(kl_divergence(p, p) == 0.0);

    // p = [1/2, 1/2], q = [1/4, 3/4] built from exact sample splits.
    Tensor vp({4});
    vp[0] = 0.25;
    vp[1] = 0.25;
    vp[2] = 0.75;
    vp[3] = 0.75;
    Tensor vq({4});
    vq[0] = 0.25;
    vq[1] = 0.75;
    vq[2] = 0.75;
    vq[3] = 0.75;
    Histogram hp = histogram_pdf(vp, 2, 0.0, 1.0);
    Histogram hq = histogram_pdf(vq, 2, 0.0, 1.0);
    const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    CHECK(kl_divergence(hp, hq) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.14384103622589).epsilon(1e-10));
}

TEST_CASE("kl_divergence: random pairs match the summation oracle and stay nonnegative") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor a({64}), b({64});
        for (std::size_t i = 0; i < 64; ++i) {
            a[i] = rng.next_gaussian();
            b[i] = rng.next_gaussian() * 1.4 + 0.3;
        }
        Histogram p = histogram_pdf(a, 16, -5.0, 5.0);
        Histogram q = histogram_pdf(b, 16, -5.0, 5.0);
        const double kl = kl_divergence(p, q);
        double oracle = 0.0;
        for (std::size_t i = 0; i < 16; ++i)
            oracle += p.probabilities[i] * std::log(p.probabilities[i] / q.probabilities[i]);
        CHECK(kl == doctest::Approx(std::max(oracle, 0.0)).epsilon(1e-12));
        CHECK(kl >= 0.0);
    }
}

TEST_CASE("kl_divergence: mismatched binning throws") {
    Tensor v({8}, 0.5);
    Histogram p = histogram_pdf(v, 4, 0.0, 1.0);
    Histogram q = histogram_pdf(v, 4, 0.0, 2.0);
    CHECK_THROWS_AS(kl_divergence(p, q), DomainError);
}

TEST_CASE("cosine_similarity_rows: identical, orthogonal, random oracle") {
    Tensor a = Tensor::from_rows({{1, 2, 3}, {0, 1, 0}});
    Tensor sim = cosine_similarity_rows(a, a);
    CHECK(sim[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sim[1] == doctest::Approx(1.0).epsilon(1e-12));

    Tensor b = Tensor::from_rows({{1, 0}, {0, 1}});
    Tensor c = Tensor::from_rows({{0, 1}, {1, 0}});
    Tensor s2 = cosine_similarity_rows(b, c);
    CHECK(s2[0] == 0.0);
    CHECK(s2[1] == 0.0);

    Rng rng(3);
    Tensor x = random_matrix(6, 5, rng);
    Tensor y = random_matrix(6, 5, rng);
    Tensor s3 = cosine_similarity_rows(x, y);
    for (std::size_t i = 0; i < 6; ++i) {
        double dot = 0.0, nx = 0.0, ny = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            dot += x(i, j) * y(i, j);
            nx += x(i, j) * x(i, j);
            ny += y(i, j) * y(i, j);
        }
        CHECK(s3[i] == doctest::Approx(dot / std::sqrt(nx * ny)).epsilon(1e-12));
        CHECK(std::abs(s3[i]) <= 1.0 + 1e-12);
    }
}

TEST_CASE("cosine_similarity_rows: zero-norm row throws") {
    Tensor a = Tensor::from_rows({{0, 0}});
    Tensor b = Tensor::from_rows({{1, 1}});
    CHECK_THROWS_AS(cosine_similarity_rows(a, b), DomainError);
}

TEST_CASE("tensor invariants: positive extents, reshape preserves count") {
    CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
    Tensor t({2, 6});
    CHECK_THROWS_AS(t.reshaped({5}), ShapeError);
    Tensor r = t.reshaped({3, 4});
    CHECK(r.rows() == 3);
    CHECK(r.size() == 12);
}

TEST_CASE("rng: counter-based stream is reproducible and fork is independent") {
    Rng a(99), b(99);
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng f1 = Rng(99).fork(1), f2 = Rng(99).fork(2);
    CHECK(f1.next_u64() != f2.next_u64());
    Rng c(99);
    double mean = 0.0;
    for (int i = 0; i < 4096; ++i) mean += c.next_gaussian();
    CHECK(std::abs(mean / 4096.0) < 0.08);
}
