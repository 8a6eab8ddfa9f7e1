#include "zstyle/attention.hpp"

#include <cmath>
#include <limits>

namespace zstyle {

namespace {

void check_qkv(const Tensor& q, const Tensor& k, const Tensor& v) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
        throw ShapeError("attention operands must be rank-2");
    if (q.cols() != k.cols()) throw ShapeError("query/key channel extents disagree");
    if (k.rows() != v.rows()) throw ShapeError("key/value token extents disagree");
}

}  // namespace

void apply_style_mask(Tensor& style_logits, const StyleMask& mask) {
    const std::size_t n = style_logits.rows(), m = style_logits.cols();
    const Tensor& w = mask.weights;
    if (w.rank() == 1) {
        if (w.size() != m) throw ShapeError("mask weight count does not match style tokens");
    } else if (w.rank() == 2) {
        if (w.rows() != n || w.cols() != m) throw ShapeError("mask matrix shape mismatch");
    } else {
        throw ShapeError("mask weights must be rank-1 or rank-2");
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double wij = w.rank() == 1 ? w[j] : w(i, j);
            if (wij < 0.0 || wij > 1.0) throw DomainError("mask weights must lie in [0, 1]");
            style_logits(i, j) += kMaskedLogit * (1.0 - wij);
        }
}

Tensor scaled_logits(const Tensor& q, const Tensor& k, double scale_mult) {
    check_qkv(q, k, k);
    Tensor logits = matmul(q, transpose(k));
    logits *= scale_mult / std::sqrt(static_cast<double>(q.cols()));
    return logits;
}

Tensor fused_block_attention(const std::vector<AttentionBlock>& blocks) {
    if (blocks.empty()) throw ShapeError("fused attention needs at least one block");
    const std::size_t n = blocks.front().logits->rows();
    const std::size_t d = blocks.front().values->cols();
    for (const AttentionBlock& b : blocks) {
        if (b.logits->rank() != 2 || b.values->rank() != 2)
            throw ShapeError("attention blocks must be rank-2");
        if (b.logits->rows() != n) throw ShapeError("attention blocks disagree on query count");
        if (b.logits->cols() != b.values->rows())
            throw ShapeError("logit columns must match value rows");
        if (b.values->cols() != d) throw ShapeError("attention blocks disagree on channels");
    }
    Tensor out({n, d});
    std::vector<double> accum(d);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (const AttentionBlock& b : blocks)
            for (std::size_t j = 0; j < b.logits->cols(); ++j)
                mx = std::max(mx, (*b.logits)(i, j));
        if (mx <= kMaskedLogit) throw DomainError("attention row is entirely masked");
        double denom = 0.0;
        std::fill(accum.begin(), accum.end(), 0.0);
        for (const AttentionBlock& b : blocks) {
            double bsum = 0.0;
            std::vector<double> bacc(d, 0.0);
            const std::size_t m = b.logits->cols();
            for (std::size_t j = 0; j < m; ++j) {
                const double e = std::exp((*b.logits)(i, j) - mx);
                bsum += e;
                const double* vrow = b.values->data() + j * d;
                for (std::size_t c = 0; c < d; ++c) bacc[c] += e * vrow[c];
            }
            denom += bsum;
            for (std::size_t c = 0; c < d; ++c) accum[c] += bacc[c];
        }
        for (std::size_t c = 0; c < d; ++c) out(i, c) = accum[c] / denom;
    }
    return out;
}

Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v) {
    check_qkv(q, k, v);
    Tensor logits = scaled_logits(q, k);
    return fused_block_attention({{&logits, &v}});
}

Tensor style_cross_naive(const Tensor& qc, const Tensor& ks, const Tensor& vs) {
    return attend(qc, ks, vs);
}

Tensor simple_addition(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                       const Tensor& ks, const Tensor& vs, double lambda) {
    if (lambda < 0.0 || lambda > 1.0)
        throw ConfigError("simple addition needs lambda in [0, 1]");
    Tensor cross = attend(qc, ks, vs);
    Tensor self = attend(qc, kc, vc);
    cross *= lambda;
    self *= 1.0 - lambda;
    return cross + self;
}

Tensor reweighted_attention(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                            const Tensor& ks, const Tensor& vs, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("reweighted attention needs lambda > 0");
    check_qkv(qc, kc, vc);
    check_qkv(qc, ks, vs);
    Tensor style_logits = scaled_logits(qc, ks, lambda);
    Tensor content_logits = scaled_logits(qc, kc);
    return fused_block_attention({{&style_logits, &vs}, {&content_logits, &vc}});
}

OffsetFusionResult offset_c_fusion(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                                   const Tensor& ks, const Tensor& vs) {
    check_qkv(qc, kc, vc);
    check_qkv(qc, ks, vs);
    Tensor style_logits = scaled_logits(qc, ks);
    Tensor content_logits = scaled_logits(qc, kc);

    // Row-wise C = LSE(content) - LSE(style), stabilized by each row's max.
    const std::size_t n = qc.rows();
    auto row_lse = [](const Tensor& l, std::size_t i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < l.cols(); ++j) mx = std::max(mx, l(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < l.cols(); ++j) s += std::exp(l(i, j) - mx);
        return mx + std::log(s);
    };
    OffsetFusionResult res;
    res.offset_c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = row_lse(content_logits, i) - row_lse(style_logits, i);
        res.offset_c[i] = c;
        for (std::size_t j = 0; j < style_logits.cols(); ++j) style_logits(i, j) += c;
    }
    res.fused = fused_block_attention({{&style_logits, &vs}, {&content_logits, &vc}});
    return res;
}

Tensor masked_reweighted(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                         const Tensor& ks, const Tensor& vs, double lambda,
                         const StyleMask& mask) {
    if (!(lambda > 0.0)) throw ConfigError("reweighted attention needs lambda > 0");
    check_qkv(qc, kc, vc);
    check_qkv(qc, ks, vs);
    Tensor style_logits = scaled_logits(qc, ks, lambda);
    apply_style_mask(style_logits, mask);
    Tensor content_logits = scaled_logits(qc, kc);
    return fused_block_attention({{&style_logits, &vs}, {&content_logits, &vc}});
}

Tensor multi_style_reweighted(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                              const std::vector<StyleRef>& styles, double lambda,
                              const StyleMask* mask) {
    if (styles.empty()) throw ConfigError("multi-style fusion needs at least one style");
    if (!(lambda > 0.0)) throw ConfigError("reweighted attention needs lambda > 0");
    check_qkv(qc, kc, vc);
    for (const StyleRef& s : styles) check_qkv(qc, s.k, s.v);

    std::vector<Tensor> style_logits;
    style_logits.reserve(styles.size());
    for (const StyleRef& s : styles) {
        Tensor l = scaled_logits(qc, s.k, lambda);
        if (mask != nullptr) apply_style_mask(l, *mask);
        style_logits.push_back(std::move(l));
    }
    Tensor content_logits = scaled_logits(qc, kc);

    std::vector<AttentionBlock> blocks;
    blocks.reserve(styles.size() + 1);
    for (std::size_t i = 0; i < styles.size(); ++i)
        blocks.push_back({&style_logits[i], &styles[i].v});
    blocks.push_back({&content_logits, &vc});
    return fused_block_attention(blocks);
}

}  // namespace zstyle
