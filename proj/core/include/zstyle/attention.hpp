#pragma once

#include <optional>
#include <vector>

#include "zstyle/tensor.hpp"

namespace zstyle {

// Per-style-token (or per entry) admission weights in [0, 1]: 1 admits the
// style logit unchanged, 0 applies the masked-logit sentinel, fractional
// values ramp linearly in logit space between the two. Rank-1 [M] weights
// broadcast across query rows; rank-2 [N x M] weights apply entrywise.
struct StyleMask {
    Tensor weights;
};

// One softmax block: pre-scaled logits [N x M_b] attending to values [M_b x d].
struct AttentionBlock {
    const Tensor* logits;
    const Tensor* values;
};

// Softmax-attention over an ordered list of blocks, normalized jointly across
// all blocks. Each block's exponential sums and value accumulators are folded
// separately and combined in block order with a single final division, so a
// duplicated block halves every weight exactly and identical-block setups
// reproduce single-block attention bit-for-bit.
Tensor fused_block_attention(const std::vector<AttentionBlock>& blocks);

// Softmax(Q K^T / sqrt(d)) V with d = channel extent of Q.
Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v);

// Content queries against style keys/values (the naive fusion).
Tensor style_cross_naive(const Tensor& qc, const Tensor& ks, const Tensor& vs);

// lambda * Attn(Qc,Ks,Vs) + (1 - lambda) * Attn(Qc,Kc,Vc), lambda in [0,1].
Tensor simple_addition(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                       const Tensor& ks, const Tensor& vs, double lambda);

// One softmax over [lambda Qc Ks^T / sqrt(d), Qc Kc^T / sqrt(d)] applied to
// the stacked values [Vs; Vc]. lambda scales only the style block.
Tensor reweighted_attention(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                            const Tensor& ks, const Tensor& vs, double lambda);

struct OffsetFusionResult {
    Tensor fused;
    std::vector<double> offset_c;  // per query row
};

// Equal-weight fusion rewritten as one softmax with the row-wise offset
// C = ln(sum_j exp(Qc Kc^T / sqrt(d)) / sum_j exp(Qc Ks^T / sqrt(d))) added to
// the style block. Numerically equal to simple_addition(lambda = 0.5).
OffsetFusionResult offset_c_fusion(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                                   const Tensor& ks, const Tensor& vs);

// Reweighted fusion with style logits gated by a StyleMask. Fully masked rows
// fall back to content self-attention because the content block survives.
Tensor masked_reweighted(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                         const Tensor& ks, const Tensor& vs, double lambda,
                         const StyleMask& mask);

struct StyleRef {
    const Tensor& k;
    const Tensor& v;
};

// One softmax over [lambda Qc Ks_1^T, ..., lambda Qc Ks_N^T, Qc Kc^T] (each
// scaled by 1/sqrt(d)) applied to [Vs_1; ...; Vs_N; Vc].
Tensor multi_style_reweighted(const Tensor& qc, const Tensor& kc, const Tensor& vc,
                              const std::vector<StyleRef>& styles, double lambda,
                              const StyleMask* mask = nullptr);

// Scaled logits Q K^T / sqrt(d) shared by every fusion mode.
Tensor scaled_logits(const Tensor& q, const Tensor& k, double scale_mult = 1.0);

// Adds the mask's ramp offsets kMaskedLogit * (1 - weight) to style logits.
void apply_style_mask(Tensor& style_logits, const StyleMask& mask);

}  // namespace zstyle
