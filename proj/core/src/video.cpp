#include "zstyle/video.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace zstyle {

Tensor interframe_attend(const Tensor& q_i, const Tensor& k_i, const Tensor& v_i,
                         const FrameContext& ctx) {
    if (k_i.rank() != 2 || v_i.rank() != 2 || q_i.rank() != 2)
        throw ContractError("interframe attention operands must be rank-2");
    if (!k_i.same_shape(ctx.k0) || !k_i.same_shape(ctx.k_prev) || !v_i.same_shape(ctx.v0) ||
        !v_i.same_shape(ctx.v_prev))
        throw ContractError("frame context tap shapes do not match the current frame");
    Tensor l0 = scaled_logits(q_i, ctx.k0);
    Tensor lp = scaled_logits(q_i, ctx.k_prev);
    return fused_block_attention({{&l0, &ctx.v0}, {&lp, &ctx.v_prev}});
}

Tensor energy_guidance_step(const Tensor& x_t, int t, const Denoiser& d, const NoiseSchedule& s,
                            const Tensor& prev_x0hat, const GuidanceConfig& g) {
    if (!std::isfinite(g.weight) || g.weight < 0.0)
        throw ConfigError("guidance weight must be finite and nonnegative");
    Tensor eps = d.predict_noise(x_t, t);
    if (!eps.same_shape(x_t)) throw ContractError("denoiser returned a mismatched shape");
    Tensor x0_hat = predict_x0(x_t, eps, t, s);
    if (!x0_hat.same_shape(prev_x0hat)) throw ShapeError("previous x0_hat shape disagrees");
    const double inv_sa = 1.0 / std::sqrt(s.alpha(t));
    Tensor x = x_t;
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] -= g.weight * (x0_hat[i] - prev_x0hat[i]) * inv_sa;
    return ddim_step(x, t, d, s);
}

ConsistencyReport consistency_report(const std::vector<Tensor>& frames) {
    if (frames.size() < 2) throw DomainError("consistency report needs at least two frames");
    ConsistencyReport report;
    report.diffs.reserve(frames.size() - 1);
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!frames[i].same_shape(frames[i - 1]))
            throw ShapeError("frames must share one extent");
        Tensor d = frames[i];
        d -= frames[i - 1];
        report.diffs.push_back(frobenius_norm(d));
    }
    double sum = 0.0;
    for (double v : report.diffs) sum += v;
    report.mean_diff = sum / static_cast<double>(report.diffs.size());
    double var = 0.0;
    for (double v : report.diffs) {
        const double r = v - report.mean_diff;
        var += r * r;
    }
    report.var_diff = var / static_cast<double>(report.diffs.size());
    return report;
}

std::string consistency_csv(const ConsistencyReport& report) {
    std::ostringstream out;
    out << "i,diff\n";
    char buf[64];
    for (std::size_t i = 0; i < report.diffs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, report.diffs[i]);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "mean,%.17g\n", report.mean_diff);
    out << buf;
    std::snprintf(buf, sizeof(buf), "var,%.17g\n", report.var_diff);
    out << buf;
    return out.str();
}

VideoResult stylize_video(const std::vector<Tensor>& frames, const Tensor& style,
                          const ToyDenoiser& model, const NoiseSchedule& sched,
                          const InjectionConfig& cfg, const GuidanceConfig& g) {
    if (frames.empty()) throw DomainError("stylize_video needs at least one frame");
    for (const Tensor& f : frames)
        if (!f.same_shape(frames.front())) throw ShapeError("frames must share one extent");
    if (!std::isfinite(g.weight) || g.weight < 0.0)
        throw ConfigError("guidance weight must be finite and nonnegative");

    VideoResult out;
    const std::vector<Tensor> styles{style};

    std::vector<FrameRecord> records(frames.size());
    ReverseHooks first_hooks;
    first_hooks.record = &records[0];
    out.per_frame.push_back(stylize_with_hooks(frames[0], styles, model, sched, cfg, first_hooks));
    out.frames.push_back(out.per_frame.back().image);

    for (std::size_t i = 1; i < frames.size(); ++i) {
        ReverseHooks hooks;
        hooks.anchor = &records[0];
        hooks.prev = &records[i - 1];
        hooks.record = &records[i];
        hooks.guidance_weight = g.weight;
        out.per_frame.push_back(stylize_with_hooks(frames[i], styles, model, sched, cfg, hooks));
        out.frames.push_back(out.per_frame.back().image);
    }

    if (out.frames.size() >= 2) out.report = consistency_report(out.frames);
    return out;
}

}  // namespace zstyle
