#include "zstyle/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "zstyle/sain.hpp"

namespace zstyle {

namespace {

struct StylePathCache {
    std::vector<TapRequest> taps_by_t;  // entries 1..T populated
    std::vector<Tensor> feat_by_t;      // attention output at the probe block
    Tensor x_T;
};

// Gram diagnostics read the attention output of the deepest injected block:
// the per-step feature map the fusion actually rewrites. Falls back to the
// model's last block when no injection blocks are configured.
int probe_block(const InjectionConfig& cfg, const ToyDenoiser& model) {
    return cfg.blocks.empty() ? model.cfg.num_blocks - 1 : *cfg.blocks.rbegin();
}

StylePathCache run_style_path(const Tensor& style, const ToyDenoiser& model,
                              const NoiseSchedule& sched, const std::set<int>& blocks,
                              int probe) {
    const int T = sched.steps();
    StylePathCache cache;
    cache.taps_by_t.resize(static_cast<std::size_t>(T) + 1);
    cache.feat_by_t.resize(static_cast<std::size_t>(T) + 1);
    Trajectory traj = ddim_invert(style, model.as_denoiser(), sched);
    cache.x_T = traj.states.back();
    Tensor x = cache.x_T;
    for (int t = T; t >= 1; --t) {
        TapRequest& sink = cache.taps_by_t[static_cast<std::size_t>(t)];
        sink.blocks = blocks;
        sink.blocks.insert(probe);
        Tensor eps = model.forward(x, t, nullptr, &sink);
        const BlockTaps& bt = sink.taps.at(probe);
        cache.feat_by_t[static_cast<std::size_t>(t)] = attend(bt.q, bt.k, bt.v);
        x = ddim_update(x, eps, t, sched);
    }
    return cache;
}

void validate_config(const InjectionConfig& cfg, const ToyDenoiser& model,
                     const NoiseSchedule& sched, std::size_t n_styles) {
    if (n_styles == 0) throw ConfigError("stylize needs at least one style image");
    if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
    const int T = sched.steps();
    if (cfg.window_start < 0 || cfg.window_start > cfg.window_end || cfg.window_end > T)
        throw ConfigError("injection step window must satisfy 0 <= start <= end <= T");
    for (int b : cfg.blocks)
        if (b < 0 || b >= model.cfg.num_blocks)
            throw ConfigError("injection block index outside the model's blocks");
    if (T > model.cfg.steps)
        throw ConfigError("schedule has more steps than the model's time embedding");
}

Tensor apply_sain_to_latent(const Tensor& x_T_content, const Tensor& x_T_style, SainMode mode,
                            int bins, double* w_out, double* kl_out) {
    const std::size_t h = x_T_content.extent(0), w = x_T_content.extent(1),
                      c = x_T_content.extent(2);
    Tensor fc = x_T_content.reshaped({h * w, c});
    Tensor fs = x_T_style.reshaped({x_T_style.extent(0) * x_T_style.extent(1), x_T_style.extent(2)});
    const ScaleWeight sw = scale_weight(fc, fs, bins);
    const double weight = mode == SainMode::PrintedSign ? std::exp(sw.kl) : sw.w;
    if (w_out != nullptr) *w_out = weight;
    if (kl_out != nullptr) *kl_out = sw.kl;
    return sain_with_weight(fc, fs, weight).reshaped({h, w, c});
}

}  // namespace

StylizeResult stylize(const Tensor& content, const std::vector<Tensor>& styles,
                      const ToyDenoiser& model, const NoiseSchedule& sched,
                      const InjectionConfig& cfg) {
    return stylize_with_hooks(content, styles, model, sched, cfg, ReverseHooks{});
}

StylizeResult stylize_with_hooks(const Tensor& content, const std::vector<Tensor>& styles,
                                 const ToyDenoiser& model, const NoiseSchedule& sched,
                                 const InjectionConfig& cfg, const ReverseHooks& hooks) {
    validate_config(cfg, model, sched, styles.size());
    const int T = sched.steps();
    const bool interframe = hooks.anchor != nullptr && hooks.prev != nullptr;
    const int probe = probe_block(cfg, model);

    Trajectory traj_c = ddim_invert(content, model.as_denoiser(), sched);
    std::vector<StylePathCache> style_caches;
    style_caches.reserve(styles.size());
    for (const Tensor& s : styles)
        style_caches.push_back(run_style_path(s, model, sched, cfg.blocks, probe));

    StylizeResult result;
    Tensor x = traj_c.states.back();
    if (cfg.sain != SainMode::Off)
        x = apply_sain_to_latent(x, style_caches.front().x_T, cfg.sain, cfg.sain_bins,
                                 &result.sain_w, &result.sain_kl);

    if (hooks.record != nullptr) {
        hooks.record->taps_by_t.assign(static_cast<std::size_t>(T) + 1, TapRequest{});
        hooks.record->x0hat_by_t.assign(static_cast<std::size_t>(T) + 1, Tensor{});
    }

    Tensor c_ref = traj_c.states.back();  // plain reconstruction for diagnostics
    const StyleMask* mask = cfg.mask.has_value() ? &cfg.mask.value() : nullptr;

    for (int t = T; t >= 1; --t) {
        const int step_index = T - t;
        const bool inject =
            step_index >= cfg.window_start && step_index < cfg.window_end && !cfg.blocks.empty();

        AttentionOverride overrides;
        for (int b : cfg.blocks) {
            const std::size_t tb = static_cast<std::size_t>(t);
            if (interframe) {
                const TapRequest& anchor_taps = hooks.anchor->taps_by_t[tb];
                const TapRequest& prev_taps = hooks.prev->taps_by_t[tb];
                overrides[b] = [&, b, tb, inject](const Tensor& q, const Tensor&,
                                                  const Tensor&) {
                    std::vector<Tensor> logit_store;
                    std::vector<AttentionBlock> fused;
                    logit_store.reserve(style_caches.size() + 2);
                    if (inject) {
                        for (const StylePathCache& sc : style_caches) {
                            const BlockTaps& taps = sc.taps_by_t[tb].taps.at(b);
                            Tensor l = scaled_logits(q, taps.k, cfg.lambda);
                            if (mask != nullptr) apply_style_mask(l, *mask);
                            logit_store.push_back(std::move(l));
                            fused.push_back({&logit_store.back(), &taps.v});
                        }
                    }
                    const BlockTaps& a = anchor_taps.taps.at(b);
                    const BlockTaps& p = prev_taps.taps.at(b);
                    logit_store.push_back(scaled_logits(q, a.k));
                    fused.push_back({&logit_store.back(), &a.v});
                    logit_store.push_back(scaled_logits(q, p.k));
                    fused.push_back({&logit_store.back(), &p.v});
                    return fused_block_attention(fused);
                };
            } else if (inject) {
                overrides[b] = [&, b, tb](const Tensor& q, const Tensor& k, const Tensor& v) {
                    std::vector<StyleRef> refs;
                    refs.reserve(style_caches.size());
                    for (const StylePathCache& sc : style_caches) {
                        const BlockTaps& taps = sc.taps_by_t[tb].taps.at(b);
                        refs.push_back(StyleRef{taps.k, taps.v});
                    }
                    return multi_style_reweighted(q, k, v, refs, cfg.lambda, mask);
                };
            }
        }
        const AttentionOverride* ovr = overrides.empty() ? nullptr : &overrides;

        TapRequest sink;
        sink.blocks = cfg.blocks;
        sink.blocks.insert(probe);
        Tensor eps = model.forward(x, t, ovr, &sink);
        Tensor x0_hat = predict_x0(x, eps, t, sched);

        if (hooks.guidance_weight > 0.0 && hooks.prev != nullptr && inject) {
            const Tensor& prev_x0 = hooks.prev->x0hat_by_t[static_cast<std::size_t>(t)];
            const double inv_sa = 1.0 / std::sqrt(sched.alpha(t));
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] -= hooks.guidance_weight * (x0_hat[i] - prev_x0[i]) * inv_sa;
            sink.taps.clear();
            eps = model.forward(x, t, ovr, &sink);
            x0_hat = predict_x0(x, eps, t, sched);
        }

        if (hooks.record != nullptr) {
            hooks.record->taps_by_t[static_cast<std::size_t>(t)] = sink;
            hooks.record->x0hat_by_t[static_cast<std::size_t>(t)] = x0_hat;
        }

        // Diagnostics: Gram distances between attention outputs at the probe
        // block, style path vs stylized path and vs the plain content path.
        StepDiagnostics diag;
        diag.t = t;
        TapRequest ref_sink;
        ref_sink.blocks = {probe};
        Tensor eps_c = model.forward(c_ref, t, nullptr, &ref_sink);
        const BlockTaps& ct = ref_sink.taps.at(probe);
        Tensor content_feat = attend(ct.q, ct.k, ct.v);
        const BlockTaps& own = sink.taps.at(probe);
        Tensor stylized_feat;
        if (inject && cfg.blocks.count(probe) != 0 && !interframe) {
            std::vector<StyleRef> refs;
            refs.reserve(style_caches.size());
            for (const StylePathCache& sc : style_caches) {
                const BlockTaps& st = sc.taps_by_t[static_cast<std::size_t>(t)].taps.at(probe);
                refs.push_back(StyleRef{st.k, st.v});
            }
            stylized_feat = multi_style_reweighted(own.q, own.k, own.v, refs, cfg.lambda, mask);
        } else if (interframe && cfg.blocks.count(probe) != 0) {
            stylized_feat = ovr->at(probe)(own.q, own.k, own.v);
        } else {
            stylized_feat = attend(own.q, own.k, own.v);
        }
        const Tensor& style_feat = style_caches.front().feat_by_t[static_cast<std::size_t>(t)];
        diag.gram_style_stylized = gram_style_distance(style_feat, stylized_feat);
        diag.gram_style_content = gram_style_distance(style_feat, content_feat);
        if (cfg.record_cosine) {
            const BlockTaps& st = style_caches.front().taps_by_t[static_cast<std::size_t>(t)].taps.at(probe);
            Tensor cross = style_cross_naive(own.q, st.k, st.v);
            Tensor self = attend(own.q, own.k, own.v);
            Tensor cos = cosine_similarity_rows(cross, self);
            diag.cosine_cross_self.assign(cos.data(), cos.data() + cos.size());
        }
        result.diags.push_back(std::move(diag));

        c_ref = ddim_update(c_ref, eps_c, t, sched);
        x = ddim_update(x, eps, t, sched);
    }

    result.image = std::move(x);
    return result;
}

double gram_style_distance(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw DomainError("gram distance expects token matrices");
    if (a.cols() != b.cols()) throw ShapeError("gram distance needs equal channel extents");
    auto gram = [](const Tensor& x) {
        Tensor g = matmul(transpose(x), x);
        g *= 1.0 / (static_cast<double>(x.rows()) * static_cast<double>(x.cols()));
        return g;
    };
    Tensor ga = gram(a), gb = gram(b);
    ga -= gb;
    return frobenius_norm(ga);
}

std::pair<double, double> perceptual_losses(const Tensor& result, const Tensor& content,
                                            const Tensor& style, const FeatureExtractor& ext) {
    const std::vector<Tensor> fr = ext.features(result);
    const std::vector<Tensor> fc = ext.features(content);
    const std::vector<Tensor> fs = ext.features(style);
    if (fr.size() != fc.size() || fr.size() != fs.size() || fr.empty())
        throw ContractError("extractor returned mismatched stage counts");

    // Content term uses the deepest stage only.
    Tensor deep = fr.back();
    deep -= fc.back();
    const double l_c = frobenius_norm(deep);

    double l_s = 0.0;
    for (std::size_t i = 0; i < fr.size(); ++i) {
        auto as_tokens = [](const Tensor& m) {
            return m.reshaped({m.extent(0) * m.extent(1), m.extent(2)});
        };
        const Moments mr = channel_moments(as_tokens(fr[i]));
        const Moments ms = channel_moments(as_tokens(fs[i]));
        double mean_d = 0.0, var_d = 0.0;
        for (std::size_t j = 0; j < mr.mean.size(); ++j) {
            const double dm = mr.mean[j] - ms.mean[j];
            const double dv = mr.variance[j] - ms.variance[j];
            mean_d += dm * dm;
            var_d += dv * dv;
        }
        l_s += std::sqrt(mean_d) + std::sqrt(var_d);
    }
    l_s /= static_cast<double>(fr.size());
    return {l_c, l_s};
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& diags) {
    std::ostringstream out;
    out << "t,gram_style_stylized,gram_style_content\n";
    char buf[96];
    for (const StepDiagnostics& d : diags) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", d.t, d.gram_style_stylized,
                      d.gram_style_content);
        out << buf;
    }
    return out.str();
}

StyleMask style_mask_from_image(const Tensor& mask_image, int patch) {
    if (mask_image.rank() != 3 || mask_image.extent(2) != 1)
        throw ShapeError("mask images must be single-channel [H, W, 1]");
    Tensor tokens = patchify(mask_image, patch);
    StyleMask mask;
    mask.weights = Tensor({tokens.rows()});
    for (std::size_t i = 0; i < tokens.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < tokens.cols(); ++j) acc += tokens(i, j);
        mask.weights[i] = std::min(1.0, std::max(0.0, acc / static_cast<double>(tokens.cols())));
    }
    return mask;
}

}  // namespace zstyle
