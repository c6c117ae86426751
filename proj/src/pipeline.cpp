// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "stylefuse/error.hpp"

namespace stylefuse {

std::size_t TransferTrace::count(InjectionKind phase) const {
    return std::size_t(std::count_if(steps.begin(), steps.end(), [&](const StepRecord& r) { return r.phase == phase; }));
}

nlohmann::json TransferTrace::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : steps) {
        rows.push_back({{"step", r.step},
                        {"timestep", r.train_timestep},
                        {"phase", to_string(r.phase)},
                        {"residual", r.residual},
                        {"attention", r.attention ? nlohmann::json(to_string(*r.attention)) : nlohmann::json()},
                        {"layers", r.injected_layers},
                        {"ms", r.millis}});
    }
    return {{"alpha", alpha},
            {"sample_steps", sample_steps},
            {"t_alpha", t_alpha},
            {"order", to_string(order)},
            {"evals",
             {{"inversion", evals.inversion},
              {"content_capture", evals.content_capture},
              {"style_capture", evals.style_capture},
              {"target", evals.target}}},
            {"total_ms", total_millis},
            {"steps", rows}};
}

namespace {

EngineConfig seeded(EngineConfig c, std::uint64_t seed) {
    c.unet.seed = seed;
    c.encoders.seed = seed;
    return c;
}

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Runs `fn` and rewraps any failure with the stage and step it happened at.
template <typename F>
auto staged(const char* stage, int step, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, step, e.what());
    }
}

// Inversion of one branch over [lo, hi], reusing and extending a cached
// trajectory when one is supplied.
LatentTrajectory branch_trajectory(const Latent& z0, int lo, int hi, const Denoiser& backend, const Tensor& null_cond,
                                   const NoiseSchedule& s, LatentTrajectory* cached, int* runs) {
    if (lo > hi) return LatentTrajectory(z0.branch);
    if (!cached) {
        ++*runs;
        return invert_trajectory(z0, lo, hi, backend, null_cond, s);
    }
    if (cached->empty()) {
        ++*runs;
        *cached = invert_trajectory(z0, 1, hi, backend, null_cond, s);
    } else if (cached->entries().rbegin()->first < hi) {
        ++*runs;
        extend_trajectory(*cached, hi, backend, null_cond, s);
    }
    return cached->slice(lo, hi);
}

}  // namespace

StyleTransferEngine::StyleTransferEngine(const EngineConfig& config, std::uint64_t seed)
    : config_(seeded(config, seed)),
      backend_(make_denoiser(config_.denoiser, config_.unet)),
      codec_(make_codec(config_.codec, config_.codec_factor, seed)),
      conditioner_(config_.encoders) {
    if (codec_.latent_channels() != backend_->latent_channels()) {
        throw ConfigError("codec produces " + std::to_string(codec_.latent_channels()) +
                          " latent channels, denoiser expects " + std::to_string(backend_->latent_channels()));
    }
    if (conditioner_.dim() != backend_->embedding_dim()) {
        throw ConfigError("encoder dim " + std::to_string(conditioner_.dim()) + " differs from denoiser embedding dim " +
                          std::to_string(backend_->embedding_dim()));
    }
}

NoiseSchedule StyleTransferEngine::schedule(int sample_steps) const {
    return make_schedule(config_.train_steps, config_.beta_start, config_.beta_end, sample_steps, config_.spacing);
}

std::vector<LayerDescriptor> StyleTransferEngine::layers(std::size_t h, std::size_t w) const {
    const std::size_t f = codec_.downscale_factor();
    return backend_->layers(h / f, w / f);
}

void StyleTransferEngine::validate(const TransferJob& job) const {
    const auto& c = job.content.pixels;
    if (c.rank() != 3 || c.shape() != job.style.pixels.shape()) {
        throw ConfigError("content " + shape_str(c.shape()) + " and style " + shape_str(job.style.pixels.shape()) +
                          " images must be (3, H, W) of equal size");
    }
    const std::size_t multiple = codec_.downscale_factor() * backend_->spatial_multiple();
    if (c.dim(1) % multiple || c.dim(2) % multiple) {
        throw ConfigError("image size " + std::to_string(c.dim(1)) + "x" + std::to_string(c.dim(2)) +
                          " must be a multiple of " + std::to_string(multiple));
    }
    if (job.config.sample_steps > config_.train_steps) {
        throw ConfigError("sample steps exceed the " + std::to_string(config_.train_steps) + " training steps");
    }
    job.config.validate(layers(c.dim(1), c.dim(2)));
}

ConditioningBundle StyleTransferEngine::conditioning(const TransferJob& job) const {
    auto bundle = conditioner_.build_bundle(job.content_prompt, job.style, job.edit_prompt, job.pinned_style);
    if (!job.style_text) bundle.v_st = bundle.v_c.tokens;
    return bundle;
}

TransferResult StyleTransferEngine::run(const TransferJob& job, const ProgressFn& progress, InversionCache* cache) const {
    const auto t_start = Clock::now();
    const InjectionConfig& cfg = job.config;
    validate(job);
    const NoiseSchedule s = schedule(cfg.sample_steps);
    const int T = cfg.sample_steps;
    const int t_alpha = deciding_point(cfg.alpha, T);

    TransferResult result;
    auto& trace = result.trace;
    trace.alpha = cfg.alpha;
    trace.sample_steps = T;
    trace.t_alpha = t_alpha;
    trace.order = cfg.order;

    result.conditioning = staged("conditioning", -1, [&] { return conditioning(job); });
    const Tensor& null_cond = result.conditioning.null_embedding.tokens;
    const Tensor& v_st = result.conditioning.v_st;

    const Latent zc0 = staged("encode", -1, [&] { return codec_.encode(job.content, Branch::content); });

    const auto content_steps = steps_for(InjectionKind::content, t_alpha, T, cfg.order);
    const auto style_steps = steps_for(InjectionKind::style, t_alpha, T, cfg.order);
    const bool use_content = cfg.content_enabled() && !content_steps.empty();
    const bool use_style = cfg.style_enabled() && !style_steps.empty();

    // Content inversion always reaches T: the target branch starts from z^c*_T.
    CountingDenoiser inversion_backend(*backend_);
    int content_runs = 0, style_runs = 0;
    const int content_lo = use_content ? content_steps.front() : T;
    const LatentTrajectory content_traj = staged("content inversion", -1, [&] {
        return branch_trajectory(zc0, content_lo, T, inversion_backend, null_cond, s, cache ? &cache->content : nullptr,
                                 &content_runs);
    });
    LatentTrajectory style_traj(Branch::style);
    if (use_style) {
        const Latent zs0 = staged("encode", -1, [&] { return codec_.encode(job.style, Branch::style); });
        style_traj = staged("style inversion", -1, [&] {
            return branch_trajectory(zs0, style_steps.front(), style_steps.back(), inversion_backend, null_cond, s,
                                     cache ? &cache->style : nullptr, &style_runs);
        });
    }
    trace.evals.inversion = inversion_backend.calls();
    if (cache) {
        cache->content_inversions += content_runs;
        cache->style_inversions += style_runs;
        cache->evals += inversion_backend.calls();
    }

    const CaptureRequest content_request = capture_request(InjectionKind::content, cfg);
    const CaptureRequest style_request = capture_request(InjectionKind::style, cfg);
    CountingDenoiser content_capture(*backend_), style_capture(*backend_), target(*backend_);

    Latent z = content_traj.at(T);
    z.branch = Branch::target;
    FeatureBank content_bank(Branch::content), style_bank(Branch::style);

    for (int t = T; t >= 1; --t) {
        const auto t_step = Clock::now();
        const InjectionKind phase = select_injection(t, t_alpha, cfg.order);
        InjectionDirective directive;
        directive.step = t;

        // Branch features of step t come from the inversion latent z*_t and
        // are consumed by target step t right away.
        if (phase == InjectionKind::content && use_content) {
            staged("content capture", t, [&] {
                content_bank.insert(t, capture_step(content_traj, t, content_capture, null_cond, s, content_request));
                directive = content_directive(content_bank, t, cfg);
                return 0;
            });
        } else if (phase == InjectionKind::style && use_style) {
            staged("style capture", t, [&] {
                style_bank.insert(t, capture_step(style_traj, t, style_capture, null_cond, s, style_request));
                directive = style_directive(style_bank, t, cfg);
                return 0;
            });
        }

        z = staged("denoise", t, [&] {
            const StepTime st = s.step_time(t);
            Tensor eps;
            if (cfg.cfg_scale == 1.0) {
                eps = target.predict_noise(z.data, st, v_st, directive, false).eps;
            } else {
                const Tensor eps_u = target.predict_noise(z.data, st, null_cond, directive, false).eps;
                const Tensor eps_c = target.predict_noise(z.data, st, v_st, directive, false).eps;
                eps = cfg_combine(eps_u, eps_c, float(cfg.cfg_scale));
            }
            Latent next = ddim_step(z, eps, t, t - 1, s);
            require_finite(next, "denoise");
            return next;
        });

        StepRecord rec;
        rec.step = t;
        rec.train_timestep = s.train_timestep(t);
        rec.phase = phase;
        rec.residual = directive.has_residual();
        if (directive.has_attention(AttentionOverrideKind::qk)) rec.attention = AttentionOverrideKind::qk;
        if (directive.has_attention(AttentionOverrideKind::kv)) rec.attention = AttentionOverrideKind::kv;
        rec.injected_layers = directive.layers.size();
        rec.millis = millis_since(t_step);
        trace.steps.push_back(rec);

        if (!job.keep_banks) {
            content_bank.erase(t);
            style_bank.erase(t);
        }
        if (progress) progress(T - t + 1, T);
    }

    trace.evals.content_capture = content_capture.calls();
    trace.evals.style_capture = style_capture.calls();
    trace.evals.target = target.calls();
    result.final_latent = z;
    result.output = staged("decode", 0, [&] { return codec_.decode(z, ImageRole::output); });
    result.content_bank = std::move(content_bank);
    result.style_bank = std::move(style_bank);
    trace.total_millis = millis_since(t_start);
    return result;
}

TransferResult run_style_transfer(const EngineConfig& config, const TransferJob& job, const ProgressFn& progress) {
    const StyleTransferEngine engine(config, job.seed);
    return engine.run(job, progress);
}

TransferResult run_edit(const EngineConfig& config, const TransferJob& job, const ProgressFn& progress) {
    if (!job.edit_prompt || job.edit_prompt->empty()) throw ConfigError("edit requires a non-empty edit prompt");
    return run_style_transfer(config, job, progress);
}

TransferResult run_translation(const EngineConfig& config, const ImageAsset& content, const ImageAsset& reference,
                               const InjectionConfig& injection, std::uint64_t seed) {
    TransferJob job;
    job.content = content;
    job.content.role = ImageRole::content;
    job.style = reference;
    job.style.role = ImageRole::style;
    job.config = injection;
    job.seed = seed;
    return run_style_transfer(config, job);
}

SweepResult sweep_alpha(const EngineConfig& config, const TransferJob& job, const std::vector<double>& alphas,
                        const ProgressFn& progress) {
    if (alphas.empty()) throw ConfigError("sweep needs at least one alpha");
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha " + std::to_string(a) + " outside [0, 1]");
    }
    const StyleTransferEngine engine(config, job.seed);
    SweepResult out;
    out.alphas = alphas;

    // Invert once over the widest range any alpha needs; runs then slice.
    const int T = job.config.sample_steps;
    int style_hi = 0;
    for (double a : alphas) {
        const auto steps = steps_for(InjectionKind::style, deciding_point(a, T), T, job.config.order);
        if (!steps.empty()) style_hi = std::max(style_hi, steps.back());
    }
    {
        const auto null_cond = engine.conditioner().encode_text("").tokens;
        const NoiseSchedule s = engine.schedule(T);
        CountingDenoiser counter(engine.backend());
        const Latent zc0 = engine.codec().encode(job.content, Branch::content);
        out.cache.content = invert_trajectory(zc0, 1, T, counter, null_cond, s);
        ++out.cache.content_inversions;
        if (job.config.style_enabled() && style_hi > 0) {
            const Latent zs0 = engine.codec().encode(job.style, Branch::style);
            out.cache.style = invert_trajectory(zs0, 1, style_hi, counter, null_cond, s);
            ++out.cache.style_inversions;
        }
        out.cache.evals = counter.calls();
    }

    for (double a : alphas) {
        TransferJob j = job;
        j.config.alpha = a;
        out.runs.push_back(engine.run(j, progress, &out.cache));
    }
    return out;
}

ImageAsset montage(const std::vector<ImageAsset>& images, std::size_t gap) {
    if (images.empty()) throw ConfigError("montage needs at least one image");
    std::size_t h = 0, w = 0;
    for (const auto& im : images) {
        h = std::max(h, im.height());
        w += im.width();
    }
    w += gap * (images.size() - 1);
    Tensor px({3, h, w}, 1.0f);
    std::size_t x0 = 0;
    for (const auto& im : images) {
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < im.height(); ++y)
                for (std::size_t x = 0; x < im.width(); ++x) px.at(c, y, x0 + x) = im.pixels.at(c, y, x);
        x0 += im.width() + gap;
    }
    return ImageAsset{std::move(px), ImageRole::output};
}

}  // namespace stylefuse
