// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "stylefuse/error.hpp"

namespace stylefuse {
namespace {

using testing::content_image;
using testing::small_job;
using testing::style_image;

TEST(Engine, TraceFollowsDecidingPoint) {
    const EngineConfig cfg;
    for (double alpha : {0.0, 0.3, 1.0}) {
        auto job = small_job(16, 10);
        job.config.alpha = alpha;
        job.config.cfg_scale = 1.0;
        const auto r = run_style_transfer(cfg, job);
        const int ta = int(alpha * 10 + 1e-9);
        EXPECT_EQ(r.trace.t_alpha, ta);
        EXPECT_EQ(int(r.trace.count(InjectionKind::content)), 10 - ta);
        EXPECT_EQ(int(r.trace.count(InjectionKind::style)), ta);
        ASSERT_EQ(r.trace.steps.size(), 10u);
        for (std::size_t i = 0; i < 10; ++i) {
            const auto& s = r.trace.steps[i];
            EXPECT_EQ(s.step, 10 - int(i));
            EXPECT_EQ(s.phase, s.step > ta ? InjectionKind::content : InjectionKind::style);
            if (s.phase == InjectionKind::content) {
                EXPECT_TRUE(s.residual);
                EXPECT_EQ(s.attention, AttentionOverrideKind::qk);
            } else {
                EXPECT_FALSE(s.residual);
                EXPECT_EQ(s.attention, AttentionOverrideKind::kv);
            }
        }
        // Content inversion reaches T; style inversion reaches t_alpha.
        EXPECT_EQ(r.trace.evals.inversion, 10 + ta);
        EXPECT_EQ(r.trace.evals.capture(), 10);
        EXPECT_EQ(r.trace.evals.target, 10);
        EXPECT_TRUE(r.content_bank.empty());
        EXPECT_TRUE(r.style_bank.empty());
    }
}

TEST(Engine, GuidanceDoublesTargetEvaluations) {
    auto job = small_job(16, 4);
    job.config.cfg_scale = 3.0;
    EXPECT_EQ(run_style_transfer({}, job).trace.evals.target, 8);
}

TEST(Engine, ProgressIsMonotone) {
    std::vector<int> seen;
    auto job = small_job(16, 5);
    run_style_transfer({}, job, [&](int done, int total) {
        EXPECT_EQ(total, 5);
        seen.push_back(done);
    });
    EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4, 5}));
}

TEST(Engine, Deterministic) {
    const auto job = small_job(16, 6);
    const auto a = run_style_transfer({}, job), b = run_style_transfer({}, job);
    EXPECT_TRUE(a.output.pixels.identical(b.output.pixels));
    auto other = job;
    other.seed = 1;
    EXPECT_FALSE(a.output.pixels.identical(run_style_transfer({}, other).output.pixels));
}

TEST(Engine, KeepBanksHoldsEveryCapturedStep) {
    auto job = small_job(16, 8);
    job.keep_banks = true;
    job.config.alpha = 0.25;
    const auto r = run_style_transfer({}, job);
    EXPECT_EQ(r.content_bank.steps(), (std::vector<int>{3, 4, 5, 6, 7, 8}));
    EXPECT_EQ(r.style_bank.steps(), (std::vector<int>{1, 2}));
}

TEST(Engine, ValidationHappensBeforeCompute) {
    const StyleTransferEngine engine({}, 0);
    auto job = small_job(16, 4);
    job.style = style_image(24, 24);
    EXPECT_THROW(engine.run(job), ConfigError);
    job = small_job(12, 4);
    EXPECT_THROW(engine.run(job), ConfigError);
    job = small_job(16, 1001);
    EXPECT_THROW(engine.run(job), ConfigError);
    job = small_job(16, 4);
    job.config.residual_layers = {1};
    EXPECT_THROW(engine.run(job), ConfigError);
}

TEST(Engine, BackendMismatchesAreRejected) {
    EngineConfig cfg;
    cfg.codec = "toy";
    cfg.codec_factor = 2;
    EXPECT_THROW(StyleTransferEngine(cfg, 0), ConfigError);
    cfg.unet.latent_channels = 12;
    EXPECT_NO_THROW(StyleTransferEngine(cfg, 0));
    cfg.encoders.dim = 16;
    EXPECT_THROW(StyleTransferEngine(cfg, 0), ConfigError);
    cfg = {};
    cfg.denoiser = "sdxl";
    EXPECT_THROW(StyleTransferEngine(cfg, 0), CapabilityError);
}

TEST(Engine, ToyCodecRuns) {
    EngineConfig cfg;
    cfg.codec = "toy";
    cfg.codec_factor = 2;
    cfg.unet.latent_channels = 12;
    auto job = small_job(32, 3);
    const auto r = run_style_transfer(cfg, job);
    EXPECT_EQ(r.output.pixels.shape(), (Shape{3, 32, 32}));
    EXPECT_EQ(r.final_latent.data.shape(), (Shape{12, 16, 16}));
    EXPECT_TRUE(r.output.pixels.all_finite());
}

TEST(Engine, StyleTextSwitch) {
    const StyleTransferEngine engine({}, 0);
    auto job = small_job();
    job.content_prompt = "a house";
    const auto full = engine.conditioning(job);
    EXPECT_EQ(full.v_st.dim(0), 12u);
    job.style_text = false;
    const auto bare = engine.conditioning(job);
    EXPECT_TRUE(bare.v_st.identical(full.v_c.tokens));
}

TEST(Engine, EditNeedsPrompt) {
    auto job = small_job(16, 2);
    EXPECT_THROW(run_edit({}, job), ConfigError);
    job.edit_prompt = "";
    EXPECT_THROW(run_edit({}, job), ConfigError);
    job.edit_prompt = "a watercolor castle";
    const auto r = run_edit({}, job);
    EXPECT_TRUE(r.conditioning.v_c.tokens.identical(Conditioner({}).encode_text("a watercolor castle").tokens));
}

TEST(Engine, TranslationUsesReferenceAsStyle) {
    InjectionConfig inj;
    inj.sample_steps = 3;
    const auto a = run_translation({}, content_image(16, 16), style_image(16, 16), inj);
    auto job = small_job(16, 3);
    EXPECT_TRUE(a.output.pixels.identical(run_style_transfer({}, job).output.pixels));
}

TEST(Sweep, SharesInversionsAndMatchesSingleRuns) {
    auto job = small_job(16, 6);
    const std::vector<double> alphas{0.0, 0.5, 1.0};
    const auto sweep = sweep_alpha({}, job, alphas);
    EXPECT_EQ(sweep.cache.content_inversions, 1);
    EXPECT_EQ(sweep.cache.style_inversions, 1);
    EXPECT_EQ(sweep.cache.evals, 6 + 6);
    ASSERT_EQ(sweep.runs.size(), 3u);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        EXPECT_EQ(sweep.runs[i].trace.evals.inversion, 0);
        auto single = job;
        single.config.alpha = alphas[i];
        EXPECT_TRUE(run_style_transfer({}, single).output.pixels.identical(sweep.runs[i].output.pixels)) << alphas[i];
    }
    EXPECT_THROW(sweep_alpha({}, job, {}), ConfigError);
    EXPECT_THROW(sweep_alpha({}, job, {1.2}), ConfigError);
}

TEST(Montage, LaysOutSideBySide) {
    const auto m = montage({content_image(8, 8), style_image(16, 8)}, 2);
    EXPECT_EQ(m.pixels.shape(), (Shape{3, 16, 18}));
    EXPECT_EQ(m.pixels.at(0, 12, 3), 1.0f);  // padding below the shorter tile
    EXPECT_EQ(m.pixels.at(1, 3, 12), style_image(16, 8).pixels.at(1, 3, 2));
}

TEST(Trace, JsonListsStepsAndEvals) {
    auto job = small_job(16, 3);
    const auto j = run_style_transfer({}, job).trace.to_json();
    EXPECT_EQ(j["sample_steps"], 3);
    EXPECT_EQ(j["steps"].size(), 3u);
    EXPECT_EQ(j["steps"][0]["phase"], "content");
    EXPECT_EQ(j["steps"][0]["attention"], "qk");
    EXPECT_EQ(j["evals"]["target"], 6);
}

}  // namespace
}  // namespace stylefuse
