// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylefuse/codec.hpp"
#include "stylefuse/conditioning.hpp"
#include "stylefuse/ddim.hpp"
#include "stylefuse/denoiser.hpp"
#include "stylefuse/injection.hpp"

namespace stylefuse {

/// Backend selection. The job seed overrides every seed field below.
struct EngineConfig {
    std::string denoiser = "toy";
    ToyUNetConfig unet;
    std::string codec = "identity";
    std::size_t codec_factor = 1;
    EncoderConfig encoders;
    int train_steps = 1000;
    double beta_start = 0.00085;
    double beta_end = 0.012;
    BetaSpacing spacing = BetaSpacing::scaled_linear;
};

struct TransferJob {
    ImageAsset content;
    ImageAsset style;
    InjectionConfig config;
    std::string content_prompt;
    std::optional<std::string> edit_prompt;
    std::uint64_t seed = 0;
    /// false drops the style image's text-aligned tokens: v_st = v_c.
    bool style_text = true;
    /// Replaces the style embedding derived from the style image.
    std::optional<StyleEmbedding> pinned_style;
    /// Keep every captured bank entry in the result (memory grows with T).
    bool keep_banks = false;
};

/// Backend evaluations by role.
struct EvalCounts {
    long inversion = 0;
    long content_capture = 0;
    long style_capture = 0;
    long target = 0;

    long capture() const { return content_capture + style_capture; }
};

struct StepRecord {
    int step = 0;
    int train_timestep = 0;
    InjectionKind phase = InjectionKind::content;
    bool residual = false;                            // residual replacement applied
    std::optional<AttentionOverrideKind> attention;  // attention operands replaced
    std::size_t injected_layers = 0;
    double millis = 0.0;
};

/// One record per target step, in execution order (t = T .. 1).
struct TransferTrace {
    double alpha = 0.0;
    int sample_steps = 0;
    int t_alpha = 0;
    InjectionOrder order = InjectionOrder::content_first;
    std::vector<StepRecord> steps;
    EvalCounts evals;
    double total_millis = 0.0;

    std::size_t count(InjectionKind phase) const;
    nlohmann::json to_json() const;
};

struct TransferResult {
    ImageAsset output;
    Latent final_latent;
    TransferTrace trace;
    ConditioningBundle conditioning;
    FeatureBank content_bank{Branch::content};  // filled when keep_banks
    FeatureBank style_bank{Branch::style};
};

/// Called after each target step with (steps done, T).
using ProgressFn = std::function<void(int, int)>;

/// Branch inversions shared across runs of one content/style pair. Holds
/// z*_t from step 1 upward; runs extend it when they need more.
struct InversionCache {
    LatentTrajectory content{Branch::content};
    LatentTrajectory style{Branch::style};
    int content_inversions = 0;  // times inversion work was done per branch
    int style_inversions = 0;
    long evals = 0;
};

/// Backends plus the job seed. Immutable after construction; run() may be
/// called concurrently.
class StyleTransferEngine {
public:
    StyleTransferEngine(const EngineConfig& config, std::uint64_t seed);

    const Denoiser& backend() const { return *backend_; }
    const LatentCodec& codec() const { return codec_; }
    const Conditioner& conditioner() const { return conditioner_; }
    const EngineConfig& config() const { return config_; }
    NoiseSchedule schedule(int sample_steps) const;
    /// Layer table for images of h x w pixels.
    std::vector<LayerDescriptor> layers(std::size_t h, std::size_t w) const;

    ConditioningBundle conditioning(const TransferJob& job) const;

    /// Image sizes, steps and layer ids; throws ConfigError.
    void validate(const TransferJob& job) const;

    /// Throws ConfigError before any compute for invalid settings; failures
    /// during the run surface as StageError with stage and step.
    TransferResult run(const TransferJob& job, const ProgressFn& progress = {}, InversionCache* cache = nullptr) const;

private:
    EngineConfig config_;
    std::unique_ptr<Denoiser> backend_;
    LatentCodec codec_;
    Conditioner conditioner_;
};

/// EngineConfig seeds are taken from job.seed.
TransferResult run_style_transfer(const EngineConfig& config, const TransferJob& job, const ProgressFn& progress = {});

/// Same pipeline with v_c from the edit prompt. Throws ConfigError when the
/// job has no non-empty edit prompt.
TransferResult run_edit(const EngineConfig& config, const TransferJob& job, const ProgressFn& progress = {});

/// Image-to-image translation: the reference image takes the style slot.
TransferResult run_translation(const EngineConfig& config, const ImageAsset& content, const ImageAsset& reference,
                               const InjectionConfig& injection, std::uint64_t seed = 0);

struct SweepResult {
    std::vector<double> alphas;
    std::vector<TransferResult> runs;
    InversionCache cache;
};

/// One run per alpha, sharing branch inversions through one cache.
SweepResult sweep_alpha(const EngineConfig& config, const TransferJob& job, const std::vector<double>& alphas,
                        const ProgressFn& progress = {});

/// Images side by side, padded to the tallest.
ImageAsset montage(const std::vector<ImageAsset>& images, std::size_t gap = 2);

}  // namespace stylefuse
