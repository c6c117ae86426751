// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "stylefuse/pipeline.hpp"

namespace stylefuse {

inline constexpr int kJobSchemaVersion = 1;

/// Everything a transfer needs besides the two images.
struct RunSettings {
    EngineConfig engine;
    InjectionConfig injection;
    std::string content_prompt;
    std::optional<std::string> edit_prompt;
    std::uint64_t seed = 0;
    bool style_text = true;
};

/// Overlays the keys present in `doc` onto `settings`:
///
///   { "schema_version": 1, "alpha": 0.2, "steps": 50, "cfg_scale": 7.5,
///     "attn_layers": [4, ...], "residual_layers": [3, ...],
///     "order": "content_first", "content_prompt": "", "edit_prompt": null,
///     "seed": 0,
///     "ablation": { "content_attn": true, "content_residual": true,
///                   "style": true, "style_text": true, "content_kv": false },
///     "backend": { "denoiser": "toy", "codec": "identity", "codec_factor": 1,
///                  "text_encoder": "stub", "style_encoder": "stub",
///                  "train_steps": 1000, "beta_start": 0.00085,
///                  "beta_end": 0.012, "beta_schedule": "scaled_linear" } }
///
/// Unknown keys, wrong types and other schema versions throw ConfigError.
void apply_json(RunSettings& settings, const nlohmann::json& doc);
nlohmann::json to_json(const RunSettings& settings);
RunSettings load_settings(const std::filesystem::path& path, RunSettings base = {});

TransferJob make_job(const RunSettings& settings, ImageAsset content, ImageAsset style);

}  // namespace stylefuse
