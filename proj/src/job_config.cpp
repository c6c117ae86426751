// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/job_config.hpp"

#include <fstream>
#include <set>

#include "stylefuse/error.hpp"

namespace stylefuse {

namespace {

using nlohmann::json;

void require_known(const json& obj, const std::set<std::string>& keys, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, _] : obj.items()) {
        if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

std::set<int> read_layers(const json& v, const char* key) {
    try {
        return v.get<std::set<int>>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' must be a list of integers");
    }
}

}  // namespace

void apply_json(RunSettings& st, const json& doc) {
    require_known(doc,
                  {"schema_version", "alpha", "steps", "cfg_scale", "attn_layers", "residual_layers", "order",
                   "content_prompt", "edit_prompt", "seed", "ablation", "backend"},
                  "job config");
    if (doc.contains("schema_version")) {
        int v = 0;
        read(doc, "schema_version", v);
        if (v != kJobSchemaVersion) {
            throw ConfigError("job config schema_version " + std::to_string(v) + " unsupported (expected " +
                              std::to_string(kJobSchemaVersion) + ")");
        }
    }
    auto& inj = st.injection;
    read(doc, "alpha", inj.alpha);
    read(doc, "steps", inj.sample_steps);
    read(doc, "cfg_scale", inj.cfg_scale);
    if (doc.contains("attn_layers")) inj.attn_layers = read_layers(doc["attn_layers"], "attn_layers");
    if (doc.contains("residual_layers")) inj.residual_layers = read_layers(doc["residual_layers"], "residual_layers");
    if (doc.contains("order")) {
        std::string o;
        read(doc, "order", o);
        inj.order = order_from_string(o);
    }
    read(doc, "content_prompt", st.content_prompt);
    if (doc.contains("edit_prompt")) {
        if (doc["edit_prompt"].is_null()) {
            st.edit_prompt.reset();
        } else {
            std::string e;
            read(doc, "edit_prompt", e);
            st.edit_prompt = e;
        }
    }
    read(doc, "seed", st.seed);

    if (doc.contains("ablation")) {
        const auto& ab = doc["ablation"];
        require_known(ab, {"content_attn", "content_residual", "style", "style_text", "content_kv"}, "ablation");
        read(ab, "content_attn", inj.content_attn);
        read(ab, "content_residual", inj.content_residual);
        read(ab, "style", inj.style);
        read(ab, "style_text", st.style_text);
        if (ab.contains("content_kv")) {
            bool kv = false;
            read(ab, "content_kv", kv);
            inj.content_attn_kind = kv ? AttentionOverrideKind::kv : AttentionOverrideKind::qk;
        }
    }
    if (doc.contains("backend")) {
        const auto& be = doc["backend"];
        require_known(be,
                      {"denoiser", "codec", "codec_factor", "text_encoder", "style_encoder", "train_steps",
                       "beta_start", "beta_end", "beta_schedule"},
                      "backend");
        auto& e = st.engine;
        read(be, "denoiser", e.denoiser);
        read(be, "codec", e.codec);
        read(be, "codec_factor", e.codec_factor);
        read(be, "text_encoder", e.encoders.text_backend);
        read(be, "style_encoder", e.encoders.style_backend);
        read(be, "train_steps", e.train_steps);
        read(be, "beta_start", e.beta_start);
        read(be, "beta_end", e.beta_end);
        if (be.contains("beta_schedule")) {
            std::string b;
            read(be, "beta_schedule", b);
            if (b == "linear") e.spacing = BetaSpacing::linear;
            else if (b == "scaled_linear") e.spacing = BetaSpacing::scaled_linear;
            else throw ConfigError("unknown beta_schedule '" + b + "' (linear | scaled_linear)");
        }
        if (e.codec == "toy" && e.codec_factor > 0) e.unet.latent_channels = 3 * e.codec_factor * e.codec_factor;
    }
}

json to_json(const RunSettings& st) {
    const auto& inj = st.injection;
    const auto& e = st.engine;
    return {{"schema_version", kJobSchemaVersion},
            {"alpha", inj.alpha},
            {"steps", inj.sample_steps},
            {"cfg_scale", inj.cfg_scale},
            {"attn_layers", inj.attn_layers},
            {"residual_layers", inj.residual_layers},
            {"order", to_string(inj.order)},
            {"content_prompt", st.content_prompt},
            {"edit_prompt", st.edit_prompt ? json(*st.edit_prompt) : json()},
            {"seed", st.seed},
            {"ablation",
             {{"content_attn", inj.content_attn},
              {"content_residual", inj.content_residual},
              {"style", inj.style},
              {"style_text", st.style_text},
              {"content_kv", inj.content_attn_kind == AttentionOverrideKind::kv}}},
            {"backend",
             {{"denoiser", e.denoiser},
              {"codec", e.codec},
              {"codec_factor", e.codec_factor},
              {"text_encoder", e.encoders.text_backend},
              {"style_encoder", e.encoders.style_backend},
              {"train_steps", e.train_steps},
              {"beta_start", e.beta_start},
              {"beta_end", e.beta_end},
              {"beta_schedule", e.spacing == BetaSpacing::linear ? "linear" : "scaled_linear"}}}};
}

RunSettings load_settings(const std::filesystem::path& path, RunSettings base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    apply_json(base, doc);
    return base;
}

TransferJob make_job(const RunSettings& st, ImageAsset content, ImageAsset style) {
    TransferJob job;
    job.content = std::move(content);
    job.content.role = ImageRole::content;
    job.style = std::move(style);
    job.style.role = ImageRole::style;
    job.config = st.injection;
    job.content_prompt = st.content_prompt;
    job.edit_prompt = st.edit_prompt;
    job.seed = st.seed;
    job.style_text = st.style_text;
    return job;
}

}  // namespace stylefuse
