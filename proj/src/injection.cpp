// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/injection.hpp"

#include <algorithm>
#include <cmath>

#include "stylefuse/error.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {

const char* to_string(InjectionOrder o) { return o == InjectionOrder::content_first ? "content_first" : "style_first"; }

const char* to_string(InjectionKind k) { return k == InjectionKind::content ? "content" : "style"; }

InjectionOrder order_from_string(const std::string& s) {
    if (s == "content_first") return InjectionOrder::content_first;
    if (s == "style_first") return InjectionOrder::style_first;
    throw ConfigError("unknown injection order '" + s + "' (content_first | style_first)");
}

void InjectionConfig::validate(const std::vector<LayerDescriptor>& layers) const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (sample_steps < 1) throw ConfigError("sample steps must be positive");
    if (!(cfg_scale > 0.0) || !std::isfinite(cfg_scale)) throw ConfigError("cfg scale must be positive");
    auto check = [&](const std::set<int>& ids, const char* what) {
        for (int id : ids) {
            const bool ok = std::any_of(layers.begin(), layers.end(), [&](const LayerDescriptor& d) {
                return d.injectable && d.key == LayerKey{LayerSide::decoder, id};
            });
            if (!ok) throw ConfigError(std::string(what) + " layer " + std::to_string(id) + " is not a decoder layer");
        }
    };
    check(attn_layers, "attention");
    check(residual_layers, "residual");
}

int deciding_point(double alpha, int sample_steps) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (sample_steps < 1) throw ConfigError("sample steps must be positive");
    // The epsilon keeps products such as 0.6 * 50 = 29.999... on the intended integer.
    return std::min(sample_steps, int(std::floor(alpha * sample_steps + 1e-9)));
}

InjectionKind select_injection(int t, int t_alpha, InjectionOrder order) {
    const bool late = t > t_alpha;
    if (order == InjectionOrder::content_first) return late ? InjectionKind::content : InjectionKind::style;
    return late ? InjectionKind::style : InjectionKind::content;
}

std::vector<int> steps_for(InjectionKind kind, int t_alpha, int sample_steps, InjectionOrder order) {
    std::vector<int> out;
    for (int t = 1; t <= sample_steps; ++t) {
        if (select_injection(t, t_alpha, order) == kind) out.push_back(t);
    }
    return out;
}

std::vector<int> FeatureBank::steps() const {
    std::vector<int> out;
    for (const auto& [t, _] : store_) out.push_back(t);
    return out;
}

const std::map<LayerKey, BankEntry>& FeatureBank::at(int step) const {
    auto it = store_.find(step);
    if (it == store_.end()) {
        throw Error("step " + std::to_string(step) + " absent from " + to_string(branch_) + " bank");
    }
    return it->second;
}

void FeatureBank::insert(int step, std::map<LayerKey, BankEntry> layers) {
    store_.insert_or_assign(step, std::move(layers));
}

void FeatureBank::merge(const FeatureBank& other) {
    if (other.branch_ != branch_) throw Error("cannot merge banks of different branches");
    for (const auto& [t, layers] : other.store_) store_.insert_or_assign(t, layers);
}

CaptureRequest capture_request(InjectionKind kind, const InjectionConfig& cfg) {
    CaptureRequest r;
    if (kind == InjectionKind::content) {
        if (cfg.content_attn) r.attn_layers = cfg.attn_layers;
        if (cfg.content_residual) r.residual_layers = cfg.residual_layers;
    } else if (cfg.style) {
        r.attn_layers = cfg.attn_layers;
    }
    return r;
}

std::map<LayerKey, BankEntry> capture_step(const LatentTrajectory& trajectory, int t, const Denoiser& backend,
                                           const Tensor& null_cond, const NoiseSchedule& s,
                                           const CaptureRequest& request) {
    const Latent& z = trajectory.at(t);
    auto pred = backend.predict_noise(z.data, s.step_time(t), null_cond, InjectionDirective{}, true);
    std::map<LayerKey, BankEntry> out;
    for (int id : request.residual_layers) {
        const LayerKey key{LayerSide::decoder, id};
        auto it = pred.internals.find(key);
        if (it == pred.internals.end()) throw InjectionError("backend captured no features for " + to_string(key));
        out[key].residual = std::move(it->second.residual);
    }
    for (int id : request.attn_layers) {
        const LayerKey key{LayerSide::decoder, id};
        auto it = pred.internals.find(key);
        if (it == pred.internals.end()) throw InjectionError("backend captured no features for " + to_string(key));
        auto& e = out[key];
        e.q = std::move(it->second.q);
        e.k = std::move(it->second.k);
        e.v = std::move(it->second.v);
    }
    return out;
}

FeatureBank capture_bank(Branch branch, const LatentTrajectory& trajectory, const Denoiser& backend,
                         const Tensor& null_cond, const NoiseSchedule& s, const std::vector<int>& steps,
                         const CaptureRequest& request) {
    if (trajectory.branch() != branch) {
        throw Error(std::string("capture for ") + to_string(branch) + " branch given a " +
                    to_string(trajectory.branch()) + " trajectory");
    }
    FeatureBank bank(branch);
    for (int t : steps) bank.insert(t, capture_step(trajectory, t, backend, null_cond, s, request));
    return bank;
}

namespace {

const BankEntry& entry_for(const std::map<LayerKey, BankEntry>& layers, int id, int t, const char* what) {
    auto it = layers.find(LayerKey{LayerSide::decoder, id});
    if (it == layers.end()) {
        throw InjectionError(std::string(what) + " bank lacks decoder layer " + std::to_string(id) + " at step " +
                             std::to_string(t));
    }
    return it->second;
}

void require_branch(const FeatureBank& bank, Branch want) {
    if (bank.branch() != want) {
        throw InjectionError(std::string("expected a ") + to_string(want) + " bank, got " + to_string(bank.branch()));
    }
}

}  // namespace

InjectionDirective content_directive(const FeatureBank& bank, int t, const InjectionConfig& cfg) {
    require_branch(bank, Branch::content);
    InjectionDirective d;
    d.step = t;
    if (!cfg.content_enabled()) return d;
    const auto& layers = bank.at(t);
    if (cfg.content_residual) {
        for (int id : cfg.residual_layers) {
            const auto& e = entry_for(layers, id, t, "content");
            if (e.residual.empty()) throw InjectionError("content bank holds no residual at decoder " + std::to_string(id));
            d.layers[{LayerSide::decoder, id}].residual_replace = e.residual;
        }
    }
    if (cfg.content_attn) {
        for (int id : cfg.attn_layers) {
            const auto& e = entry_for(layers, id, t, "content");
            AttentionOverride o;
            o.kind = cfg.content_attn_kind;
            if (o.kind == AttentionOverrideKind::qk) {
                o.first = e.q;
                o.second = e.k;
            } else {
                o.first = e.k;
                o.second = e.v;
            }
            if (o.first.empty() || o.second.empty()) {
                throw InjectionError("content bank holds no attention operands at decoder " + std::to_string(id));
            }
            d.layers[{LayerSide::decoder, id}].attention = std::move(o);
        }
    }
    return d;
}

InjectionDirective style_directive(const FeatureBank& bank, int t, const InjectionConfig& cfg,
                                   AttentionOverrideKind kind) {
    if (kind != AttentionOverrideKind::kv) {
        throw InjectionError("style injection replaces key and value only; " + std::string(to_string(kind)) +
                             " requested at step " + std::to_string(t));
    }
    require_branch(bank, Branch::style);
    InjectionDirective d;
    d.step = t;
    if (!cfg.style_enabled()) return d;
    const auto& layers = bank.at(t);
    for (int id : cfg.attn_layers) {
        const auto& e = entry_for(layers, id, t, "style");
        if (e.k.empty() || e.v.empty()) throw InjectionError("style bank holds no K/V at decoder " + std::to_string(id));
        d.layers[{LayerSide::decoder, id}].attention = AttentionOverride{AttentionOverrideKind::kv, e.k, e.v};
    }
    return d;
}

void dump_bank(const std::filesystem::path& dir, const FeatureBank& bank) {
    TensorDir out;
    nlohmann::json index = nlohmann::json::array();
    for (const auto& [t, layers] : bank.entries()) {
        for (const auto& [key, e] : layers) {
            const std::string prefix = "t" + std::to_string(t) + "." + to_string(key.side) + std::to_string(key.index);
            nlohmann::json fields = nlohmann::json::array();
            auto put = [&](const char* field, const Tensor& x) {
                if (x.empty()) return;
                out.tensors.emplace(prefix + "." + field, x);
                fields.push_back(field);
            };
            put("residual", e.residual);
            put("q", e.q);
            put("k", e.k);
            put("v", e.v);
            index.push_back({{"step", t},
                             {"side", to_string(key.side)},
                             {"layer", key.index},
                             {"prefix", prefix},
                             {"fields", fields}});
        }
    }
    out.meta = {{"kind", "feature-bank"}, {"branch", to_string(bank.branch())}, {"steps", bank.steps()}, {"entries", index}};
    write_tensor_dir(dir, out);
}

FeatureBank load_bank(const std::filesystem::path& dir) {
    auto in = read_tensor_dir(dir);
    if (in.meta.value("kind", "") != "feature-bank") throw IoError(dir.string() + " is not a feature bank dump");
    FeatureBank bank(branch_from_string(in.meta.at("branch").get<std::string>()));
    std::map<int, std::map<LayerKey, BankEntry>> staged;
    for (int t : in.meta.at("steps").get<std::vector<int>>()) staged[t];
    for (const auto& item : in.meta.at("entries")) {
        const int t = item.at("step");
        const auto side_name = item.at("side").get<std::string>();
        LayerKey key{LayerSide::decoder, item.at("layer").get<int>()};
        if (side_name == "encoder") key.side = LayerSide::encoder;
        else if (side_name == "mid") key.side = LayerSide::mid;
        const auto prefix = item.at("prefix").get<std::string>();
        BankEntry e;
        for (const auto& f : item.at("fields")) {
            const auto field = f.get<std::string>();
            auto it = in.tensors.find(prefix + "." + field);
            if (it == in.tensors.end()) throw IoError("bank dump lacks " + prefix + "." + field);
            if (field == "residual") e.residual = it->second;
            else if (field == "q") e.q = it->second;
            else if (field == "k") e.k = it->second;
            else if (field == "v") e.v = it->second;
        }
        staged[t][key] = std::move(e);
    }
    for (auto& [t, layers] : staged) bank.insert(t, std::move(layers));
    return bank;
}

}  // namespace stylefuse
