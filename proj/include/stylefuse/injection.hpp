// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stylefuse/ddim.hpp"
#include "stylefuse/denoiser.hpp"

namespace stylefuse {

enum class InjectionOrder { content_first, style_first };
enum class InjectionKind { content, style };

const char* to_string(InjectionOrder o);
const char* to_string(InjectionKind k);
InjectionOrder order_from_string(const std::string& s);

/// Injection schedule and layer selection. Layer ids are decoder ids
/// (3..11). The ablation switches default to the full method.
struct InjectionConfig {
    double alpha = 0.2;
    std::set<int> attn_layers{4, 5, 6, 7, 8, 9, 10, 11};
    std::set<int> residual_layers{3, 4, 5, 6, 7, 8};
    double cfg_scale = 7.5;
    int sample_steps = 50;
    InjectionOrder order = InjectionOrder::content_first;

    bool content_attn = true;
    bool content_residual = true;
    bool style = true;
    /// Operand pair the content module replaces; kv is the ablation variant.
    AttentionOverrideKind content_attn_kind = AttentionOverrideKind::qk;

    /// Throws ConfigError for alpha outside [0, 1], non-positive steps or
    /// cfg scale, or layer ids that are not injectable decoder layers.
    void validate(const std::vector<LayerDescriptor>& layers) const;
    bool content_enabled() const { return (content_attn && !attn_layers.empty()) || (content_residual && !residual_layers.empty()); }
    bool style_enabled() const { return style && !attn_layers.empty(); }
};

/// floor(alpha * T). Throws ConfigError for alpha outside [0, 1] or T < 1.
int deciding_point(double alpha, int sample_steps);

/// content_first: content iff t > t_alpha. style_first swaps the two kinds.
InjectionKind select_injection(int t, int t_alpha, InjectionOrder order);

/// Steps (ascending) assigned to `kind` for T sample steps.
std::vector<int> steps_for(InjectionKind kind, int t_alpha, int sample_steps, InjectionOrder order);

/// Stored features of one layer at one step. Empty tensors were not requested.
struct BankEntry {
    Tensor residual;  // (C, H, W)
    Tensor q, k, v;   // (H*W, C)
};

/// Branch features keyed by (step, layer).
class FeatureBank {
public:
    explicit FeatureBank(Branch branch = Branch::content) : branch_(branch) {}

    Branch branch() const noexcept { return branch_; }
    bool contains(int step) const { return store_.count(step) != 0; }
    std::vector<int> steps() const;
    std::size_t size() const noexcept { return store_.size(); }
    bool empty() const noexcept { return store_.empty(); }

    /// Throws Error naming the step and branch when absent.
    const std::map<LayerKey, BankEntry>& at(int step) const;
    void insert(int step, std::map<LayerKey, BankEntry> layers);
    void erase(int step) { store_.erase(step); }
    void merge(const FeatureBank& other);

    const std::map<int, std::map<LayerKey, BankEntry>>& entries() const noexcept { return store_; }

private:
    Branch branch_;
    std::map<int, std::map<LayerKey, BankEntry>> store_;
};

/// Residual features at `residual_layers`, Q/K/V at `attn_layers`.
struct CaptureRequest {
    std::set<int> residual_layers;
    std::set<int> attn_layers;
};

/// What a branch needs captured under `cfg` (empty sets for disabled parts).
CaptureRequest capture_request(InjectionKind kind, const InjectionConfig& cfg);

/// Evaluates the backend once on the inversion latent z*_t with `null_cond`
/// and keeps the requested features. Throws Error when the trajectory lacks t.
std::map<LayerKey, BankEntry> capture_step(const LatentTrajectory& trajectory, int t, const Denoiser& backend,
                                           const Tensor& null_cond, const NoiseSchedule& s,
                                           const CaptureRequest& request);

/// capture_step for every listed step.
FeatureBank capture_bank(Branch branch, const LatentTrajectory& trajectory, const Denoiser& backend,
                         const Tensor& null_cond, const NoiseSchedule& s, const std::vector<int>& steps,
                         const CaptureRequest& request);

/// Residual replacement at residual_layers and an attention override at
/// attn_layers: (Q, K) from the bank in qk mode, (K, V) in kv mode.
InjectionDirective content_directive(const FeatureBank& bank, int t, const InjectionConfig& cfg);

/// (K, V) replacement at attn_layers. Requesting any other kind throws
/// InjectionError: the style module defines only key/value replacement.
InjectionDirective style_directive(const FeatureBank& bank, int t, const InjectionConfig& cfg,
                                   AttentionOverrideKind kind = AttentionOverrideKind::kv);

void dump_bank(const std::filesystem::path& dir, const FeatureBank& bank);
FeatureBank load_bank(const std::filesystem::path& dir);

}  // namespace stylefuse
