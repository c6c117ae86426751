// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stylefuse/tensor.hpp"

namespace stylefuse {

/// A sample step together with the network timestep it maps to and the
/// cumulative alpha at that step.
struct StepTime {
    int step = 0;
    int train_timestep = 0;
    double alpha_bar = 1.0;
};

enum class LayerSide { encoder, mid, decoder };

const char* to_string(LayerSide side);

/// Identifies one U-Net layer. Decoder indices follow the 3..11 numbering
/// used by the injection configuration (3-5 lowest resolution, 9-11 full).
struct LayerKey {
    LayerSide side = LayerSide::decoder;
    int index = 0;

    auto operator<=>(const LayerKey&) const = default;
};

std::string to_string(const LayerKey& key);

struct LayerDescriptor {
    LayerKey key;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    bool has_self_attn = false;
    bool has_residual = false;
    /// Only decoder layers accept injection directives.
    bool injectable = false;
};

/// Features of one layer at one evaluation.
struct LayerInternals {
    LayerDescriptor layer;
    Tensor residual;  // residual-branch output, before any replacement (C, H, W)
    Tensor attn_in;   // self-attention input as the branch saw it (C, H, W)
    Tensor q, k, v;   // projections of attn_in, (H*W, C)
    Tensor used_q, used_k, used_v;  // operands that formed the attention output
    Tensor attn_out;  // softmax(used_q used_k^T / sqrt(d)) used_v, (C, H, W)
};

enum class AttentionOverrideKind { qk, kv };

const char* to_string(AttentionOverrideKind kind);

/// Replaces two of the three self-attention operands. For qk, `first` and
/// `second` are Q and K; for kv, they are K and V.
struct AttentionOverride {
    AttentionOverrideKind kind = AttentionOverrideKind::qk;
    Tensor first;
    Tensor second;
};

struct LayerDirective {
    std::optional<Tensor> residual_replace;
    std::optional<AttentionOverride> attention;

    bool empty() const { return !residual_replace && !attention; }
};

/// Per-layer replacements applied during one denoiser evaluation.
struct InjectionDirective {
    int step = -1;  // for error messages
    std::map<LayerKey, LayerDirective> layers;

    bool empty() const;
    bool has_residual() const;
    bool has_attention(AttentionOverrideKind kind) const;
};

struct NoisePrediction {
    Tensor eps;
    std::map<LayerKey, LayerInternals> internals;  // filled only when capture was requested
};

/// Noise-prediction network. Implementations are immutable after
/// construction and predict_noise is reentrant.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual std::string name() const = 0;
    virtual std::size_t latent_channels() const = 0;
    virtual std::size_t embedding_dim() const = 0;

    /// Layers in forward order, with resolutions for a latent of h x w.
    virtual std::vector<LayerDescriptor> layers(std::size_t h, std::size_t w) const = 0;

    /// Latent height and width must be multiples of this.
    virtual std::size_t spatial_multiple() const { return 1; }

    /// Throws InjectionError naming layer and step when the directive does
    /// not fit the layer shapes.
    virtual NoisePrediction predict_noise(const Tensor& z, const StepTime& t, const Tensor& cond,
                                          const InjectionDirective& directive, bool capture) const = 0;

    NoisePrediction predict_noise(const Tensor& z, const StepTime& t, const Tensor& cond) const {
        return predict_noise(z, t, cond, InjectionDirective{}, false);
    }
};

std::vector<LayerDescriptor> list_layers(const Denoiser& backend, std::size_t h, std::size_t w);

struct AttentionWeights {
    Tensor wq, wk, wv;  // (C, C)
    std::size_t heads = 1;
};

struct SelfAttentionResult {
    Tensor out;  // (H*W, C)
    Tensor q, k, v;
    Tensor used_q, used_k, used_v;
};

/// Scaled dot-product self-attention over the positions of a (C, H, W) map.
/// An override substitutes operands before the attention map is formed.
SelfAttentionResult self_attention(const Tensor& phi, const AttentionWeights& weights,
                                   const AttentionOverride* override_ops = nullptr, bool reference_kernels = false);

struct ToyUNetConfig {
    std::size_t latent_channels = 3;
    std::size_t embedding_dim = 32;
    std::array<std::size_t, 3> channels{8, 16, 32};
    std::size_t groups = 4;
    std::size_t heads = 1;
    std::size_t time_dim = 32;
    /// Space-to-depth factor applied before the first convolution (and undone
    /// after the last), so the top resolution is H / stem_factor.
    std::size_t stem_factor = 2;
    /// Variance of the Gaussian latent prior whose exact noise predictor forms
    /// the analytic part of eps; 0 disables it.
    double prior_variance = 1.0;
    /// Scales the output convolution, i.e. the learned-looking part of eps.
    float output_gain = 0.2f;
    /// Scales the cross-attention output projection.
    float cross_attn_gain = 0.5f;
    std::uint64_t seed = 0;
    /// Decoder block b (0..8, forward order) is addressed as decoder_ids[b].
    std::vector<int> decoder_ids = {3, 4, 5, 6, 7, 8, 9, 10, 11};
    bool reference_kernels = false;
};

/// Seeded, untrained U-Net added to the exact noise predictor of a Gaussian
/// latent prior, sqrt(1 - a) z / (a var + 1 - a). The analytic term keeps the
/// probability-flow ODE smooth so DDIM inversion behaves as it does for a
/// trained model; the network term carries all layer features.
///
/// Network: a space-to-depth stem, then 2 encoder layers per resolution at 3
/// resolutions,
/// a mid layer, and 3 decoder layers per resolution. Every layer is a
/// residual block followed by self-attention and cross-attention on the
/// conditioning tokens.
class ToyUNet final : public Denoiser {
public:
    explicit ToyUNet(ToyUNetConfig config);
    ~ToyUNet() override;
    ToyUNet(ToyUNet&&) noexcept;

    std::string name() const override { return "toy-unet"; }
    std::size_t latent_channels() const override { return config_.latent_channels; }
    std::size_t embedding_dim() const override { return config_.embedding_dim; }
    std::vector<LayerDescriptor> layers(std::size_t h, std::size_t w) const override;
    std::size_t spatial_multiple() const override { return 4 * config_.stem_factor; }

    using Denoiser::predict_noise;
    NoisePrediction predict_noise(const Tensor& z, const StepTime& t, const Tensor& cond,
                                  const InjectionDirective& directive, bool capture) const override;

    const ToyUNetConfig& config() const noexcept { return config_; }

    /// Raw-tensor directory with a JSON manifest.
    void save(const std::filesystem::path& dir) const;
    static ToyUNet load(const std::filesystem::path& dir);

private:
    struct Weights;

    ToyUNetConfig config_;
    std::unique_ptr<Weights> weights_;
};

/// Backend factory keyed by name ("toy"). Unknown or unavailable names throw
/// CapabilityError.
std::unique_ptr<Denoiser> make_denoiser(const std::string& name, const ToyUNetConfig& config);

/// Wraps a backend and counts evaluations. Thread-safe.
class CountingDenoiser final : public Denoiser {
public:
    explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}

    std::string name() const override { return inner_.name(); }
    std::size_t latent_channels() const override { return inner_.latent_channels(); }
    std::size_t embedding_dim() const override { return inner_.embedding_dim(); }
    std::vector<LayerDescriptor> layers(std::size_t h, std::size_t w) const override { return inner_.layers(h, w); }
    std::size_t spatial_multiple() const override { return inner_.spatial_multiple(); }

    using Denoiser::predict_noise;
    NoisePrediction predict_noise(const Tensor& z, const StepTime& t, const Tensor& cond,
                                  const InjectionDirective& directive, bool capture) const override;

    long calls() const noexcept { return calls_.load(); }
    void reset() noexcept { calls_ = 0; }

private:
    const Denoiser& inner_;
    mutable std::atomic<long> calls_{0};
};

}  // namespace stylefuse
