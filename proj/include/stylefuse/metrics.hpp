// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stylefuse/codec.hpp"
#include "stylefuse/tensor.hpp"

namespace stylefuse {

struct FeatureExtractorConfig {
    std::string backend = "toy_random_conv";
    std::vector<std::size_t> channels{16, 32};  // one conv + relu per entry
    std::size_t kernel_size = 3;
    /// 2x average pooling between layers. Off keeps features unit-stride.
    bool pool = true;
    std::uint64_t seed = 0;
};

/// Seeded random convolution stack standing in for a pretrained feature
/// network. Deterministic given the seed.
class FeatureExtractor {
public:
    explicit FeatureExtractor(const FeatureExtractorConfig& config = {});

    /// Activations of every layer, (C, H, W) each.
    std::vector<Tensor> features(const ImageAsset& image) const;
    const FeatureExtractorConfig& config() const noexcept { return config_; }

private:
    FeatureExtractorConfig config_;
    std::vector<Tensor> weights_;
};

/// F F^T / (H W) for a (C, H, W) map.
Tensor gram(const Tensor& features);

/// Mean over layers of the feature MSE.
double content_loss(const ImageAsset& generated, const ImageAsset& content, const FeatureExtractor& fx);
/// Mean over layers of the Gram-matrix MSE.
double style_loss(const ImageAsset& generated, const ImageAsset& style, const FeatureExtractor& fx);
double pixel_mse(const ImageAsset& a, const ImageAsset& b);

/// Perceptual metrics that need pretrained networks ("lpips", "clipscore").
/// None ship with this build; the call throws CapabilityError.
double external_metric(const std::string& name, const ImageAsset& a, const ImageAsset& b);

struct MetricsRow {
    std::string generated;
    std::string reference;
    double content_loss = 0.0;
    double style_loss = 0.0;
    double mse = 0.0;
    double runtime_ms = 0.0;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

}  // namespace stylefuse
