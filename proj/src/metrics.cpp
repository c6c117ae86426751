// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/metrics.hpp"

#include <cmath>
#include <ostream>

#include "stylefuse/error.hpp"
#include "stylefuse/kernels.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {

FeatureExtractor::FeatureExtractor(const FeatureExtractorConfig& config) : config_(config) {
    if (config_.backend != "toy_random_conv") {
        throw CapabilityError("feature extractor '" + config_.backend +
                              "' is not available in this build (available: toy_random_conv)");
    }
    if (config_.channels.empty() || config_.kernel_size == 0 || config_.kernel_size % 2 == 0) {
        throw ConfigError("feature extractor needs at least one layer and an odd kernel size");
    }
    SeededRng rng(derive_seed(config_.seed, "feature-extractor"));
    std::size_t cin = 3;
    const std::size_t k = config_.kernel_size;
    for (std::size_t cout : config_.channels) {
        weights_.push_back(rng.normal_tensor({cout, cin, k, k}, std::sqrt(2.0 / double(cin * k * k))));
        cin = cout;
    }
}

std::vector<Tensor> FeatureExtractor::features(const ImageAsset& image) const {
    Tensor x = image.pixels;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= 0.5f;
    std::vector<Tensor> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (l > 0 && config_.pool && x.dim(1) % 2 == 0 && x.dim(2) % 2 == 0) x = kernels::avg_pool2x(x);
        x = kernels::conv2d(x, weights_[l], Tensor());
        kernels::relu_inplace(x);
        out.push_back(x);
    }
    return out;
}

Tensor gram(const Tensor& f) {
    if (f.rank() != 3) throw ShapeError("gram expects (C, H, W), got " + shape_str(f.shape()));
    const std::size_t c = f.dim(0), n = f.dim(1) * f.dim(2);
    // (C, N) times its transpose; matmul wants (N, C) on the right.
    const Tensor rows = f.reshaped({c, n});
    Tensor cols({n, c});
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < n; ++j) cols[j * c + i] = rows[i * n + j];
    Tensor g = kernels::matmul(rows, cols);
    g *= 1.0f / float(n);
    return g;
}

namespace {

void check_pair(const ImageAsset& a, const ImageAsset& b, const char* what) {
    if (a.pixels.shape() != b.pixels.shape()) {
        throw ShapeError(std::string(what) + ": image shapes " + shape_str(a.pixels.shape()) + " and " +
                         shape_str(b.pixels.shape()) + " differ");
    }
}

}  // namespace

double content_loss(const ImageAsset& generated, const ImageAsset& content, const FeatureExtractor& fx) {
    check_pair(generated, content, "content_loss");
    const auto fa = fx.features(generated), fb = fx.features(content);
    double total = 0.0;
    for (std::size_t l = 0; l < fa.size(); ++l) total += mean_squared_error(fa[l], fb[l]);
    return total / double(fa.size());
}

double style_loss(const ImageAsset& generated, const ImageAsset& style, const FeatureExtractor& fx) {
    check_pair(generated, style, "style_loss");
    const auto fa = fx.features(generated), fb = fx.features(style);
    double total = 0.0;
    for (std::size_t l = 0; l < fa.size(); ++l) total += mean_squared_error(gram(fa[l]), gram(fb[l]));
    return total / double(fa.size());
}

double pixel_mse(const ImageAsset& a, const ImageAsset& b) {
    check_pair(a, b, "pixel_mse");
    return mean_squared_error(a.pixels, b.pixels);
}

double external_metric(const std::string& name, const ImageAsset&, const ImageAsset&) {
    throw CapabilityError("metric '" + name + "' needs a pretrained network that is not bundled with this build");
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "generated,reference,content_loss,style_loss,mse,runtime_ms\n";
    const auto old_precision = out.precision(9);
    for (const auto& r : rows) {
        out << r.generated << ',' << r.reference << ',' << r.content_loss << ',' << r.style_loss << ',' << r.mse
            << ',' << r.runtime_ms << '\n';
    }
    out.precision(old_precision);
}

}  // namespace stylefuse
