// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "stylefuse/codec.hpp"
#include "stylefuse/pipeline.hpp"
#include "stylefuse/tensor.hpp"

namespace stylefuse::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, float scale = 1.0f) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n(0.0f, scale);
    Tensor t(std::move(shape));
    for (auto& v : t.span()) v = n(rng);
    return t;
}

/// Smooth gradients plus stripes: a stand-in photo.
inline ImageAsset content_image(std::size_t h, std::size_t w, std::uint64_t seed = 1) {
    Tensor p({3, h, w});
    const double ph = double(seed % 7) * 0.3;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double u = double(x) / double(w), v = double(y) / double(h);
            p.at(0, y, x) = float(0.2 + 0.6 * u);
            p.at(1, y, x) = float(0.3 + 0.5 * v);
            p.at(2, y, x) = float(0.5 + 0.35 * std::sin(12.0 * (u + v) + ph));
        }
    }
    return make_image(std::move(p), ImageRole::content);
}

/// High-frequency texture: a stand-in painting.
inline ImageAsset style_image(std::size_t h, std::size_t w, std::uint64_t seed = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor p({3, h, w});
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const float wave = 0.5f + 0.4f * float(std::sin(0.9 * double(x + 2 * c) + 0.7 * double(y)));
                p.at(c, y, x) = 0.6f * wave + 0.4f * u(rng);
            }
        }
    }
    return make_image(std::move(p), ImageRole::style);
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("stylefuse-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Small and fast: the smallest size the toy backend accepts is 8.
inline TransferJob small_job(std::size_t size = 16, int steps = 10) {
    TransferJob job;
    job.content = content_image(size, size);
    job.style = style_image(size, size);
    job.config.sample_steps = steps;
    return job;
}

}  // namespace stylefuse::testing
