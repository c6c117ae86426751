// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stylefuse/tensor.hpp"

namespace stylefuse {

/// Directory of raw little-endian float32 tensors plus `manifest.json`:
///
///   { "format": "stylefuse-tensors", "version": 1, "meta": {...},
///     "tensors": [ { "name": ..., "file": ..., "shape": [...], "dtype": "f32le" } ] }
struct TensorDir {
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, Tensor> tensors;
};

void write_tensor_dir(const std::filesystem::path& dir, const TensorDir& contents);
TensorDir read_tensor_dir(const std::filesystem::path& dir);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const Tensor& t, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Seeded generator used for every toy table: mt19937_64 bits, Box-Muller
/// normals. Independent of the standard library's distribution code, so
/// tables match across toolchains.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    double uniform();  // [0, 1)
    double normal();
    Tensor normal_tensor(Shape shape, double stddev);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives a sub-seed for a named table so independent tables never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace stylefuse
