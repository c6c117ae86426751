// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/tensor_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "stylefuse/error.hpp"

namespace stylefuse {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "stylefuse-tensors";

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
}

std::string file_name_for(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '.';
    return out + ".f32";
}

}  // namespace

void write_tensor_dir(const fs::path& dir, const TensorDir& contents) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [name, tensor] : contents.tensors) {
        const std::string file = file_name_for(name);
        std::ofstream out(dir / file, std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / file).string());
        std::vector<std::uint32_t> raw(tensor.size());
        for (std::size_t i = 0; i < tensor.size(); ++i) raw[i] = to_le(std::bit_cast<std::uint32_t>(tensor[i]));
        out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size() * sizeof(std::uint32_t)));
        if (!out) throw IoError("short write on " + (dir / file).string());
        entries.push_back({{"name", name}, {"file", file}, {"shape", tensor.shape()}, {"dtype", "f32le"}});
    }

    nlohmann::json manifest = {
        {"format", kFormat}, {"version", 1}, {"meta", contents.meta}, {"tensors", entries}};
    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw IoError("cannot write " + (dir / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
}

TensorDir read_tensor_dir(const fs::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw IoError("missing manifest in " + dir.string());
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad manifest in " + dir.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != kFormat) throw IoError("unknown tensor dir format in " + dir.string());

    TensorDir result;
    result.meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& entry : manifest.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<Shape>();
        const auto path = dir / entry.at("file").get<std::string>();
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("missing tensor file " + path.string());
        std::vector<std::uint32_t> raw(shape_numel(shape));
        in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * sizeof(std::uint32_t)));
        if (in.gcount() != std::streamsize(raw.size() * sizeof(std::uint32_t))) {
            throw IoError("truncated tensor file " + path.string());
        }
        std::vector<float> values(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) values[i] = std::bit_cast<float>(to_le(raw[i]));
        result.tensors.emplace(name, Tensor(shape, std::move(values)));
    }
    return result;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(const Tensor& t, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (auto d : t.shape()) h = fnv1a(std::to_string(d) + ",", h);
    for (float v : t.values()) {
        const auto bits = to_le(std::bit_cast<std::uint32_t>(v));
        char buf[4];
        std::memcpy(buf, &bits, 4);
        h = fnv1a(std::string_view(buf, 4), h);
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[std::size_t(i)] = digits[v & 0xf];
    return s;
}

SeededRng::SeededRng(std::uint64_t seed) : engine_(seed) {}

double SeededRng::uniform() {
    return double(engine_() >> 11) * (1.0 / 9007199254740992.0);
}

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Tensor SeededRng::normal_tensor(Shape shape, double stddev) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = float(normal() * stddev);
    return t;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    return fnv1a(tag, fnv1a(std::to_string(seed)));
}

}  // namespace stylefuse
