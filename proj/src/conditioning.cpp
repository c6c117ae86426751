// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/conditioning.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

#include "stylefuse/error.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {

const char* to_string(TextSource s) {
    switch (s) {
        case TextSource::clip_text_stub: return "clip_text_stub";
        case TextSource::clip_text_real: return "clip_text_real";
        case TextSource::null_text: return "null";
    }
    return "?";
}

const char* to_string(StyleSource s) { return s == StyleSource::blip_stub ? "blip_stub" : "blip_real"; }

namespace {

void check_dims(const EncoderConfig& c) {
    if (c.dim == 0 || c.n_tokens < 2 || c.m_tokens == 0 || c.vocab < 4) {
        throw ConfigError("encoder needs dim > 0, n_tokens >= 2, m_tokens > 0, vocab >= 4");
    }
}

std::vector<std::string> split_words(const std::string& prompt) {
    std::vector<std::string> words;
    std::istringstream in(prompt);
    std::string w;
    while (in >> w) {
        for (char& ch : w) ch = char(std::tolower(static_cast<unsigned char>(ch)));
        words.push_back(w);
    }
    return words;
}

}  // namespace

StubTextEncoder::StubTextEncoder(const EncoderConfig& config) : config_(config) {
    check_dims(config_);
    SeededRng rng(derive_seed(config_.seed, "text-table"));
    table_ = rng.normal_tensor({config_.vocab, config_.dim}, 1.0);
}

TextEmbedding StubTextEncoder::encode(const std::string& prompt) const {
    constexpr std::size_t kBegin = 0, kEnd = 1, kPad = 2;
    const auto words = split_words(prompt);
    std::vector<std::size_t> rows{kBegin};
    for (const auto& w : words) {
        if (rows.size() + 1 >= config_.n_tokens) break;
        rows.push_back(3 + fnv1a(w) % (config_.vocab - 3));
    }
    rows.push_back(kEnd);
    while (rows.size() < config_.n_tokens) rows.push_back(kPad);

    const std::size_t d = config_.dim;
    Tensor tokens({config_.n_tokens, d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            const double pos = 0.1 * std::sin(double(i + 1) * double(c + 1) / double(d));
            tokens.at(i, c) = float(table_.at(rows[i], c) + pos);
        }
    }
    return {std::move(tokens), words.empty() ? TextSource::null_text : TextSource::clip_text_stub};
}

StubStyleEncoder::StubStyleEncoder(const EncoderConfig& config) : config_(config), text_(config) {
    check_dims(config_);
    SeededRng rng(derive_seed(config_.seed, "style-projection"));
    projection_ = rng.normal_tensor({kStats, config_.m_tokens * config_.dim}, 2.0 / std::sqrt(double(kStats)));
    bias_ = rng.normal_tensor({1, config_.m_tokens * config_.dim}, 0.5);
}

StyleEmbedding StubStyleEncoder::encode(const ImageAsset& image, const std::string& text) const {
    const auto& px = image.pixels;
    if (px.rank() != 3 || px.dim(0) != 3) throw ShapeError("style image must be (3, H, W)");
    const std::size_t h = px.dim(1), w = px.dim(2);

    std::vector<double> stats;
    stats.reserve(kStats);
    for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                sum += px.at(c, y, x);
                sq += double(px.at(c, y, x)) * px.at(c, y, x);
            }
        const double n = double(h * w), mean = sum / n;
        stats.push_back(mean - 0.5);
        stats.push_back(std::sqrt(std::max(0.0, sq / n - mean * mean)));
    }
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t gy = 0; gy < 2; ++gy)
            for (std::size_t gx = 0; gx < 2; ++gx) {
                const std::size_t y0 = gy * h / 2, y1 = (gy + 1) * h / 2, x0 = gx * w / 2, x1 = (gx + 1) * w / 2;
                double sum = 0.0;
                std::size_t n = 0;
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t x = x0; x < x1; ++x, ++n) sum += px.at(c, y, x);
                stats.push_back(n ? sum / double(n) - 0.5 : 0.0);
            }
    double grad = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x + 1 < w; ++x) grad += std::abs(px.at(c, y, x + 1) - px.at(c, y, x));
    stats.push_back(grad / double(3 * h * std::max<std::size_t>(w - 1, 1)));

    const std::size_t d = config_.dim, m = config_.m_tokens;
    std::vector<double> text_mean(d, 0.0);
    if (!split_words(text).empty()) {
        const auto t = text_.encode(text).tokens;
        for (std::size_t i = 0; i < t.dim(0); ++i)
            for (std::size_t c = 0; c < d; ++c) text_mean[c] += t.at(i, c) / double(t.dim(0));
    }

    Tensor tokens({m, d});
    for (std::size_t j = 0; j < m * d; ++j) {
        double acc = bias_[j];
        for (std::size_t k = 0; k < kStats; ++k) acc += projection_.at(k, j) * stats[k];
        tokens[j] = float(std::tanh(acc + text_mean[j % d]));
    }
    return {std::move(tokens), StyleSource::blip_stub};
}

std::unique_ptr<TextEncoder> make_text_encoder(const EncoderConfig& config) {
    if (config.text_backend == "stub") return std::make_unique<StubTextEncoder>(config);
    throw CapabilityError("text encoder '" + config.text_backend + "' is not available in this build (available: stub)");
}

std::unique_ptr<StyleEncoder> make_style_encoder(const EncoderConfig& config) {
    if (config.style_backend == "stub") return std::make_unique<StubStyleEncoder>(config);
    throw CapabilityError("style encoder '" + config.style_backend +
                          "' is not available in this build (available: stub)");
}

Conditioner::Conditioner(const EncoderConfig& config)
    : text_(make_text_encoder(config)), style_(make_style_encoder(config)) {
    if (text_->dim() != style_->dim()) {
        throw ConfigError("text encoder dim " + std::to_string(text_->dim()) + " differs from style encoder dim " +
                          std::to_string(style_->dim()));
    }
}

TextEmbedding Conditioner::encode_text(const std::string& prompt) const { return text_->encode(prompt); }

StyleEmbedding Conditioner::encode_style_image(const ImageAsset& image, const std::string& text) const {
    return style_->encode(image, text);
}

ConditioningBundle Conditioner::build_bundle(const std::string& content_prompt, const ImageAsset& style_image,
                                             const std::optional<std::string>& edit_prompt,
                                             const std::optional<StyleEmbedding>& pinned_style) const {
    ConditioningBundle b;
    b.v_c = encode_text(edit_prompt ? *edit_prompt : content_prompt);
    b.v_s = pinned_style ? *pinned_style : encode_style_image(style_image, "");
    if (b.v_c.tokens.dim(1) != b.v_s.tokens.dim(1)) {
        throw ConfigError("text embedding dim " + std::to_string(b.v_c.tokens.dim(1)) +
                          " differs from style embedding dim " + std::to_string(b.v_s.tokens.dim(1)));
    }
    b.v_st = concat_rows(b.v_c.tokens, b.v_s.tokens);
    b.null_embedding = encode_text("");
    return b;
}

}  // namespace stylefuse
