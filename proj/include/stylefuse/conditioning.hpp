// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "stylefuse/codec.hpp"
#include "stylefuse/tensor.hpp"

namespace stylefuse {

enum class TextSource { clip_text_stub, clip_text_real, null_text };
enum class StyleSource { blip_stub, blip_real };

const char* to_string(TextSource s);
const char* to_string(StyleSource s);

/// Prompt embedding, (n_tokens, dim).
struct TextEmbedding {
    Tensor tokens;
    TextSource source = TextSource::clip_text_stub;
};

/// Text-aligned embedding of a style image, (m_tokens, dim).
struct StyleEmbedding {
    Tensor tokens;
    StyleSource source = StyleSource::blip_stub;
};

/// Everything the denoiser is conditioned on for one job. v_st holds the
/// rows of v_c followed by the rows of v_s.
struct ConditioningBundle {
    TextEmbedding v_c;
    StyleEmbedding v_s;
    Tensor v_st;
    TextEmbedding null_embedding;
};

struct EncoderConfig {
    std::string text_backend = "stub";
    std::string style_backend = "stub";
    std::size_t dim = 32;
    std::size_t n_tokens = 8;  // text tokens including begin/end markers and padding
    std::size_t m_tokens = 4;  // style tokens
    std::size_t vocab = 4096;  // rows of the stub token table
    std::uint64_t seed = 0;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual std::size_t dim() const = 0;
    /// Pure function of the prompt. "" is the null text.
    virtual TextEmbedding encode(const std::string& prompt) const = 0;
};

class StyleEncoder {
public:
    virtual ~StyleEncoder() = default;
    virtual std::size_t dim() const = 0;
    /// Pure function of image and text. The pipeline always passes "".
    virtual StyleEmbedding encode(const ImageAsset& image, const std::string& text) const = 0;
};

/// Stub CLIP-text: lower-cased whitespace tokens hashed into a seeded table,
/// framed by begin/end rows, padded to n_tokens, plus a small positional term.
class StubTextEncoder final : public TextEncoder {
public:
    explicit StubTextEncoder(const EncoderConfig& config);
    std::size_t dim() const override { return config_.dim; }
    TextEmbedding encode(const std::string& prompt) const override;

private:
    EncoderConfig config_;
    Tensor table_;  // (vocab, dim); rows 0..2 are begin, end, pad
};

/// Stub BLIP: pooled image statistics (channel means and deviations, 2x2 grid
/// means, gradient energy) through a seeded projection and tanh.
class StubStyleEncoder final : public StyleEncoder {
public:
    explicit StubStyleEncoder(const EncoderConfig& config);
    std::size_t dim() const override { return config_.dim; }
    StyleEmbedding encode(const ImageAsset& image, const std::string& text) const override;

    static constexpr std::size_t kStats = 19;

private:
    EncoderConfig config_;
    StubTextEncoder text_;
    Tensor projection_;  // (kStats, m_tokens * dim)
    Tensor bias_;        // (m_tokens * dim)
};

/// Named backends; "clip" / "blip2" adapters are not bundled and throw
/// CapabilityError rather than falling back to a stub.
std::unique_ptr<TextEncoder> make_text_encoder(const EncoderConfig& config);
std::unique_ptr<StyleEncoder> make_style_encoder(const EncoderConfig& config);

class Conditioner {
public:
    explicit Conditioner(const EncoderConfig& config);

    TextEmbedding encode_text(const std::string& prompt) const;
    StyleEmbedding encode_style_image(const ImageAsset& image, const std::string& text = "") const;

    /// v_c = encode_text(edit_prompt or content_prompt), v_s from the style
    /// image with null text, v_st = rows of v_c then v_s. A pinned style
    /// embedding replaces the image-derived v_s.
    ConditioningBundle build_bundle(const std::string& content_prompt, const ImageAsset& style_image,
                                    const std::optional<std::string>& edit_prompt = std::nullopt,
                                    const std::optional<StyleEmbedding>& pinned_style = std::nullopt) const;

    std::size_t dim() const { return text_->dim(); }

private:
    std::unique_ptr<TextEncoder> text_;
    std::unique_ptr<StyleEncoder> style_;
};

}  // namespace stylefuse
