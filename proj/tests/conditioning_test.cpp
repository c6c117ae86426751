// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "stylefuse/error.hpp"

namespace stylefuse {
namespace {

using testing::content_image;
using testing::style_image;

TEST(TextEncoder, PureAndCaseInsensitive) {
    const StubTextEncoder enc({});
    const auto a = enc.encode("A photo of a Cat");
    EXPECT_EQ(a.tokens.shape(), (Shape{8, 32}));
    EXPECT_TRUE(a.tokens.identical(enc.encode("a photo  of a cat").tokens));
    EXPECT_FALSE(a.tokens.identical(enc.encode("a photo of a dog").tokens));
    EXPECT_EQ(enc.encode("").source, TextSource::null_text);
    EXPECT_EQ(a.source, TextSource::clip_text_stub);
}

TEST(TextEncoder, LongPromptsTruncate) {
    const StubTextEncoder enc({});
    EXPECT_EQ(enc.encode("one two three four five six seven eight nine ten").tokens.shape(), (Shape{8, 32}));
}

TEST(StyleEncoder, DependsOnPixelsOnly) {
    const StubStyleEncoder enc({});
    const auto s = enc.encode(style_image(16, 16), "");
    EXPECT_EQ(s.tokens.shape(), (Shape{4, 32}));
    EXPECT_TRUE(s.tokens.identical(enc.encode(style_image(16, 16), "").tokens));
    EXPECT_FALSE(s.tokens.identical(enc.encode(style_image(16, 16, 9), "").tokens));
    EXPECT_FALSE(s.tokens.identical(enc.encode(style_image(16, 16), "oil painting").tokens));
    for (float v : s.tokens.span()) EXPECT_LE(std::abs(v), 1.0f);
}

TEST(Conditioner, BundleConcatenatesRows) {
    const Conditioner c({});
    const auto b = c.build_bundle("a house", style_image(16, 16));
    ASSERT_EQ(b.v_st.shape(), (Shape{12, 32}));
    EXPECT_TRUE(concat_rows(b.v_c.tokens, b.v_s.tokens).identical(b.v_st));
    EXPECT_TRUE(b.null_embedding.tokens.identical(c.encode_text("").tokens));
}

TEST(Conditioner, EditPromptReplacesContentText) {
    const Conditioner c({});
    const auto b = c.build_bundle("a house", style_image(16, 16), std::string("a castle"));
    EXPECT_TRUE(b.v_c.tokens.identical(c.encode_text("a castle").tokens));
}

TEST(Conditioner, PinnedStyleIgnoresImage) {
    const Conditioner c({});
    const StyleEmbedding pin = c.encode_style_image(content_image(16, 16));
    const auto a = c.build_bundle("", style_image(16, 16), std::nullopt, pin);
    const auto b = c.build_bundle("", style_image(16, 16, 77), std::nullopt, pin);
    EXPECT_TRUE(a.v_st.identical(b.v_st));
    StyleEmbedding wrong{Tensor({4, 16})};
    EXPECT_THROW(c.build_bundle("", style_image(16, 16), std::nullopt, wrong), ConfigError);
}

TEST(Conditioner, RealBackendsAreCapabilityErrors) {
    EncoderConfig cfg;
    cfg.text_backend = "clip";
    EXPECT_THROW(make_text_encoder(cfg), CapabilityError);
    cfg.text_backend = "stub";
    cfg.style_backend = "blip2";
    EXPECT_THROW(make_style_encoder(cfg), CapabilityError);
    EXPECT_THROW(Conditioner{cfg}, CapabilityError);
}

}  // namespace
}  // namespace stylefuse
