// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "stylefuse/error.hpp"

namespace stylefuse {
namespace {

using testing::content_image;

TEST(Image, MakeClampsAndValidates) {
    Tensor p({3, 2, 2}, 0.5f);
    p[0] = -1.0f;
    p[1] = 2.0f;
    const auto img = make_image(p, ImageRole::style);
    EXPECT_EQ(img.pixels[0], 0.0f);
    EXPECT_EQ(img.pixels[1], 1.0f);
    EXPECT_EQ(img.height(), 2u);
    EXPECT_THROW(make_image(Tensor({4, 2, 2}), ImageRole::content), ShapeError);
    EXPECT_THROW(make_image(Tensor({3, 4}), ImageRole::content), ShapeError);
}

TEST(Png, RoundTripsEightBitValues) {
    Tensor p({3, 5, 7});
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = float((i * 37) % 256) / 255.0f;
    const auto img = make_image(p, ImageRole::content);
    const auto back = decode_png(encode_png(img), ImageRole::content);
    EXPECT_EQ(back.pixels.shape(), p.shape());
    EXPECT_LT(max_abs_diff(back.pixels, p), 1e-6f);
    // Quantization is round-to-nearest.
    EXPECT_LE(max_abs_diff(decode_png(encode_png(content_image(8, 8)), ImageRole::content).pixels,
                           content_image(8, 8).pixels),
              0.5f / 255.0f + 1e-6f);
}

TEST(Png, EncodingIsByteStable) {
    EXPECT_EQ(encode_png(content_image(16, 16)), encode_png(content_image(16, 16)));
}

TEST(Png, FileErrorsAreIoErrors) {
    testing::TempDir dir("png");
    EXPECT_THROW(read_png(dir / "absent.png", ImageRole::content), IoError);
    std::ofstream(dir / "junk.png") << "not a png";
    EXPECT_THROW(read_png(dir / "junk.png", ImageRole::content), IoError);
    write_png(dir / "ok.png", content_image(8, 12));
    EXPECT_EQ(read_png(dir / "ok.png", ImageRole::style).width(), 12u);
}

TEST(Codec, IdentityIsAffineRescale) {
    const auto codec = LatentCodec::identity();
    const auto img = content_image(8, 8);
    const Latent z = codec.encode(img, Branch::content);
    EXPECT_EQ(z.step, 0);
    EXPECT_EQ(z.branch, Branch::content);
    EXPECT_NEAR(z.data[5], 2.0f * img.pixels[5] - 1.0f, 1e-7);
    EXPECT_LT(max_abs_diff(codec.decode(z).pixels, img.pixels), 1e-6f);
}

TEST(Codec, OrthogonalRoundTripAndNorm) {
    const auto codec = LatentCodec::orthogonal(2, 5);
    const auto img = content_image(16, 8);
    const Latent z = codec.encode(img, Branch::style);
    EXPECT_EQ(z.data.shape(), (Shape{12, 8, 4}));
    EXPECT_LT(max_abs_diff(codec.decode(z).pixels, img.pixels), 1e-5f);
    // An orthogonal map preserves the norm of the rescaled pixels.
    double n = 0.0;
    for (float v : img.pixels.span()) n += double(2.0f * v - 1.0f) * (2.0f * v - 1.0f);
    EXPECT_NEAR(l2_norm(z.data), std::sqrt(n), 1e-3);
}

TEST(Codec, DecodeClamps) {
    const auto codec = LatentCodec::identity();
    const auto out = codec.decode(Latent{Tensor({3, 2, 2}, 5.0f)});
    EXPECT_EQ(out.pixels[0], 1.0f);
    EXPECT_EQ(out.role, ImageRole::output);
}

TEST(Codec, RejectsMismatches) {
    const auto codec = LatentCodec::orthogonal(4, 1);
    EXPECT_THROW(codec.encode(content_image(10, 8), Branch::content), ShapeError);
    EXPECT_THROW(codec.decode(Latent{Tensor({3, 2, 2})}), ShapeError);
    EXPECT_THROW(make_codec("vae", 8, 0), CapabilityError);
    EXPECT_THROW(make_codec("identity", 2, 0), ConfigError);
    EXPECT_EQ(make_codec("toy", 2, 0).latent_channels(), 12u);
}

}  // namespace
}  // namespace stylefuse
