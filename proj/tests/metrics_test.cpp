// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "stylefuse/error.hpp"
#include "stylefuse/metrics.hpp"

namespace stylefuse {
namespace {

using testing::content_image;
using testing::random_tensor;
using testing::style_image;

ImageAsset noisy(const ImageAsset& img, float sigma) {
    Tensor p = img.pixels + random_tensor(img.pixels.shape(), 99, sigma);
    return make_image(std::move(p), ImageRole::output);
}

TEST(Gram, MatchesDirectSum) {
    const Tensor f = random_tensor({4, 3, 5}, 1);
    const Tensor g = gram(f);
    ASSERT_EQ(g.shape(), (Shape{4, 4}));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0.0;
            for (std::size_t n = 0; n < 15; ++n) s += double(f[i * 15 + n]) * f[j * 15 + n];
            EXPECT_NEAR(g.at(i, j), s / 15.0, 1e-5);
            EXPECT_EQ(g.at(i, j), g.at(j, i));
        }
}

TEST(Gram, InvariantToSpatialPermutation) {
    const Tensor f = random_tensor({6, 8, 8}, 2);
    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
    Tensor shuffled(f.shape());
    for (std::size_t c = 0; c < 6; ++c)
        for (std::size_t n = 0; n < 64; ++n) shuffled[c * 64 + n] = f[c * 64 + perm[n]];
    EXPECT_LE(max_abs_diff(gram(f), gram(shuffled)), 1e-6f);
}

TEST(Losses, ZeroOnIdentity) {
    const FeatureExtractor fx;
    const auto img = content_image(32, 32);
    EXPECT_EQ(content_loss(img, img, fx), 0.0);
    EXPECT_EQ(style_loss(img, img, fx), 0.0);
    EXPECT_EQ(pixel_mse(img, img), 0.0);
    EXPECT_GT(style_loss(img, style_image(32, 32), fx), 0.0);
}

TEST(Losses, ContentLossGrowsWithNoise) {
    const FeatureExtractor fx;
    const auto img = content_image(32, 32);
    double last = 0.0;
    for (float sigma : {0.01f, 0.02f, 0.04f, 0.08f, 0.16f}) {
        const double l = content_loss(noisy(img, sigma), img, fx);
        EXPECT_GT(l, last) << sigma;
        last = l;
    }
}

TEST(Losses, PixelMseMatchesDefinition) {
    const auto a = content_image(8, 8), b = style_image(8, 8);
    double s = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = double(a.pixels[i]) - double(b.pixels[i]);
        s += d * d;
    }
    EXPECT_NEAR(pixel_mse(a, b), s / double(a.pixels.size()), 1e-9);
    EXPECT_THROW(pixel_mse(a, content_image(8, 16)), ShapeError);
}

TEST(Extractor, SeededAndShaped) {
    const FeatureExtractor a, b;
    const auto fa = a.features(content_image(16, 16));
    ASSERT_EQ(fa.size(), 2u);
    EXPECT_EQ(fa[0].shape(), (Shape{16, 16, 16}));
    EXPECT_EQ(fa[1].shape(), (Shape{32, 8, 8}));
    EXPECT_TRUE(fa[1].identical(b.features(content_image(16, 16))[1]));
    FeatureExtractorConfig cfg;
    cfg.backend = "vgg19";
    EXPECT_THROW(FeatureExtractor{cfg}, CapabilityError);
    cfg = {};
    cfg.kernel_size = 2;
    EXPECT_THROW(FeatureExtractor{cfg}, ConfigError);
}

TEST(External, AdaptersAreAbsent) {
    EXPECT_THROW(external_metric("lpips", content_image(8, 8), content_image(8, 8)), CapabilityError);
    EXPECT_THROW(external_metric("clipscore", content_image(8, 8), content_image(8, 8)), CapabilityError);
}

TEST(Csv, HeaderAndRows) {
    std::ostringstream out;
    write_metrics_csv(out, {{"a.png", "c.png", 0.5, 0.25, 0.125, 3.0}});
    EXPECT_EQ(out.str(), "generated,reference,content_loss,style_loss,mse,runtime_ms\na.png,c.png,0.5,0.25,0.125,3\n");
}

}  // namespace
}  // namespace stylefuse
