// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/codec.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "stylefuse/error.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {

const char* to_string(ImageRole role) {
    switch (role) {
        case ImageRole::content: return "content";
        case ImageRole::style: return "style";
        case ImageRole::output: return "output";
    }
    return "?";
}

ImageAsset make_image(Tensor pixels, ImageRole role) {
    if (pixels.rank() != 3 || pixels.dim(0) != 3 || pixels.dim(1) == 0 || pixels.dim(2) == 0) {
        throw ShapeError("image must be (3, H, W), got " + shape_str(pixels.shape()));
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = std::clamp(pixels[i], 0.0f, 1.0f);
    return ImageAsset{std::move(pixels), role};
}

namespace {

ImageAsset from_rgb8(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w, ImageRole role) {
    Tensor px({3, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) px.at(c, y, x) = float(rgb[(y * w + x) * 3 + c]) / 255.0f;
    return ImageAsset{std::move(px), role};
}

}  // namespace

ImageAsset decode_png(const std::vector<std::uint8_t>& bytes, ImageRole role) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IoError(std::string("not a readable PNG: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError(std::string("PNG decode failed: ") + image.message);
    }
    return from_rgb8(rgb, image.height, image.width, role);
}

ImageAsset read_png(const std::filesystem::path& path, ImageRole role) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_png(bytes, role);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const ImageAsset& img) {
    const std::size_t h = img.height(), w = img.width();
    std::vector<std::uint8_t> rgb(h * w * 3);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const float v = std::clamp(img.pixels.at(c, y, x), 0.0f, 1.0f);
                rgb[(y * w + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = png_uint_32(w);
    image.height = png_uint_32(h);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const ImageAsset& image) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("short write on " + path.string());
}

LatentCodec::LatentCodec(std::string name, std::size_t factor, std::vector<double> basis)
    : name_(std::move(name)), factor_(factor), basis_(std::move(basis)) {}

LatentCodec LatentCodec::identity() {
    std::vector<double> basis(9, 0.0);
    for (std::size_t i = 0; i < 3; ++i) basis[i * 3 + i] = 1.0;
    return LatentCodec("identity", 1, std::move(basis));
}

LatentCodec LatentCodec::orthogonal(std::size_t factor, std::uint64_t seed) {
    if (factor == 0) throw ConfigError("codec downscale factor must be positive");
    const std::size_t d = 3 * factor * factor;
    SeededRng rng(derive_seed(seed, "toy-codec"));
    std::vector<double> b(d * d);
    // Gram-Schmidt on gaussian rows, twice per row for stability.
    for (std::size_t r = 0; r < d; ++r) {
        double norm = 0.0;
        do {
            for (std::size_t c = 0; c < d; ++c) b[r * d + c] = rng.normal();
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t p = 0; p < r; ++p) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < d; ++c) dot += b[r * d + c] * b[p * d + c];
                    for (std::size_t c = 0; c < d; ++c) b[r * d + c] -= dot * b[p * d + c];
                }
            }
            norm = 0.0;
            for (std::size_t c = 0; c < d; ++c) norm += b[r * d + c] * b[r * d + c];
            norm = std::sqrt(norm);
        } while (norm < 1e-6);
        for (std::size_t c = 0; c < d; ++c) b[r * d + c] /= norm;
    }
    return LatentCodec("toy", factor, std::move(b));
}

Latent LatentCodec::encode(const ImageAsset& image, Branch branch) const {
    const auto& px = image.pixels;
    if (px.rank() != 3 || px.dim(0) != 3) throw ShapeError("image must be (3, H, W), got " + shape_str(px.shape()));
    const std::size_t f = factor_, H = px.dim(1), W = px.dim(2);
    if (H % f || W % f) {
        throw ShapeError("image " + std::to_string(H) + "x" + std::to_string(W) +
                         " not divisible by codec factor " + std::to_string(f));
    }
    const std::size_t h = H / f, w = W / f, d = latent_channels();
    Tensor z({d, h, w});
    std::vector<double> patch(d);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t dy = 0; dy < f; ++dy)
                    for (std::size_t dx = 0; dx < f; ++dx)
                        patch[(c * f + dy) * f + dx] = 2.0 * px.at(c, y * f + dy, x * f + dx) - 1.0;
            for (std::size_t r = 0; r < d; ++r) {
                double acc = 0.0;
                for (std::size_t k = 0; k < d; ++k) acc += basis_[r * d + k] * patch[k];
                z.at(r, y, x) = float(acc);
            }
        }
    }
    return Latent{std::move(z), 0, branch};
}

ImageAsset LatentCodec::decode(const Latent& latent, ImageRole role) const {
    const auto& z = latent.data;
    const std::size_t d = latent_channels(), f = factor_;
    if (z.rank() != 3 || z.dim(0) != d) {
        throw ShapeError("codec expects " + std::to_string(d) + " latent channels, got " + shape_str(z.shape()));
    }
    const std::size_t h = z.dim(1), w = z.dim(2);
    Tensor px({3, h * f, w * f});
    std::vector<double> patch(d);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::fill(patch.begin(), patch.end(), 0.0);
            for (std::size_t r = 0; r < d; ++r) {
                const double v = z.at(r, y, x);
                for (std::size_t k = 0; k < d; ++k) patch[k] += basis_[r * d + k] * v;
            }
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t dy = 0; dy < f; ++dy)
                    for (std::size_t dx = 0; dx < f; ++dx) {
                        const double v = 0.5 * (patch[(c * f + dy) * f + dx] + 1.0);
                        px.at(c, y * f + dy, x * f + dx) = float(std::clamp(v, 0.0, 1.0));
                    }
        }
    }
    return ImageAsset{std::move(px), role};
}

LatentCodec make_codec(const std::string& name, std::size_t factor, std::uint64_t seed) {
    if (name == "identity") {
        if (factor != 1) throw ConfigError("identity codec has downscale factor 1");
        return LatentCodec::identity();
    }
    if (name == "toy") return LatentCodec::orthogonal(factor, seed);
    throw CapabilityError("codec '" + name + "' is not available in this build (available: identity, toy)");
}

}  // namespace stylefuse
