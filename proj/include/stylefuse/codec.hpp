// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stylefuse/ddim.hpp"
#include "stylefuse/tensor.hpp"

namespace stylefuse {

enum class ImageRole { content, style, output };

const char* to_string(ImageRole role);

/// RGB image, (3, H, W) with values in [0, 1].
struct ImageAsset {
    Tensor pixels;
    ImageRole role = ImageRole::content;

    std::size_t height() const { return pixels.dim(1); }
    std::size_t width() const { return pixels.dim(2); }
};

/// Builds an asset, clamping values into [0, 1]. Throws ShapeError unless the
/// tensor is (3, H, W).
ImageAsset make_image(Tensor pixels, ImageRole role);

/// 8-bit RGB PNG. Alpha and grey inputs are converted by libpng.
ImageAsset read_png(const std::filesystem::path& path, ImageRole role);
ImageAsset decode_png(const std::vector<std::uint8_t>& bytes, ImageRole role);
std::vector<std::uint8_t> encode_png(const ImageAsset& image);
void write_png(const std::filesystem::path& path, const ImageAsset& image);

enum class CodecBackend { toy, external };

/// Image <-> latent map. The toy codec rescales pixels to [-1, 1] and applies
/// a seeded orthogonal matrix to every f x f patch, giving 3 f^2 latent
/// channels at (H/f, W/f); f = 1 with the identity matrix is the identity
/// codec. Decoding inverts the map and clamps to [0, 1].
class LatentCodec {
public:
    static LatentCodec identity();
    static LatentCodec orthogonal(std::size_t factor, std::uint64_t seed);

    std::size_t downscale_factor() const noexcept { return factor_; }
    std::size_t latent_channels() const noexcept { return 3 * factor_ * factor_; }
    CodecBackend backend() const noexcept { return CodecBackend::toy; }
    const std::string& name() const noexcept { return name_; }

    /// Throws ShapeError when H or W is not divisible by the factor.
    Latent encode(const ImageAsset& image, Branch branch) const;
    /// Throws ShapeError on a channel mismatch.
    ImageAsset decode(const Latent& z, ImageRole role = ImageRole::output) const;

private:
    LatentCodec(std::string name, std::size_t factor, std::vector<double> basis);

    std::string name_;
    std::size_t factor_ = 1;
    std::vector<double> basis_;  // row-major (d, d), d = 3 f^2; rows orthonormal
};

/// Codec factory: "identity", "toy" (orthogonal, factor f). Other names
/// (e.g. "vae") throw CapabilityError.
LatentCodec make_codec(const std::string& name, std::size_t factor, std::uint64_t seed);

}  // namespace stylefuse
