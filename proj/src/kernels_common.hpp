// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "stylefuse/error.hpp"
#include "stylefuse/tensor.hpp"

namespace stylefuse::kernels::detail {

struct ConvGeometry {
    std::size_t cin, cout, h, w, k;
};

inline ConvGeometry check_conv(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 3 || weight.rank() != 4 || weight.dim(1) != x.dim(0) || weight.dim(2) != weight.dim(3) ||
        weight.dim(2) % 2 == 0) {
        throw ShapeError("conv2d: input " + shape_str(x.shape()) + " weight " + shape_str(weight.shape()));
    }
    if (!bias.empty() && bias.size() != weight.dim(0)) {
        throw ShapeError("conv2d: bias " + shape_str(bias.shape()) + " for " + std::to_string(weight.dim(0)) +
                         " output channels");
    }
    return {x.dim(0), weight.dim(0), x.dim(1), x.dim(2), weight.dim(2)};
}

inline void check_group_norm(const Tensor& x, std::size_t groups) {
    if (x.rank() != 3 || groups == 0 || x.dim(0) % groups != 0) {
        throw ShapeError("group_norm: " + shape_str(x.shape()) + " with " + std::to_string(groups) + " groups");
    }
}

inline void check_project(const Tensor& x, const Tensor& weight) {
    if (x.rank() != 3 || weight.rank() != 2 || weight.dim(0) != x.dim(0)) {
        throw ShapeError("project_tokens: map " + shape_str(x.shape()) + " weight " + shape_str(weight.shape()));
    }
}

inline void check_matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
}

inline void check_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0) ||
        k.dim(0) == 0 || heads == 0 || q.dim(1) % heads != 0 || v.dim(1) % heads != 0) {
        throw ShapeError("attention: q " + shape_str(q.shape()) + " k " + shape_str(k.shape()) + " v " +
                         shape_str(v.shape()) + " heads " + std::to_string(heads));
    }
}

}  // namespace stylefuse::kernels::detail
