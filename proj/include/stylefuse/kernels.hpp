// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "stylefuse/tensor.hpp"

// Dense kernels behind the toy U-Net and the metrics extractor.
//
// Two implementations share one signature set:
//   kernels::            OpenMP-parallel, vectorization-friendly loops
//   kernels::reference:: straightforward serial loops, kept as the oracle
//
// Parallel loops split only over independent outputs, so results do not
// depend on the thread count.

namespace stylefuse::kernels {

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

/// Same-padded, stride-1 convolution. x: (Cin, H, W), weight: (Cout, Cin, k, k),
/// bias: (Cout) or empty.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Group normalization without affine parameters.
Tensor group_norm(const Tensor& x, std::size_t groups, float eps = 1e-5f);

void silu_inplace(Tensor& x);
void relu_inplace(Tensor& x);

/// Project a (C, H, W) feature map to (H*W, D) tokens: out[n] = x[:, n] * weight.
/// weight: (C, D).
Tensor project_tokens(const Tensor& x, const Tensor& weight);

/// (N, Din) * (Din, Dout) -> (N, Dout).
Tensor matmul(const Tensor& a, const Tensor& b);

/// Add (H*W, C) tokens back onto a (C, H, W) map: x[c, n] += tokens[n, c].
void add_tokens_inplace(Tensor& x, const Tensor& tokens);

/// Multi-head scaled dot-product attention. q: (N, D), k: (M, D), v: (M, Dv).
/// D and Dv are split evenly across `heads`; scale is applied to logits.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, float scale, std::size_t heads = 1);

/// Softmax(q k^T * scale) for a single head, (N, M). Used for inspection.
Tensor attention_probs(const Tensor& q, const Tensor& k, float scale);

Tensor avg_pool2x(const Tensor& x);
Tensor upsample2x(const Tensor& x);

/// Channel concatenation of two (C, H, W) maps with equal spatial size.
Tensor concat_channels(const Tensor& a, const Tensor& b);

namespace reference {

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor group_norm(const Tensor& x, std::size_t groups, float eps = 1e-5f);
Tensor project_tokens(const Tensor& x, const Tensor& weight);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, float scale, std::size_t heads = 1);
Tensor attention_probs(const Tensor& q, const Tensor& k, float scale);

}  // namespace reference

}  // namespace stylefuse::kernels
