// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels. Written for readability, not speed; the parallel
// kernels are tested against these.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kernels_common.hpp"
#include "stylefuse/kernels.hpp"

namespace stylefuse::kernels::reference {

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const auto g = detail::check_conv(x, weight, bias);
    const long pad = long(g.k / 2);
    Tensor out({g.cout, g.h, g.w});
    for (std::size_t co = 0; co < g.cout; ++co) {
        for (std::size_t y = 0; y < g.h; ++y) {
            for (std::size_t xx = 0; xx < g.w; ++xx) {
                float acc = bias.empty() ? 0.0f : bias[co];
                for (std::size_t ci = 0; ci < g.cin; ++ci) {
                    for (std::size_t ky = 0; ky < g.k; ++ky) {
                        for (std::size_t kx = 0; kx < g.k; ++kx) {
                            const long sy = long(y) + long(ky) - pad;
                            const long sx = long(xx) + long(kx) - pad;
                            if (sy < 0 || sx < 0 || sy >= long(g.h) || sx >= long(g.w)) continue;
                            acc += weight[((co * g.cin + ci) * g.k + ky) * g.k + kx] *
                                   x.at(ci, std::size_t(sy), std::size_t(sx));
                        }
                    }
                }
                out.at(co, y, xx) = acc;
            }
        }
    }
    return out;
}

Tensor group_norm(const Tensor& x, std::size_t groups, float eps) {
    detail::check_group_norm(x, groups);
    const std::size_t per_group = x.dim(0) / groups;
    const std::size_t hw = x.dim(1) * x.dim(2);
    Tensor out(x.shape());
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t begin = g * per_group * hw;
        const std::size_t end = begin + per_group * hw;
        double mean = 0.0;
        for (std::size_t i = begin; i < end; ++i) mean += x[i];
        mean /= double(end - begin);
        double var = 0.0;
        for (std::size_t i = begin; i < end; ++i) var += (x[i] - mean) * (x[i] - mean);
        var /= double(end - begin);
        for (std::size_t i = begin; i < end; ++i) out[i] = float((x[i] - mean) / std::sqrt(var + eps));
    }
    return out;
}

Tensor project_tokens(const Tensor& x, const Tensor& weight) {
    detail::check_project(x, weight);
    const std::size_t c = x.dim(0), n = x.dim(1) * x.dim(2), d = weight.dim(1);
    Tensor out({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            float acc = 0.0f;
            for (std::size_t ci = 0; ci < c; ++ci) acc += x[ci * n + i] * weight.at(ci, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::check_matmul(a, b);
    Tensor out({a.dim(0), b.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        for (std::size_t j = 0; j < b.dim(1); ++j) {
            float acc = 0.0f;
            for (std::size_t k = 0; k < a.dim(1); ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor attention_probs(const Tensor& q, const Tensor& k, float scale) {
    if (q.rank() != 2 || k.rank() != 2 || q.dim(1) != k.dim(1)) {
        throw ShapeError("attention_probs: q " + shape_str(q.shape()) + " k " + shape_str(k.shape()));
    }
    const std::size_t n = q.dim(0), m = k.dim(0), d = q.dim(1);
    Tensor probs({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -1e300;
        std::vector<double> logits(m);
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += double(q.at(i, c)) * k.at(j, c);
            logits[j] = acc * scale;
            mx = std::max(mx, logits[j]);
        }
        double sum = 0.0;
        for (auto& l : logits) sum += (l = std::exp(l - mx));
        for (std::size_t j = 0; j < m; ++j) probs.at(i, j) = float(logits[j] / sum);
    }
    return probs;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, float scale, std::size_t heads) {
    detail::check_attention(q, k, v, heads);
    const std::size_t n = q.dim(0), m = k.dim(0), dh = q.dim(1) / heads, dvh = v.dim(1) / heads;
    Tensor out({n, v.dim(1)});
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor qh({n, dh}), kh({m, dh});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dh; ++c) qh.at(i, c) = q.at(i, h * dh + c);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t c = 0; c < dh; ++c) kh.at(j, c) = k.at(j, h * dh + c);
        const Tensor probs = attention_probs(qh, kh, scale);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < dvh; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) acc += double(probs.at(i, j)) * v.at(j, h * dvh + c);
                out.at(i, h * dvh + c) = float(acc);
            }
        }
    }
    return out;
}

}  // namespace stylefuse::kernels::reference
