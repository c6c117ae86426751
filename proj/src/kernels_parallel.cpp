// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "kernels_common.hpp"
#include "stylefuse/error.hpp"
#include "stylefuse/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stylefuse::kernels {

namespace {

// exp for x <= 0 with ~2 ulp error; branch-free so the softmax loop vectorizes.
inline float exp_nonpositive(float x) {
    constexpr float kLog2e = 1.44269504088896341f;
    constexpr float kLn2Hi = 0.693359375f;
    constexpr float kLn2Lo = -2.12194440e-4f;
    x = std::max(x, -87.0f);
    // floor via truncation; std::floor is a libm call on baseline x86-64.
    const float t = x * kLog2e + 0.5f;
    int ni = static_cast<int>(t);
    ni -= t < static_cast<float>(ni) ? 1 : 0;
    const float n = static_cast<float>(ni);
    const float r = x - n * kLn2Hi - n * kLn2Lo;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    const float y = p * r * r + r + 1.0f;
    const auto bits = static_cast<std::uint32_t>(ni + 127) << 23;
    return y * std::bit_cast<float>(bits);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const auto g = detail::check_conv(x, weight, bias);
    Tensor out({g.cout, g.h, g.w});
    const auto* in = x.data();
    const auto* wt = weight.data();
    auto* o = out.data();
    const long pad = long(g.k / 2);

#pragma omp parallel for schedule(static)
    for (long co = 0; co < long(g.cout); ++co) {
        float* plane = o + std::size_t(co) * g.h * g.w;
        const float b = bias.empty() ? 0.0f : bias[std::size_t(co)];
        std::fill(plane, plane + g.h * g.w, b);
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
            const float* src = in + ci * g.h * g.w;
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                const long dy = long(ky) - pad;
                const long y0 = std::max(0L, -dy);
                const long y1 = std::min(long(g.h), long(g.h) - dy);
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    const long dx = long(kx) - pad;
                    const long x0 = std::max(0L, -dx);
                    const long x1 = std::min(long(g.w), long(g.w) - dx);
                    const float wv = wt[((std::size_t(co) * g.cin + ci) * g.k + ky) * g.k + kx];
                    for (long yy = y0; yy < y1; ++yy) {
                        float* dst = plane + yy * long(g.w);
                        const float* row = src + (yy + dy) * long(g.w) + dx;
                        for (long xx = x0; xx < x1; ++xx) dst[xx] += wv * row[xx];
                    }
                }
            }
        }
    }
    return out;
}

Tensor group_norm(const Tensor& x, std::size_t groups, float eps) {
    detail::check_group_norm(x, groups);
    const std::size_t c = x.dim(0);
    const std::size_t hw = x.dim(1) * x.dim(2);
    const std::size_t per = c / groups * hw;
    Tensor out(x.shape());

#pragma omp parallel for schedule(static)
    for (long gi = 0; gi < long(groups); ++gi) {
        const float* src = x.data() + std::size_t(gi) * per;
        float* dst = out.data() + std::size_t(gi) * per;
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            sum += src[i];
            sq += double(src[i]) * src[i];
        }
        const double mean = sum / double(per);
        const double var = std::max(0.0, sq / double(per) - mean * mean);
        const float inv = float(1.0 / std::sqrt(var + eps));
        const float m = float(mean);
        for (std::size_t i = 0; i < per; ++i) dst[i] = (src[i] - m) * inv;
    }
    return out;
}

void silu_inplace(Tensor& x) {
    float* d = x.data();
    const long n = long(x.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) d[i] = d[i] / (1.0f + std::exp(-d[i]));
}

void relu_inplace(Tensor& x) {
    float* d = x.data();
    const long n = long(x.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) d[i] = std::max(d[i], 0.0f);
}

Tensor project_tokens(const Tensor& x, const Tensor& weight) {
    detail::check_project(x, weight);
    const std::size_t c = x.dim(0);
    const std::size_t n = x.dim(1) * x.dim(2);
    const std::size_t d = weight.dim(1);
    Tensor out({n, d});
    const float* in = x.data();
    const float* w = weight.data();
    float* o = out.data();

#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(n); ++i) {
        float* row = o + std::size_t(i) * d;
        for (std::size_t ci = 0; ci < c; ++ci) {
            const float xv = in[ci * n + std::size_t(i)];
            const float* wr = w + ci * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += xv * wr[j];
        }
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::check_matmul(a, b);
    const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    Tensor out({n, m});
    const float* pa = a.data();
    const float* pb = b.data();
    float* o = out.data();

#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(n); ++i) {
        float* row = o + std::size_t(i) * m;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const float av = pa[std::size_t(i) * k + kk];
            const float* br = pb + kk * m;
            for (std::size_t j = 0; j < m; ++j) row[j] += av * br[j];
        }
    }
    return out;
}

void add_tokens_inplace(Tensor& x, const Tensor& tokens) {
    if (x.rank() != 3 || tokens.rank() != 2 || tokens.dim(0) != x.dim(1) * x.dim(2) || tokens.dim(1) != x.dim(0)) {
        throw ShapeError("add_tokens: map " + shape_str(x.shape()) + " with tokens " + shape_str(tokens.shape()));
    }
    const std::size_t c = x.dim(0);
    const std::size_t n = tokens.dim(0);
    float* d = x.data();
    const float* t = tokens.data();
#pragma omp parallel for schedule(static)
    for (long ci = 0; ci < long(c); ++ci) {
        float* plane = d + std::size_t(ci) * n;
        for (std::size_t i = 0; i < n; ++i) plane[i] += t[i * c + std::size_t(ci)];
    }
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, float scale, std::size_t heads) {
    detail::check_attention(q, k, v, heads);
    const std::size_t n = q.dim(0), m = k.dim(0), d = q.dim(1), dv = v.dim(1);
    const std::size_t dh = d / heads, dvh = dv / heads;

    // Transposed operands make both inner loops unit-stride over keys.
    std::vector<float> kt(d * m), vt(dv * m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t c = 0; c < d; ++c) kt[c * m + j] = k[j * d + c];
        for (std::size_t c = 0; c < dv; ++c) vt[c * m + j] = v[j * dv + c];
    }

    Tensor out({n, dv});
    const float* pq = q.data();
    float* po = out.data();

#pragma omp parallel
    {
        std::vector<float> logits(m);
#pragma omp for schedule(static)
        for (long i = 0; i < long(n); ++i) {
            for (std::size_t h = 0; h < heads; ++h) {
                std::fill(logits.begin(), logits.end(), 0.0f);
                for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
                    const float qv = pq[std::size_t(i) * d + c] * scale;
                    const float* kr = kt.data() + c * m;
                    for (std::size_t j = 0; j < m; ++j) logits[j] += qv * kr[j];
                }
                float mx = -std::numeric_limits<float>::infinity();
#pragma omp simd reduction(max : mx)
                for (std::size_t j = 0; j < m; ++j) mx = logits[j] > mx ? logits[j] : mx;
                // The normalizer accumulates in double so rows sum to 1 within float rounding.
                double sum = 0.0;
#pragma omp simd reduction(+ : sum)
                for (std::size_t j = 0; j < m; ++j) {
                    logits[j] = exp_nonpositive(logits[j] - mx);
                    sum += logits[j];
                }
                const double inv = 1.0 / sum;
                for (std::size_t c = h * dvh; c < (h + 1) * dvh; ++c) {
                    const float* vr = vt.data() + c * m;
                    float acc = 0.0f;
#pragma omp simd reduction(+ : acc)
                    for (std::size_t j = 0; j < m; ++j) acc += logits[j] * vr[j];
                    po[std::size_t(i) * dv + c] = float(acc * inv);
                }
            }
        }
    }
    return out;
}

Tensor attention_probs(const Tensor& q, const Tensor& k, float scale) {
    if (q.rank() != 2 || k.rank() != 2 || q.dim(1) != k.dim(1)) {
        throw ShapeError("attention_probs: q " + shape_str(q.shape()) + " k " + shape_str(k.shape()));
    }
    const std::size_t n = q.dim(0), m = k.dim(0), d = q.dim(1);
    Tensor out({n, m});
#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(n); ++i) {
        float* row = out.data() + std::size_t(i) * m;
        for (std::size_t j = 0; j < m; ++j) {
            float acc = 0.0f;
            for (std::size_t c = 0; c < d; ++c) acc += q[std::size_t(i) * d + c] * k[j * d + c];
            row[j] = acc * scale;
        }
        const float mx = *std::max_element(row, row + m);
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            row[j] = exp_nonpositive(row[j] - mx);
            sum += row[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < m; ++j) row[j] = float(row[j] * inv);
    }
    return out;
}

Tensor avg_pool2x(const Tensor& x) {
    if (x.rank() != 3 || x.dim(1) % 2 || x.dim(2) % 2) throw ShapeError("avg_pool2x: " + shape_str(x.shape()));
    const std::size_t c = x.dim(0), h = x.dim(1) / 2, w = x.dim(2) / 2;
    Tensor out({c, h, w});
#pragma omp parallel for schedule(static)
    for (long ci = 0; ci < long(c); ++ci) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t xx = 0; xx < w; ++xx) {
                const auto cc = std::size_t(ci);
                out.at(cc, y, xx) = 0.25f * (x.at(cc, 2 * y, 2 * xx) + x.at(cc, 2 * y, 2 * xx + 1) +
                                             x.at(cc, 2 * y + 1, 2 * xx) + x.at(cc, 2 * y + 1, 2 * xx + 1));
            }
        }
    }
    return out;
}

Tensor upsample2x(const Tensor& x) {
    if (x.rank() != 3) throw ShapeError("upsample2x: " + shape_str(x.shape()));
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, 2 * h, 2 * w});
#pragma omp parallel for schedule(static)
    for (long ci = 0; ci < long(c); ++ci) {
        for (std::size_t y = 0; y < 2 * h; ++y) {
            for (std::size_t xx = 0; xx < 2 * w; ++xx) {
                out.at(std::size_t(ci), y, xx) = x.at(std::size_t(ci), y / 2, xx / 2);
            }
        }
    }
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
        throw ShapeError("concat_channels: " + shape_str(a.shape()) + " with " + shape_str(b.shape()));
    }
    std::vector<float> data(a.values());
    data.insert(data.end(), b.values().begin(), b.values().end());
    return Tensor({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(data));
}

}  // namespace stylefuse::kernels
