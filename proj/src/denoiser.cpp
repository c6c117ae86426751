// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/denoiser.hpp"

#include <cmath>
#include <functional>

#include "stylefuse/error.hpp"
#include "stylefuse/kernels.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {

const char* to_string(LayerSide side) {
    switch (side) {
        case LayerSide::encoder: return "encoder";
        case LayerSide::mid: return "mid";
        case LayerSide::decoder: return "decoder";
    }
    return "?";
}

std::string to_string(const LayerKey& key) { return std::string(to_string(key.side)) + ":" + std::to_string(key.index); }

const char* to_string(AttentionOverrideKind kind) { return kind == AttentionOverrideKind::qk ? "qk" : "kv"; }

bool InjectionDirective::empty() const {
    for (const auto& [_, d] : layers) {
        if (!d.empty()) return false;
    }
    return true;
}

bool InjectionDirective::has_residual() const {
    for (const auto& [_, d] : layers) {
        if (d.residual_replace) return true;
    }
    return false;
}

bool InjectionDirective::has_attention(AttentionOverrideKind kind) const {
    for (const auto& [_, d] : layers) {
        if (d.attention && d.attention->kind == kind) return true;
    }
    return false;
}

std::vector<LayerDescriptor> list_layers(const Denoiser& backend, std::size_t h, std::size_t w) {
    return backend.layers(h, w);
}

namespace {

struct KernelSet {
    std::function<Tensor(const Tensor&, const Tensor&, const Tensor&)> conv2d;
    std::function<Tensor(const Tensor&, std::size_t, float)> group_norm;
    std::function<Tensor(const Tensor&, const Tensor&)> project_tokens;
    std::function<Tensor(const Tensor&, const Tensor&)> matmul;
    std::function<Tensor(const Tensor&, const Tensor&, const Tensor&, float, std::size_t)> attention;
};

const KernelSet& kernel_set(bool reference) {
    static const KernelSet parallel{kernels::conv2d, kernels::group_norm, kernels::project_tokens, kernels::matmul,
                                    kernels::attention};
    static const KernelSet serial{kernels::reference::conv2d, kernels::reference::group_norm,
                                  kernels::reference::project_tokens, kernels::reference::matmul,
                                  kernels::reference::attention};
    return reference ? serial : parallel;
}

Tensor tokens_to_map(const Tensor& tokens, std::size_t h, std::size_t w) {
    const std::size_t n = tokens.dim(0), c = tokens.dim(1);
    Tensor out({c, h, w});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ci = 0; ci < c; ++ci) out[ci * n + i] = tokens[i * c + ci];
    return out;
}

// (C, H, W) -> (C*f*f, H/f, W/f); channel index is (c*f + dy)*f + dx.
Tensor space_to_depth(const Tensor& x, std::size_t f) {
    if (f == 1) return x;
    const std::size_t c = x.dim(0), h = x.dim(1) / f, w = x.dim(2) / f;
    Tensor out({c * f * f, h, w});
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t dy = 0; dy < f; ++dy)
            for (std::size_t dx = 0; dx < f; ++dx)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx)
                        out.at((ci * f + dy) * f + dx, y, xx) = x.at(ci, y * f + dy, xx * f + dx);
    return out;
}

Tensor depth_to_space(const Tensor& x, std::size_t f) {
    if (f == 1) return x;
    const std::size_t c = x.dim(0) / (f * f), h = x.dim(1), w = x.dim(2);
    Tensor out({c, h * f, w * f});
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t dy = 0; dy < f; ++dy)
            for (std::size_t dx = 0; dx < f; ++dx)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx)
                        out.at(ci, y * f + dy, xx * f + dx) = x.at((ci * f + dy) * f + dx, y, xx);
    return out;
}

void check_operand(const Tensor& operand, const Tensor& local, const char* which) {
    if (!operand.same_shape(local)) {
        throw ShapeError(std::string("attention override ") + which + " has shape " + shape_str(operand.shape()) +
                         ", layer expects " + shape_str(local.shape()));
    }
}

}  // namespace

SelfAttentionResult self_attention(const Tensor& phi, const AttentionWeights& weights,
                                   const AttentionOverride* override_ops, bool reference_kernels) {
    if (phi.rank() != 3) throw ShapeError("self_attention input must be (C, H, W), got " + shape_str(phi.shape()));
    const auto& k = kernel_set(reference_kernels);
    SelfAttentionResult r;
    r.q = k.project_tokens(phi, weights.wq);
    r.k = k.project_tokens(phi, weights.wk);
    r.v = k.project_tokens(phi, weights.wv);
    const Tensor* q = &r.q;
    const Tensor* kk = &r.k;
    const Tensor* v = &r.v;
    if (override_ops) {
        if (override_ops->kind == AttentionOverrideKind::qk) {
            check_operand(override_ops->first, r.q, "Q");
            check_operand(override_ops->second, r.k, "K");
            q = &override_ops->first;
            kk = &override_ops->second;
        } else {
            check_operand(override_ops->first, r.k, "K");
            check_operand(override_ops->second, r.v, "V");
            kk = &override_ops->first;
            v = &override_ops->second;
        }
    }
    r.used_q = *q;
    r.used_k = *kk;
    r.used_v = *v;
    const std::size_t head_dim = r.q.dim(1) / weights.heads;
    r.out = k.attention(r.used_q, r.used_k, r.used_v, float(1.0 / std::sqrt(double(head_dim))), weights.heads);
    return r;
}

// ---------------------------------------------------------------------------
// Toy U-Net

namespace {

struct LayerParams {
    LayerKey key;
    std::size_t stage = 0;  // resolution level: 0 full, 1 half, 2 quarter
    std::size_t cin = 0, cout = 0;
    Tensor conv1_w, conv1_b, temb_w, temb_b, conv2_w, conv2_b, skip_w;
    AttentionWeights self;
    Tensor self_wo;
    Tensor cross_wq, cross_wk, cross_wv, cross_wo;
};

}  // namespace

struct ToyUNet::Weights {
    Tensor conv_in_w, conv_in_b;
    Tensor time_w1, time_b1, time_w2, time_b2;
    Tensor conv_out_w, conv_out_b;
    std::vector<LayerParams> encoder;
    LayerParams mid;
    std::vector<LayerParams> decoder;

    template <typename F>
    void visit(F&& f) {
        f("conv_in.w", conv_in_w);
        f("conv_in.b", conv_in_b);
        f("time.w1", time_w1);
        f("time.b1", time_b1);
        f("time.w2", time_w2);
        f("time.b2", time_b2);
        f("conv_out.w", conv_out_w);
        f("conv_out.b", conv_out_b);
        auto layer = [&](const std::string& p, LayerParams& l) {
            f(p + ".conv1.w", l.conv1_w);
            f(p + ".conv1.b", l.conv1_b);
            f(p + ".temb.w", l.temb_w);
            f(p + ".temb.b", l.temb_b);
            f(p + ".conv2.w", l.conv2_w);
            f(p + ".conv2.b", l.conv2_b);
            if (l.cin != l.cout) f(p + ".skip.w", l.skip_w);
            f(p + ".self.wq", l.self.wq);
            f(p + ".self.wk", l.self.wk);
            f(p + ".self.wv", l.self.wv);
            f(p + ".self.wo", l.self_wo);
            f(p + ".cross.wq", l.cross_wq);
            f(p + ".cross.wk", l.cross_wk);
            f(p + ".cross.wv", l.cross_wv);
            f(p + ".cross.wo", l.cross_wo);
        };
        for (std::size_t i = 0; i < encoder.size(); ++i) layer("enc" + std::to_string(i), encoder[i]);
        layer("mid", mid);
        for (std::size_t i = 0; i < decoder.size(); ++i) layer("dec" + std::to_string(i), decoder[i]);
    }
};

namespace {

void validate_config(const ToyUNetConfig& c) {
    if (c.latent_channels == 0 || c.embedding_dim == 0 || c.time_dim == 0 || c.time_dim % 2) {
        throw ConfigError("toy U-Net needs positive latent/embedding dims and an even time_dim");
    }
    for (auto ch : c.channels) {
        if (ch == 0 || c.groups == 0 || ch % c.groups || c.heads == 0 || ch % c.heads) {
            throw ConfigError("toy U-Net channels must be divisible by groups and heads");
        }
    }
    if (!(c.prior_variance >= 0.0)) throw ConfigError("toy U-Net prior_variance must be >= 0");
    if (c.stem_factor == 0) throw ConfigError("toy U-Net stem_factor must be positive");
    if (c.decoder_ids.size() != 9) throw ConfigError("toy U-Net decoder_ids must list 9 layer ids");
    for (std::size_t i = 1; i < c.decoder_ids.size(); ++i) {
        if (c.decoder_ids[i] <= c.decoder_ids[i - 1]) throw ConfigError("decoder_ids must be strictly increasing");
    }
}

LayerParams make_layer(SeededRng& rng, const ToyUNetConfig& c, LayerKey key, std::size_t stage, std::size_t cin,
                       std::size_t cout) {
    LayerParams p;
    p.key = key;
    p.stage = stage;
    p.cin = cin;
    p.cout = cout;
    const double conv1_std = 1.0 / std::sqrt(double(cin * 9));
    const double conv2_std = 1.0 / std::sqrt(double(cout * 9));
    const double lin_std = 1.0 / std::sqrt(double(cout));
    p.conv1_w = rng.normal_tensor({cout, cin, 3, 3}, conv1_std);
    p.conv1_b = Tensor({cout});
    p.temb_w = rng.normal_tensor({c.time_dim, cout}, 1.0 / std::sqrt(double(c.time_dim)));
    p.temb_b = Tensor({cout});
    p.conv2_w = rng.normal_tensor({cout, cout, 3, 3}, conv2_std);
    p.conv2_b = Tensor({cout});
    if (cin != cout) p.skip_w = rng.normal_tensor({cout, cin, 1, 1}, 1.0 / std::sqrt(double(cin)));
    p.self.heads = c.heads;
    p.self.wq = rng.normal_tensor({cout, cout}, lin_std);
    p.self.wk = rng.normal_tensor({cout, cout}, lin_std);
    p.self.wv = rng.normal_tensor({cout, cout}, lin_std);
    p.self_wo = rng.normal_tensor({cout, cout}, lin_std);
    p.cross_wq = rng.normal_tensor({cout, cout}, lin_std);
    p.cross_wk = rng.normal_tensor({c.embedding_dim, cout}, 1.0 / std::sqrt(double(c.embedding_dim)));
    p.cross_wv = rng.normal_tensor({c.embedding_dim, cout}, 1.0 / std::sqrt(double(c.embedding_dim)));
    p.cross_wo = rng.normal_tensor({cout, cout}, lin_std * c.cross_attn_gain);
    return p;
}

Tensor timestep_embedding(int t, std::size_t dim) {
    Tensor e({1, dim});
    const std::size_t half = dim / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
        e[i] = float(std::sin(double(t) * freq));
        e[half + i] = float(std::cos(double(t) * freq));
    }
    return e;
}

void add_bias(Tensor& row, const Tensor& bias) {
    for (std::size_t i = 0; i < bias.size(); ++i) row[i] += bias[i];
}

struct LayerContext {
    const KernelSet& k;
    const Tensor& temb;  // (1, time_dim), already activated
    const Tensor& cond;  // (tokens, embedding_dim)
    std::size_t groups;
    bool reference;
};

Tensor run_layer(const LayerParams& p, const Tensor& x, const LayerContext& ctx, const LayerDirective* dir,
                 LayerInternals* cap) {
    const std::size_t h = x.dim(1), w = x.dim(2);

    // Residual block: phi = shortcut(x) + delta_phi.
    Tensor a = ctx.k.group_norm(x, ctx.groups, 1e-5f);
    kernels::silu_inplace(a);
    a = ctx.k.conv2d(a, p.conv1_w, p.conv1_b);
    Tensor tb = ctx.k.matmul(ctx.temb, p.temb_w);
    add_bias(tb, p.temb_b);
    for (std::size_t c = 0; c < p.cout; ++c) {
        float* plane = a.data() + c * h * w;
        for (std::size_t i = 0; i < h * w; ++i) plane[i] += tb[c];
    }
    a = ctx.k.group_norm(a, ctx.groups, 1e-5f);
    kernels::silu_inplace(a);
    Tensor delta = ctx.k.conv2d(a, p.conv2_w, p.conv2_b);

    Tensor phi = p.cin == p.cout ? x : ctx.k.conv2d(x, p.skip_w, Tensor());
    if (cap) cap->residual = delta;
    phi += (dir && dir->residual_replace) ? *dir->residual_replace : delta;

    // Self-attention.
    const Tensor normed = ctx.k.group_norm(phi, ctx.groups, 1e-5f);
    const AttentionOverride* ovr = (dir && dir->attention) ? &*dir->attention : nullptr;
    SelfAttentionResult sa = self_attention(normed, p.self, ovr, ctx.reference);
    Tensor hidden = phi;
    kernels::add_tokens_inplace(hidden, ctx.k.matmul(sa.out, p.self_wo));
    if (cap) {
        cap->attn_in = std::move(phi);
        cap->attn_out = tokens_to_map(sa.out, h, w);
        cap->q = std::move(sa.q);
        cap->k = std::move(sa.k);
        cap->v = std::move(sa.v);
        cap->used_q = std::move(sa.used_q);
        cap->used_k = std::move(sa.used_k);
        cap->used_v = std::move(sa.used_v);
    }

    // Cross-attention on the conditioning tokens.
    const Tensor n2 = ctx.k.group_norm(hidden, ctx.groups, 1e-5f);
    const Tensor q2 = ctx.k.project_tokens(n2, p.cross_wq);
    const Tensor k2 = ctx.k.matmul(ctx.cond, p.cross_wk);
    const Tensor v2 = ctx.k.matmul(ctx.cond, p.cross_wv);
    const std::size_t head_dim = p.cout / p.self.heads;
    const Tensor o2 = ctx.k.attention(q2, k2, v2, float(1.0 / std::sqrt(double(head_dim))), p.self.heads);
    kernels::add_tokens_inplace(hidden, ctx.k.matmul(o2, p.cross_wo));
    return hidden;
}

}  // namespace

ToyUNet::ToyUNet(ToyUNetConfig config) : config_(std::move(config)), weights_(std::make_unique<Weights>()) {
    validate_config(config_);
    SeededRng rng(derive_seed(config_.seed, "toy-unet"));
    auto& wt = *weights_;
    const auto& ch = config_.channels;
    const std::size_t stem_channels = config_.latent_channels * config_.stem_factor * config_.stem_factor;
    wt.conv_in_w = rng.normal_tensor({ch[0], stem_channels, 3, 3}, 1.0 / std::sqrt(double(stem_channels * 9)));
    wt.conv_in_b = Tensor({ch[0]});
    const double tstd = 1.0 / std::sqrt(double(config_.time_dim));
    wt.time_w1 = rng.normal_tensor({config_.time_dim, config_.time_dim}, tstd);
    wt.time_b1 = Tensor({config_.time_dim});
    wt.time_w2 = rng.normal_tensor({config_.time_dim, config_.time_dim}, tstd);
    wt.time_b2 = Tensor({config_.time_dim});

    std::vector<std::size_t> skips{ch[0]};
    std::size_t current = ch[0];
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t b = 0; b < 2; ++b) {
            wt.encoder.push_back(
                make_layer(rng, config_, {LayerSide::encoder, int(2 * s + b)}, s, current, ch[s]));
            current = ch[s];
            skips.push_back(current);
        }
        if (s < 2) skips.push_back(current);
    }
    wt.mid = make_layer(rng, config_, {LayerSide::mid, 0}, 2, current, current);
    std::size_t block = 0;
    for (std::size_t s = 3; s-- > 0;) {
        for (std::size_t b = 0; b < 3; ++b, ++block) {
            const std::size_t skip = skips.back();
            skips.pop_back();
            wt.decoder.push_back(make_layer(rng, config_, {LayerSide::decoder, config_.decoder_ids[block]}, s,
                                            current + skip, ch[s]));
            current = ch[s];
        }
    }
    wt.conv_out_w = rng.normal_tensor({stem_channels, ch[0], 3, 3}, config_.output_gain / std::sqrt(double(ch[0] * 9)));
    wt.conv_out_b = Tensor({stem_channels});
}

ToyUNet::~ToyUNet() = default;
ToyUNet::ToyUNet(ToyUNet&&) noexcept = default;

std::vector<LayerDescriptor> ToyUNet::layers(std::size_t h, std::size_t w) const {
    std::vector<LayerDescriptor> out;
    auto describe = [&](const LayerParams& p) {
        LayerDescriptor d;
        d.key = p.key;
        d.channels = p.cout;
        d.height = (h / config_.stem_factor) >> p.stage;
        d.width = (w / config_.stem_factor) >> p.stage;
        d.has_self_attn = true;
        d.has_residual = true;
        d.injectable = p.key.side == LayerSide::decoder;
        out.push_back(d);
    };
    for (const auto& p : weights_->encoder) describe(p);
    describe(weights_->mid);
    for (const auto& p : weights_->decoder) describe(p);
    return out;
}

NoisePrediction ToyUNet::predict_noise(const Tensor& z, const StepTime& t, const Tensor& cond,
                                       const InjectionDirective& directive, bool capture) const {
    const std::size_t multiple = 4 * config_.stem_factor;
    if (z.rank() != 3 || z.dim(0) != config_.latent_channels || z.dim(1) % multiple || z.dim(2) % multiple ||
        z.dim(1) == 0 || z.dim(2) == 0) {
        throw ShapeError("toy U-Net latent must be (" + std::to_string(config_.latent_channels) +
                         ", H, W) with H, W multiples of " + std::to_string(multiple) + "; got " +
                         shape_str(z.shape()));
    }
    if (cond.rank() != 2 || cond.dim(1) != config_.embedding_dim || cond.dim(0) == 0) {
        throw ShapeError("conditioning must be (tokens, " + std::to_string(config_.embedding_dim) + "), got " +
                         shape_str(cond.shape()));
    }

    // Validate every directive against the layer table before computing anything.
    const auto table = layers(z.dim(1), z.dim(2));
    for (const auto& [key, d] : directive.layers) {
        const auto where = "layer " + to_string(key) + " at step " + std::to_string(directive.step);
        auto it = std::find_if(table.begin(), table.end(), [&](const LayerDescriptor& l) { return l.key == key; });
        if (it == table.end()) throw InjectionError(where + ": no such layer");
        if (!it->injectable && !d.empty()) throw InjectionError(where + ": layer does not accept injection");
        const Shape map_shape{it->channels, it->height, it->width};
        const Shape tok_shape{it->height * it->width, it->channels};
        if (d.residual_replace && d.residual_replace->shape() != map_shape) {
            throw InjectionError(where + ": residual replacement " + shape_str(d.residual_replace->shape()) +
                                 ", expected " + shape_str(map_shape));
        }
        if (d.attention && (d.attention->first.shape() != tok_shape || d.attention->second.shape() != tok_shape)) {
            throw InjectionError(where + ": " + to_string(d.attention->kind) + " operands " +
                                 shape_str(d.attention->first.shape()) + "/" +
                                 shape_str(d.attention->second.shape()) + ", expected " + shape_str(tok_shape));
        }
    }

    const auto& k = kernel_set(config_.reference_kernels);
    const auto& wt = *weights_;

    Tensor temb = k.matmul(timestep_embedding(t.train_timestep, config_.time_dim), wt.time_w1);
    add_bias(temb, wt.time_b1);
    kernels::silu_inplace(temb);
    temb = k.matmul(temb, wt.time_w2);
    add_bias(temb, wt.time_b2);
    kernels::silu_inplace(temb);

    const LayerContext ctx{k, temb, cond, config_.groups, config_.reference_kernels};
    NoisePrediction result;
    auto step = [&](const LayerParams& p, const Tensor& x, const std::vector<LayerDescriptor>::const_iterator& desc) {
        auto dit = directive.layers.find(p.key);
        const LayerDirective* dir = dit == directive.layers.end() ? nullptr : &dit->second;
        LayerInternals* cap = nullptr;
        if (capture) {
            cap = &result.internals[p.key];
            cap->layer = *desc;
        }
        return run_layer(p, x, ctx, dir, cap);
    };

    auto desc = table.cbegin();
    Tensor hcur = k.conv2d(space_to_depth(z, config_.stem_factor), wt.conv_in_w, wt.conv_in_b);
    std::vector<Tensor> skips{hcur};
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t b = 0; b < 2; ++b) {
            hcur = step(wt.encoder[2 * s + b], hcur, desc++);
            skips.push_back(hcur);
        }
        if (s < 2) {
            hcur = kernels::avg_pool2x(hcur);
            skips.push_back(hcur);
        }
    }
    hcur = step(wt.mid, hcur, desc++);
    for (std::size_t i = 0; i < wt.decoder.size(); ++i) {
        hcur = kernels::concat_channels(hcur, skips.back());
        skips.pop_back();
        hcur = step(wt.decoder[i], hcur, desc++);
        if (i % 3 == 2 && i + 1 < wt.decoder.size()) hcur = kernels::upsample2x(hcur);
    }
    Tensor out = k.group_norm(hcur, config_.groups, 1e-5f);
    kernels::silu_inplace(out);
    result.eps = depth_to_space(k.conv2d(out, wt.conv_out_w, wt.conv_out_b), config_.stem_factor);
    if (config_.prior_variance > 0.0) {
        const double a = t.alpha_bar;
        const double gain = std::sqrt(1.0 - a) / (a * config_.prior_variance + 1.0 - a);
        for (std::size_t i = 0; i < z.size(); ++i) result.eps[i] += float(gain * z[i]);
    }
    return result;
}

void ToyUNet::save(const std::filesystem::path& dir) const {
    TensorDir out;
    const auto& c = config_;
    out.meta = {{"kind", "toy-unet-weights"},
                {"latent_channels", c.latent_channels},
                {"embedding_dim", c.embedding_dim},
                {"channels", c.channels},
                {"groups", c.groups},
                {"heads", c.heads},
                {"time_dim", c.time_dim},
                {"stem_factor", c.stem_factor},
                {"prior_variance", c.prior_variance},
                {"output_gain", c.output_gain},
                {"cross_attn_gain", c.cross_attn_gain},
                {"seed", c.seed},
                {"decoder_ids", c.decoder_ids}};
    weights_->visit([&](const std::string& name, Tensor& t) { out.tensors.emplace(name, t); });
    write_tensor_dir(dir, out);
}

ToyUNet ToyUNet::load(const std::filesystem::path& dir) {
    auto in = read_tensor_dir(dir);
    if (in.meta.value("kind", "") != "toy-unet-weights") throw IoError(dir.string() + " is not a toy U-Net dump");
    ToyUNetConfig c;
    c.latent_channels = in.meta.at("latent_channels");
    c.embedding_dim = in.meta.at("embedding_dim");
    c.channels = in.meta.at("channels").get<std::array<std::size_t, 3>>();
    c.groups = in.meta.at("groups");
    c.heads = in.meta.at("heads");
    c.time_dim = in.meta.at("time_dim");
    c.stem_factor = in.meta.at("stem_factor");
    c.prior_variance = in.meta.at("prior_variance");
    c.output_gain = in.meta.at("output_gain");
    c.cross_attn_gain = in.meta.at("cross_attn_gain");
    c.seed = in.meta.at("seed");
    c.decoder_ids = in.meta.at("decoder_ids").get<std::vector<int>>();
    ToyUNet net(c);
    net.weights_->visit([&](const std::string& name, Tensor& t) {
        auto it = in.tensors.find(name);
        if (it == in.tensors.end()) throw IoError("weight dump lacks " + name);
        if (!it->second.same_shape(t)) throw IoError("weight " + name + " has shape " + shape_str(it->second.shape()));
        t = it->second;
    });
    return net;
}

std::unique_ptr<Denoiser> make_denoiser(const std::string& name, const ToyUNetConfig& config) {
    if (name == "toy") return std::make_unique<ToyUNet>(config);
    throw CapabilityError("denoiser backend '" + name + "' is not available in this build (available: toy)");
}

NoisePrediction CountingDenoiser::predict_noise(const Tensor& z, const StepTime& t, const Tensor& cond,
                                                const InjectionDirective& directive, bool capture) const {
    ++calls_;
    return inner_.predict_noise(z, t, cond, directive, capture);
}

}  // namespace stylefuse
