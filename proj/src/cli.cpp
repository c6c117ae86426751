// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "stylefuse/error.hpp"
#include "stylefuse/job_config.hpp"
#include "stylefuse/metrics.hpp"
#include "stylefuse/pipeline.hpp"
#include "stylefuse/service.hpp"

namespace stylefuse {

namespace fs = std::filesystem;

std::set<int> parse_layer_set(const std::string& text) {
    std::set<int> out;
    std::stringstream in(text);
    std::string part;
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad layer list '" + text + "'");
        }
    };
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        const auto dash = part.find('-');
        if (dash == std::string::npos) {
            out.insert(to_int(part));
            continue;
        }
        const int lo = to_int(part.substr(0, dash)), hi = to_int(part.substr(dash + 1));
        if (lo > hi) throw ConfigError("bad layer range '" + part + "'");
        for (int i = lo; i <= hi; ++i) out.insert(i);
    }
    return out;
}

namespace {

std::string alpha_tag(double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", a);
    return buf;
}

// Flags shared by the commands that run the pipeline. Values given on the
// command line override the JSON config, which overrides the defaults.
struct RunFlags {
    std::string config;
    double alpha = 0.2;
    int steps = 50;
    double cfg_scale = 7.5;
    std::string attn_layers, residual_layers, order;
    std::string prompt, edit_prompt;
    std::uint64_t seed = 0;
    std::string denoiser, codec, text_encoder, style_encoder;
    std::size_t codec_factor = 1;
    bool no_content_attn = false, no_content_residual = false, no_style = false, no_blip_text = false,
         content_kv = false;
    std::map<std::string, CLI::Option*> opts;

    bool given(const std::string& name) const {
        auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_ablation) {
    const InjectionConfig d;
    f.opts["config"] = cmd->add_option("--config", f.config, "JSON job config (schema_version 1)");
    f.opts["alpha"] = cmd->add_option("--alpha", f.alpha, "Deciding-point fraction in [0, 1]")
                          ->default_val(d.alpha)
                          ->check(CLI::Range(0.0, 1.0));
    f.opts["steps"] = cmd->add_option("--steps", f.steps, "DDIM sample steps T")->default_val(d.sample_steps)->check(CLI::PositiveNumber);
    f.opts["cfg"] = cmd->add_option("--cfg-scale", f.cfg_scale, "Classifier-free guidance scale")
                        ->default_val(d.cfg_scale)
                        ->check(CLI::PositiveNumber);
    f.opts["attn"] = cmd->add_option("--attn-layers", f.attn_layers, "Decoder layers for attention injection")
                         ->default_str("4-11");
    f.opts["residual"] = cmd->add_option("--residual-layers", f.residual_layers, "Decoder layers for residual injection")
                             ->default_str("3-8");
    f.opts["order"] = cmd->add_option("--order", f.order, "content_first | style_first")
                          ->check(CLI::IsMember({"content_first", "style_first"}))
                          ->default_str("content_first");
    f.opts["prompt"] = cmd->add_option("--prompt", f.prompt, "Content prompt (default: null text)");
    f.opts["edit"] = cmd->add_option("--edit-prompt", f.edit_prompt, "Replaces the content prompt embedding");
    f.opts["seed"] = cmd->add_option("--seed", f.seed, "Seed for toy weights, codec and encoders")->default_val(0);
    f.opts["denoiser"] = cmd->add_option("--denoiser", f.denoiser, "Denoiser backend")->default_str("toy");
    f.opts["codec"] = cmd->add_option("--codec", f.codec, "identity | toy")->default_str("identity");
    f.opts["codec_factor"] = cmd->add_option("--codec-factor", f.codec_factor, "Toy codec downscale factor")->default_val(1);
    f.opts["text_encoder"] = cmd->add_option("--text-encoder", f.text_encoder, "Text encoder backend")->default_str("stub");
    f.opts["style_encoder"] = cmd->add_option("--style-encoder", f.style_encoder, "Style image encoder backend")->default_str("stub");
    if (with_ablation) {
        f.opts["no_content_attn"] = cmd->add_flag("--no-content-attn", f.no_content_attn, "Disable content Q/K injection");
        f.opts["no_content_residual"] = cmd->add_flag("--no-content-residual", f.no_content_residual, "Disable residual injection");
        f.opts["no_style"] = cmd->add_flag("--no-style", f.no_style, "Disable style K/V injection");
        f.opts["no_blip_text"] = cmd->add_flag("--no-blip-text", f.no_blip_text, "Condition on the content prompt only");
        f.opts["content_kv"] = cmd->add_flag("--content-kv", f.content_kv, "Content module replaces K/V instead of Q/K");
    }
}

RunSettings resolve(const RunFlags& f) {
    RunSettings st;
    if (!f.config.empty()) st = load_settings(f.config, st);
    auto& inj = st.injection;
    if (f.given("alpha")) inj.alpha = f.alpha;
    if (f.given("steps")) inj.sample_steps = f.steps;
    if (f.given("cfg")) inj.cfg_scale = f.cfg_scale;
    if (f.given("attn")) inj.attn_layers = parse_layer_set(f.attn_layers);
    if (f.given("residual")) inj.residual_layers = parse_layer_set(f.residual_layers);
    if (f.given("order")) inj.order = order_from_string(f.order);
    if (f.given("prompt")) st.content_prompt = f.prompt;
    if (f.given("edit")) st.edit_prompt = f.edit_prompt;
    if (f.given("seed")) st.seed = f.seed;
    if (f.given("denoiser")) st.engine.denoiser = f.denoiser;
    if (f.given("codec")) st.engine.codec = f.codec;
    if (f.given("codec_factor")) st.engine.codec_factor = f.codec_factor;
    if (f.given("text_encoder")) st.engine.encoders.text_backend = f.text_encoder;
    if (f.given("style_encoder")) st.engine.encoders.style_backend = f.style_encoder;
    st.engine.unet.latent_channels = st.engine.codec == "toy" ? 3 * st.engine.codec_factor * st.engine.codec_factor : 3;
    if (f.no_content_attn) inj.content_attn = false;
    if (f.no_content_residual) inj.content_residual = false;
    if (f.no_style) inj.style = false;
    if (f.no_blip_text) st.style_text = false;
    if (f.content_kv) inj.content_attn_kind = AttentionOverrideKind::kv;
    return st;
}

// Builds the engine and validates the job, so bad values fail before compute.
TransferJob prepare(const RunSettings& st, const std::string& content_path, const std::string& style_path) {
    TransferJob job = make_job(st, read_png(content_path, ImageRole::content), read_png(style_path, ImageRole::style));
    if (st.edit_prompt && st.edit_prompt->empty()) throw ConfigError("--edit-prompt must be non-empty");
    StyleTransferEngine(st.engine, st.seed).validate(job);
    return job;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string());
    }
}

std::string summary(const TransferTrace& tr) {
    std::ostringstream s;
    s << "T=" << tr.sample_steps << " t_alpha=" << tr.t_alpha << " order=" << to_string(tr.order)
      << " content_steps=" << tr.count(InjectionKind::content) << " style_steps=" << tr.count(InjectionKind::style)
      << " evals: inversion=" << tr.evals.inversion << " capture=" << tr.evals.capture()
      << " target=" << tr.evals.target << " time_ms=" << long(tr.total_millis);
    return s.str();
}

std::string ablation_label(const RunSettings& st) {
    std::string s;
    auto add = [&](bool on, const char* name) {
        if (on) s += (s.empty() ? "" : " ") + std::string(name);
    };
    add(!st.injection.content_attn, "--no-content-attn");
    add(!st.injection.content_residual, "--no-content-residual");
    add(!st.injection.style, "--no-style");
    add(!st.style_text, "--no-blip-text");
    add(st.injection.order == InjectionOrder::style_first, "--order style_first");
    add(st.injection.content_attn_kind == AttentionOverrideKind::kv, "--content-kv");
    return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Training-free diffusion style transfer with separated content/style injection", "stylefuse"};
    app.require_subcommand(1);

    // transfer / ablate
    RunFlags tf, af;
    std::string t_content, t_style, t_out, t_trace, t_banks;
    auto* transfer = app.add_subcommand("transfer", "Stylize a content image with a style image");
    transfer->add_option("--content", t_content, "Content PNG")->required();
    transfer->add_option("--style", t_style, "Style PNG")->required();
    transfer->add_option("--out", t_out, "Output PNG")->required();
    transfer->add_option("--trace", t_trace, "Trace JSON (default: output path with .json)");
    transfer->add_option("--dump-banks", t_banks, "Directory for the captured content/style feature banks");
    add_run_flags(transfer, tf, true);

    std::string a_content, a_style, a_out, a_trace;
    auto* ablate = app.add_subcommand("ablate", "Run a degraded pipeline variant");
    ablate->add_option("--content", a_content, "Content PNG")->required();
    ablate->add_option("--style", a_style, "Style PNG")->required();
    ablate->add_option("--out", a_out, "Output PNG")->required();
    ablate->add_option("--trace", a_trace, "Trace JSON (default: output path with .json)");
    add_run_flags(ablate, af, true);

    RunFlags sf;
    std::string s_content, s_style, s_dir, s_alphas;
    auto* sweep = app.add_subcommand("sweep", "Run one transfer per alpha and write a montage");
    sweep->add_option("--content", s_content, "Content PNG")->required();
    sweep->add_option("--style", s_style, "Style PNG")->required();
    sweep->add_option("--out-dir", s_dir, "Output directory")->required();
    sweep->add_option("--alphas", s_alphas, "Comma-separated alphas")->default_str("0,0.2,0.4,0.6,0.8,1");
    add_run_flags(sweep, sf, true);

    RunFlags inf;
    std::string i_image, i_dir, i_branch = "content";
    int i_hi = -1;
    auto* invert = app.add_subcommand("invert", "Dump the DDIM inversion trajectory of one image");
    invert->add_option("--image", i_image, "Input PNG")->required();
    invert->add_option("--out-dir", i_dir, "Trajectory dump directory")->required();
    invert->add_option("--branch", i_branch, "Branch tag")->check(CLI::IsMember({"content", "style"}));
    invert->add_option("--hi", i_hi, "Highest step to reach (default: T)");
    add_run_flags(invert, inf, false);

    std::vector<std::string> m_generated;
    std::string m_content, m_style, m_csv;
    FeatureExtractorConfig m_fx;
    auto* metrics = app.add_subcommand("metrics", "Content/style/pixel losses as CSV");
    metrics->add_option("--generated", m_generated, "Generated PNGs")->required();
    metrics->add_option("--content", m_content, "Content reference PNG")->required();
    metrics->add_option("--style", m_style, "Style reference PNG")->required();
    metrics->add_option("--csv", m_csv, "CSV path (default: stdout)");
    metrics->add_option("--kernel-size", m_fx.kernel_size, "Extractor kernel size")->default_val(3);
    metrics->add_option("--seed", m_fx.seed, "Extractor seed")->default_val(0);

    RunFlags vf;
    std::string v_host = "127.0.0.1", v_dir = "stylefuse-results";
    int v_port = 8080;
    std::size_t v_workers = 1;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP job API");
    serve_cmd->add_option("--host", v_host, "Bind address")->default_val("127.0.0.1");
    serve_cmd->add_option("--port", v_port, "Port")->default_val(8080)->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--workers", v_workers, "Concurrent jobs")->default_val(1)->check(CLI::Range(1, 64));
    serve_cmd->add_option("--output-dir", v_dir, "Result directory")->default_val("stylefuse-results");
    add_run_flags(serve_cmd, vf, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (transfer->parsed() || ablate->parsed()) {
            const bool is_ablate = ablate->parsed();
            const RunFlags& f = is_ablate ? af : tf;
            const RunSettings st = resolve(f);
            if (is_ablate && ablation_label(st).empty()) {
                err << "ablate: pass at least one of --no-content-attn, --no-content-residual, --no-style, "
                       "--no-blip-text, --order style_first, --content-kv\n";
                return kExitUsage;
            }
            TransferJob job = prepare(st, is_ablate ? a_content : t_content, is_ablate ? a_style : t_style);
            job.keep_banks = !t_banks.empty() && !is_ablate;
            const fs::path out_png = is_ablate ? a_out : t_out;
            fs::path trace = is_ablate ? a_trace : t_trace;
            if (trace.empty()) trace = fs::path(out_png).replace_extension(".json");

            const TransferResult r = run_style_transfer(st.engine, job);
            ensure_parent(out_png);
            write_png(out_png, r.output);
            nlohmann::json doc = r.trace.to_json();
            doc["settings"] = to_json(st);
            ensure_parent(trace);
            write_text(trace, doc.dump(2) + "\n");
            if (job.keep_banks) {
                dump_bank(fs::path(t_banks) / "content", r.content_bank);
                dump_bank(fs::path(t_banks) / "style", r.style_bank);
            }
            if (is_ablate) out << "ablation: " << ablation_label(st) << "\n";
            out << "wrote " << out_png.string() << " " << summary(r.trace) << "\n";
            return kExitOk;
        }

        if (sweep->parsed()) {
            const RunSettings st = resolve(sf);
            std::vector<double> alphas;
            std::stringstream in(s_alphas);
            std::string part;
            while (std::getline(in, part, ',')) {
                try {
                    std::size_t used = 0;
                    alphas.push_back(std::stod(part, &used));
                    if (used != part.size()) throw std::invalid_argument(part);
                } catch (const std::exception&) {
                    throw ConfigError("bad alpha list '" + s_alphas + "'");
                }
            }
            TransferJob job = prepare(st, s_content, s_style);
            for (double a : alphas) {
                TransferJob probe = job;
                probe.config.alpha = a;
                probe.config.validate(StyleTransferEngine(st.engine, st.seed).layers(job.content.height(),
                                                                                   job.content.width()));
            }
            const SweepResult r = sweep_alpha(st.engine, job, alphas);
            fs::create_directories(s_dir);
            std::vector<ImageAsset> tiles;
            nlohmann::json traces = nlohmann::json::array();
            for (std::size_t i = 0; i < r.runs.size(); ++i) {
                write_png(fs::path(s_dir) / ("alpha_" + alpha_tag(r.alphas[i]) + ".png"), r.runs[i].output);
                tiles.push_back(r.runs[i].output);
                traces.push_back(r.runs[i].trace.to_json());
                out << "alpha=" << alpha_tag(r.alphas[i]) << " " << summary(r.runs[i].trace) << "\n";
            }
            write_png(fs::path(s_dir) / "montage.png", montage(tiles));
            write_text(fs::path(s_dir) / "sweep.json",
                       nlohmann::json{{"settings", to_json(st)}, {"runs", traces}}.dump(2) + "\n");
            out << "cache: content_inversions=" << r.cache.content_inversions
                << " style_inversions=" << r.cache.style_inversions << " inversion_evals=" << r.cache.evals << "\n";
            return kExitOk;
        }

        if (invert->parsed()) {
            const RunSettings st = resolve(inf);
            const StyleTransferEngine engine(st.engine, st.seed);
            const Branch branch = branch_from_string(i_branch);
            const ImageAsset img = read_png(i_image, branch == Branch::content ? ImageRole::content : ImageRole::style);
            TransferJob probe = make_job(st, img, img);
            engine.validate(probe);
            const int T = st.injection.sample_steps;
            const int hi = i_hi < 0 ? T : i_hi;
            if (hi > T) throw ConfigError("--hi exceeds the sample steps");
            const NoiseSchedule s = engine.schedule(T);
            const auto null_cond = engine.conditioner().encode_text("").tokens;
            const auto traj = invert_trajectory(engine.codec().encode(img, branch), 0, hi, engine.backend(), null_cond, s);
            dump_trajectory(i_dir, traj, s);
            out << "wrote " << traj.size() << " latents (steps 0.." << hi << ") to " << i_dir << "\n";
            return kExitOk;
        }

        if (metrics->parsed()) {
            const FeatureExtractor fx(m_fx);
            const ImageAsset content = read_png(m_content, ImageRole::content);
            const ImageAsset style = read_png(m_style, ImageRole::style);
            std::vector<MetricsRow> rows;
            for (const auto& g : m_generated) {
                const ImageAsset gen = read_png(g, ImageRole::output);
                const auto t0 = std::chrono::steady_clock::now();
                MetricsRow row;
                row.generated = g;
                row.reference = m_content + "|" + m_style;
                row.content_loss = content_loss(gen, content, fx);
                row.style_loss = style_loss(gen, style, fx);
                row.mse = pixel_mse(gen, content);
                row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                rows.push_back(row);
            }
            if (m_csv.empty()) {
                write_metrics_csv(out, rows);
            } else {
                std::ofstream f(m_csv);
                if (!f) throw IoError("cannot write " + m_csv);
                write_metrics_csv(f, rows);
            }
            return kExitOk;
        }

        if (serve_cmd->parsed()) {
            ServiceConfig cfg;
            cfg.defaults = resolve(vf);
            cfg.output_dir = v_dir;
            cfg.workers = v_workers;
            out << "serving on http://" << v_host << ":" << v_port << std::endl;
            return serve(cfg, v_host, v_port);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CapabilityError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
    return kExitUsage;
}

}  // namespace stylefuse
