// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "stylefuse/service.hpp"

#include <httplib.h>

#include <fstream>
#include <iterator>

#include "stylefuse/error.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {

const char* to_string(JobState s) {
    switch (s) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
    }
    return "?";
}

nlohmann::json JobRecord::to_json() const {
    nlohmann::json j = {{"id", id},
                        {"state", stylefuse::to_string(state)},
                        {"progress", progress},
                        {"total", total},
                        {"params", params}};
    if (!result_path.empty()) j["result_path"] = result_path;
    if (!error.empty()) j["error"] = error;
    return j;
}

JobService::JobService(ServiceConfig config) : config_(std::move(config)) {
    if (config_.workers == 0) throw ConfigError("service needs at least one worker");
    std::error_code ec;
    std::filesystem::create_directories(config_.output_dir, ec);
    if (ec) throw IoError("cannot create " + config_.output_dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobService::~JobService() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    queued_.notify_all();
    for (auto& w : workers_) w.join();
}

JobRecord JobService::submit(ImageAsset content, ImageAsset style, const nlohmann::json& params) {
    RunSettings settings = config_.defaults;
    if (!params.is_null()) apply_json(settings, params);
    // Building the engine checks backend names; validate() checks sizes and layers.
    const StyleTransferEngine engine(settings.engine, settings.seed);
    TransferJob probe = make_job(settings, content, style);
    engine.validate(probe);
    if (settings.edit_prompt && settings.edit_prompt->empty()) throw ConfigError("edit_prompt must be non-empty");

    std::lock_guard lock(mu_);
    JobRecord rec;
    rec.id = "job-" + hex64(fnv1a(std::to_string(next_id_++), 0x9e3779b97f4a7c15ULL)).substr(0, 12);
    rec.total = settings.injection.sample_steps;
    rec.params = to_json(settings);
    records_[rec.id] = rec;
    queue_.push_back(Pending{rec.id, std::move(settings), std::move(content), std::move(style)});
    queued_.notify_one();
    return rec;
}

std::optional<JobRecord> JobService::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::optional<JobRecord> JobService::wait(const std::string& id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    auto finished = [&] {
        auto it = records_.find(id);
        return it == records_.end() || it->second.state == JobState::done || it->second.state == JobState::failed;
    };
    changed_.wait_for(lock, timeout, finished);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void JobService::update(const std::string& id, const std::function<void(JobRecord&)>& fn) {
    {
        std::lock_guard lock(mu_);
        fn(records_.at(id));
    }
    changed_.notify_all();
}

void JobService::worker_loop() {
    for (;;) {
        Pending job;
        {
            std::unique_lock lock(mu_);
            queued_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            job = std::move(queue_.front());
            queue_.pop_front();
        }
        execute(std::move(job));
    }
}

void JobService::execute(Pending job) {
    const std::string id = job.id;
    update(id, [](JobRecord& r) { r.state = JobState::running; });
    try {
        TransferJob tj = make_job(job.settings, std::move(job.content), std::move(job.style));
        auto progress = [&](int done, int) {
            update(id, [done](JobRecord& r) { r.progress = std::max(r.progress, done); });
        };
        const TransferResult result = run_style_transfer(job.settings.engine, tj, progress);
        const auto png = encode_png(result.output);
        const std::string digest = hex64(fnv1a(std::string_view(reinterpret_cast<const char*>(png.data()), png.size())));
        const auto path = config_.output_dir / (digest + ".png");
        if (!std::filesystem::exists(path)) {
            const auto tmp = config_.output_dir / (digest + "." + id + ".tmp");
            {
                std::ofstream out(tmp, std::ios::binary);
                out.write(reinterpret_cast<const char*>(png.data()), std::streamsize(png.size()));
                if (!out) throw IoError("cannot write " + tmp.string());
            }
            std::filesystem::rename(tmp, path);
        }
        std::ofstream(config_.output_dir / (digest + ".json")) << result.trace.to_json().dump(2) << '\n';
        update(id, [&](JobRecord& r) {
            r.progress = r.total;
            r.result_path = path.string();
            r.state = JobState::done;
        });
    } catch (const std::exception& e) {
        update(id, [&](JobRecord& r) {
            r.error = e.what();
            r.state = JobState::failed;
        });
    }
}

nlohmann::json JobService::meta() const {
    const auto& d = config_.defaults;
    const StyleTransferEngine engine(d.engine, d.seed);
    const std::size_t ref = 64;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : engine.layers(ref, ref)) {
        layers.push_back({{"side", to_string(l.key.side)},
                          {"index", l.key.index},
                          {"channels", l.channels},
                          {"height", l.height},
                          {"width", l.width},
                          {"injectable", l.injectable}});
    }
    std::vector<int> decoder_ids;
    for (const auto& l : engine.layers(ref, ref))
        if (l.injectable) decoder_ids.push_back(l.key.index);
    return {{"backend", engine.backend().name()},
            {"codec", engine.codec().name()},
            {"schema_version", kJobSchemaVersion},
            {"reference_size", ref},
            {"size_multiple", engine.codec().downscale_factor() * engine.backend().spatial_multiple()},
            {"layers", layers},
            {"defaults",
             {{"alpha", d.injection.alpha},
              {"steps", d.injection.sample_steps},
              {"cfg_scale", d.injection.cfg_scale},
              {"attn_layers", d.injection.attn_layers},
              {"residual_layers", d.injection.residual_layers},
              {"order", to_string(d.injection.order)}}},
            {"ranges",
             {{"alpha", {0.0, 1.0}},
              {"steps", {1, d.engine.train_steps}},
              {"layer_ids", decoder_ids},
              {"order", {"content_first", "style_first"}}}}};
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

}  // namespace

void JobService::mount(httplib::Server& server) {
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    server.Get("/meta", [this](const httplib::Request&, httplib::Response& res) { send_json(res, 200, meta()); });

    server.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.is_multipart_form_data() || !req.has_file("content") || !req.has_file("style")) {
            send_error(res, 422, "multipart fields 'content' and 'style' (PNG) are required");
            return;
        }
        try {
            auto read = [&](const char* field, ImageRole role) {
                const auto& raw = req.get_file_value(field).content;
                return decode_png(std::vector<std::uint8_t>(raw.begin(), raw.end()), role);
            };
            ImageAsset content = read("content", ImageRole::content);
            ImageAsset style = read("style", ImageRole::style);
            nlohmann::json params;
            if (req.has_file("params")) {
                const auto& text = req.get_file_value("params").content;
                if (!text.empty()) params = nlohmann::json::parse(text);
            }
            send_json(res, 202, submit(std::move(content), std::move(style), params).to_json());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 422, std::string("params are not valid JSON: ") + e.what());
        } catch (const Error& e) {
            send_error(res, 422, e.what());
        }
    });

    server.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto rec = get(req.matches[1]);
        if (!rec) return send_error(res, 404, "unknown job");
        send_json(res, 200, rec->to_json());
    });

    server.Get(R"(/jobs/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto rec = get(req.matches[1]);
        if (!rec) return send_error(res, 404, "unknown job");
        if (rec->state != JobState::done) {
            return send_error(res, 409, std::string("job is ") + to_string(rec->state));
        }
        std::ifstream in(rec->result_path, std::ios::binary);
        if (!in) return send_error(res, 500, "result file missing");
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        res.status = 200;
        res.set_content(std::move(bytes), "image/png");
    });
}

int serve(const ServiceConfig& config, const std::string& host, int port) {
    JobService service(config);
    httplib::Server server;
    service.mount(server);
    if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
    return 0;
}

}  // namespace stylefuse
