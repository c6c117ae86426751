// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stylefuse/job_config.hpp"

namespace httplib {
class Server;
}

namespace stylefuse {

enum class JobState { queued, running, done, failed };

const char* to_string(JobState s);

struct JobRecord {
    std::string id;
    JobState state = JobState::queued;
    int progress = 0;  // target steps finished
    int total = 0;     // T
    nlohmann::json params;
    std::string result_path;  // set once done
    std::string error;        // set once failed

    nlohmann::json to_json() const;
};

struct ServiceConfig {
    std::filesystem::path output_dir = "stylefuse-results";
    std::size_t workers = 1;
    RunSettings defaults;
};

/// In-process job queue with a fixed worker pool. Results are written as
/// <fnv1a-of-png>.png (plus a trace .json) under output_dir.
class JobService {
public:
    explicit JobService(ServiceConfig config);
    ~JobService();

    JobService(const JobService&) = delete;
    JobService& operator=(const JobService&) = delete;

    /// Validates params (overlaid on the defaults) and images, then queues.
    /// Throws ConfigError / CapabilityError / ShapeError on invalid input.
    JobRecord submit(ImageAsset content, ImageAsset style, const nlohmann::json& params);

    /// Snapshot of a record, nullopt for unknown ids.
    std::optional<JobRecord> get(const std::string& id) const;

    /// Blocks until the job is done or failed, or the timeout passes.
    std::optional<JobRecord> wait(const std::string& id, std::chrono::milliseconds timeout) const;

    /// Layer table, defaults and accepted ranges.
    nlohmann::json meta() const;

    /// Registers the HTTP routes on `server`.
    void mount(httplib::Server& server);

    const ServiceConfig& config() const noexcept { return config_; }

private:
    struct Pending {
        std::string id;
        RunSettings settings;
        ImageAsset content;
        ImageAsset style;
    };

    void worker_loop();
    void execute(Pending job);
    void update(const std::string& id, const std::function<void(JobRecord&)>& fn);

    ServiceConfig config_;
    mutable std::mutex mu_;
    mutable std::condition_variable changed_;
    std::condition_variable queued_;
    std::deque<Pending> queue_;
    std::map<std::string, JobRecord> records_;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

/// Blocking HTTP server on host:port.
int serve(const ServiceConfig& config, const std::string& host, int port);

}  // namespace stylefuse
