// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "fixtures.hpp"
#include "stylefuse/error.hpp"
#include "stylefuse/service.hpp"
#include "stylefuse/tensor_io.hpp"

namespace stylefuse {
namespace {

using nlohmann::json;
using testing::content_image;
using testing::style_image;

std::string png_string(const ImageAsset& img) {
    const auto bytes = encode_png(img);
    return std::string(bytes.begin(), bytes.end());
}

// What the server sees after the upload: 8-bit quantized pixels.
ImageAsset uploaded(const ImageAsset& img) { return decode_png(encode_png(img), img.role); }

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override { start(1); }

    void start(std::size_t workers) {
        stop();
        ServiceConfig cfg;
        cfg.output_dir = dir_.path() / ("results-" + std::to_string(workers));
        cfg.workers = workers;
        cfg.defaults.injection.sample_steps = 4;
        service_ = std::make_unique<JobService>(cfg);
        server_ = std::make_unique<httplib::Server>();
        service_->mount(*server_);
        port_ = server_->bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_->listen_after_bind(); });
        server_->wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
        client_->set_read_timeout(30, 0);
    }

    void stop() {
        if (server_) server_->stop();
        if (thread_.joinable()) thread_.join();
        client_.reset();
        server_.reset();
        service_.reset();
    }

    void TearDown() override { stop(); }

    httplib::Result post_job(const std::string& params, std::size_t size = 16, std::uint64_t content_seed = 1) {
        httplib::MultipartFormDataItems items = {
            {"content", png_string(content_image(size, size, content_seed)), "c.png", "image/png"},
            {"style", png_string(style_image(size, size)), "s.png", "image/png"},
        };
        if (!params.empty()) items.push_back({"params", params, "", "application/json"});
        return client_->Post("/jobs", items);
    }

    json wait_done(const std::string& id) {
        const auto rec = service_->wait(id, std::chrono::seconds(60));
        EXPECT_TRUE(rec.has_value());
        auto res = client_->Get("/jobs/" + id);
        EXPECT_EQ(res->status, 200);
        return json::parse(res->body);
    }

    testing::TempDir dir_{"service"};
    std::unique_ptr<JobService> service_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<httplib::Client> client_;
    std::thread thread_;
    int port_ = 0;
};

TEST_F(ServiceTest, Health) {
    auto res = client_->Get("/health");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["status"], "ok");
}

TEST_F(ServiceTest, MetaAdvertisesLayersAndDefaults) {
    auto res = client_->Get("/meta");
    ASSERT_EQ(res->status, 200);
    const auto meta = json::parse(res->body);
    EXPECT_EQ(meta["schema_version"], kJobSchemaVersion);
    EXPECT_EQ(meta["defaults"]["alpha"], 0.2);
    EXPECT_EQ(meta["defaults"]["attn_layers"], json({4, 5, 6, 7, 8, 9, 10, 11}));
    EXPECT_EQ(meta["defaults"]["residual_layers"], json({3, 4, 5, 6, 7, 8}));
    EXPECT_EQ(meta["ranges"]["layer_ids"], json({3, 4, 5, 6, 7, 8, 9, 10, 11}));
    EXPECT_EQ(meta["size_multiple"], 8);
    EXPECT_EQ(meta["layers"].size(), 16u);
}

TEST_F(ServiceTest, JobLifecycle) {
    auto res = post_job(R"({"seed": 3})");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 202) << res->body;
    const auto rec = json::parse(res->body);
    const std::string id = rec["id"];
    EXPECT_EQ(id.rfind("job-", 0), 0u);
    EXPECT_EQ(rec["total"], 4);
    EXPECT_EQ(rec["params"]["seed"], 3);

    const auto done = wait_done(id);
    EXPECT_EQ(done["state"], "done");
    EXPECT_EQ(done["progress"], 4);
    auto png = client_->Get("/jobs/" + id + "/result");
    ASSERT_EQ(png->status, 200);
    EXPECT_EQ(png->get_header_value("Content-Type"), "image/png");
    const auto img = decode_png(std::vector<std::uint8_t>(png->body.begin(), png->body.end()), ImageRole::output);
    EXPECT_EQ(img.width(), 16u);

    // Same inputs through the library give the same bytes.
    RunSettings st;
    st.injection.sample_steps = 4;
    st.seed = 3;
    const auto direct =
        run_style_transfer(st.engine, make_job(st, uploaded(content_image(16, 16, 1)), uploaded(style_image(16, 16))));
    EXPECT_TRUE(png_string(direct.output) == png->body);
    const std::string path = done["result_path"];
    EXPECT_EQ(std::filesystem::path(path).filename().string(), hex64(fnv1a(png->body)) + ".png");
}

TEST_F(ServiceTest, ProgressIsMonotone) {
    auto res = post_job(R"({"steps": 12})");
    const std::string id = json::parse(res->body)["id"];
    int last = -1;
    for (;;) {
        const auto rec = json::parse(client_->Get("/jobs/" + id)->body);
        const int p = rec["progress"];
        EXPECT_GE(p, last);
        last = p;
        if (rec["state"] == "done" || rec["state"] == "failed") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    EXPECT_EQ(last, 12);
}

TEST_F(ServiceTest, ResultBeforeDoneIsConflict) {
    // One worker: the second job waits behind the first.
    const std::string a = json::parse(post_job(R"({"steps": 30})")->body)["id"];
    const std::string b = json::parse(post_job(R"({"steps": 2})")->body)["id"];
    auto res = client_->Get("/jobs/" + b + "/result");
    EXPECT_EQ(res->status, 409);
    wait_done(a);
    EXPECT_EQ(wait_done(b)["state"], "done");
}

TEST_F(ServiceTest, UnknownIdIsNotFound) {
    EXPECT_EQ(client_->Get("/jobs/job-000000000000")->status, 404);
    EXPECT_EQ(client_->Get("/jobs/job-000000000000/result")->status, 404);
}

TEST_F(ServiceTest, InvalidParamsAreUnprocessable) {
    EXPECT_EQ(post_job(R"({"alpha": 2})")->status, 422);
    EXPECT_EQ(post_job(R"({"alpah": 0.3})")->status, 422);
    EXPECT_EQ(post_job(R"({"attn_layers": [1]})")->status, 422);
    EXPECT_EQ(post_job(R"({"backend": {"denoiser": "sdxl"}})")->status, 422);
    EXPECT_EQ(post_job("{not json")->status, 422);
    EXPECT_EQ(post_job("", 12)->status, 422);
    httplib::MultipartFormDataItems only_content = {
        {"content", png_string(content_image(16, 16)), "c.png", "image/png"}};
    EXPECT_EQ(client_->Post("/jobs", only_content)->status, 422);
    httplib::MultipartFormDataItems garbage = {{"content", "xx", "c.png", "image/png"},
                                               {"style", "yy", "s.png", "image/png"}};
    EXPECT_EQ(client_->Post("/jobs", garbage)->status, 422);
}

TEST_F(ServiceTest, ConcurrentJobsAreIsolated) {
    start(2);
    const std::string a = json::parse(post_job(R"({"steps": 6})", 16, 1)->body)["id"];
    const std::string b = json::parse(post_job(R"({"steps": 6})", 16, 5)->body)["id"];
    const auto ra = wait_done(a), rb = wait_done(b);
    ASSERT_EQ(ra["state"], "done");
    ASSERT_EQ(rb["state"], "done");
    EXPECT_NE(ra["result_path"], rb["result_path"]);
    const auto pa = client_->Get("/jobs/" + a + "/result")->body;
    const auto pb = client_->Get("/jobs/" + b + "/result")->body;
    EXPECT_TRUE(pa != pb);
    // Each matches a solo run of its own inputs.
    RunSettings st;
    st.injection.sample_steps = 6;
    const auto solo =
        run_style_transfer(st.engine, make_job(st, uploaded(content_image(16, 16, 5)), uploaded(style_image(16, 16))));
    EXPECT_TRUE(png_string(solo.output) == pb);
}

TEST(JobServiceDirect, SubmitValidatesSynchronously) {
    testing::TempDir dir("svc");
    ServiceConfig cfg;
    cfg.output_dir = dir.path();
    JobService svc(cfg);
    EXPECT_THROW(svc.submit(content_image(16, 16), style_image(24, 24), json()), ConfigError);
    EXPECT_THROW(svc.submit(content_image(16, 16), style_image(16, 16), {{"backend", {{"codec", "vae"}}}}),
                 CapabilityError);
    EXPECT_FALSE(svc.get("job-nope").has_value());
    cfg.workers = 0;
    EXPECT_THROW(JobService{cfg}, ConfigError);
}

}  // namespace
}  // namespace stylefuse
