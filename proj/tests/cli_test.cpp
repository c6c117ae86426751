// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "stylefuse/cli.hpp"
#include "stylefuse/error.hpp"

namespace stylefuse {
namespace {

using nlohmann::json;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        write_png(dir_ / "content.png", testing::content_image(16, 16));
        write_png(dir_ / "style.png", testing::style_image(16, 16));
        write_png(dir_ / "odd.png", testing::style_image(24, 24));
    }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "stylefuse");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return run_cli(int(argv.size()), argv.data(), out_, err_);
    }

    std::string p(const std::string& name) const { return (dir_ / name).string(); }

    json read_json(const std::string& name) const {
        std::ifstream in(dir_ / name);
        return json::parse(in);
    }

    std::vector<std::string> transfer(const std::string& out, std::vector<std::string> extra = {},
                                      const std::string& steps = "3") const {
        std::vector<std::string> a{"transfer", "--content", p("content.png"), "--style", p("style.png"), "--out", p(out),
                                   "--steps", steps};
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    }

    testing::TempDir dir_{"cli"};
    std::ostringstream out_, err_;
};

TEST(LayerSet, Parses) {
    EXPECT_EQ(parse_layer_set("4-11"), (std::set<int>{4, 5, 6, 7, 8, 9, 10, 11}));
    EXPECT_EQ(parse_layer_set("3,5,7"), (std::set<int>{3, 5, 7}));
    EXPECT_EQ(parse_layer_set("3-4,9"), (std::set<int>{3, 4, 9}));
    EXPECT_TRUE(parse_layer_set("").empty());
    EXPECT_THROW(parse_layer_set("5-3"), ConfigError);
    EXPECT_THROW(parse_layer_set("a"), ConfigError);
    EXPECT_THROW(parse_layer_set("4x"), ConfigError);
}

TEST_F(CliTest, TransferWritesImageAndTrace) {
    ASSERT_EQ(run(transfer("out.png")), kExitOk) << err_.str();
    EXPECT_TRUE(std::filesystem::exists(dir_ / "out.png"));
    const auto trace = read_json("out.json");
    EXPECT_EQ(trace["sample_steps"], 3);
    EXPECT_EQ(trace["settings"]["alpha"], 0.2);
    EXPECT_EQ(trace["settings"]["cfg_scale"], 7.5);
    EXPECT_NE(out_.str().find("wrote"), std::string::npos);
}

TEST_F(CliTest, FlagsOverrideConfigOverrideDefaults) {
    std::ofstream(dir_ / "job.json") << R"({"schema_version": 1, "alpha": 0.5, "steps": 4, "cfg_scale": 2.0})";
    ASSERT_EQ(run({"transfer", "--content", p("content.png"), "--style", p("style.png"), "--out", p("o.png"),
                   "--config", p("job.json"), "--alpha", "0.25", "--trace", p("t.json")}),
              kExitOk)
        << err_.str();
    const auto t = read_json("t.json");
    EXPECT_EQ(t["alpha"], 0.25);
    EXPECT_EQ(t["sample_steps"], 4);
    EXPECT_EQ(t["settings"]["cfg_scale"], 2.0);
    EXPECT_EQ(t["t_alpha"], 1);
}

TEST_F(CliTest, DumpBanksIsLoadable) {
    ASSERT_EQ(run(transfer("b.png", {"--alpha", "0.4", "--dump-banks", p("banks")}, "5")), kExitOk)
        << err_.str();
    const auto content = load_bank(dir_ / "banks" / "content");
    const auto style = load_bank(dir_ / "banks" / "style");
    EXPECT_EQ(content.steps(), (std::vector<int>{3, 4, 5}));
    EXPECT_EQ(style.steps(), (std::vector<int>{1, 2}));
    EXPECT_EQ(style.branch(), Branch::style);
    EXPECT_FALSE(content.at(4).at({LayerSide::decoder, 3}).residual.empty());
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run({"transfer", "--content", p("content.png")}), kExitUsage);
    EXPECT_EQ(run(transfer("x.png", {"--alpha", "1.5"})), kExitUsage);
    EXPECT_EQ(run(transfer("x.png", {"--order", "sideways"})), kExitUsage);
    EXPECT_EQ(run(transfer("x.png", {"--attn-layers", "1-2"})), kExitUsage);
    EXPECT_EQ(run(transfer("x.png", {"--codec", "vae"})), kExitUsage);
    EXPECT_EQ(run({"transfer", "--content", p("missing.png"), "--style", p("style.png"), "--out", p("x.png")}), kExitIo);
    EXPECT_EQ(run({"transfer", "--content", p("content.png"), "--style", p("odd.png"), "--out", p("x.png")}),
              kExitUsage);
    std::ofstream(dir_ / "bad.json") << R"({"alpah": 1})";
    EXPECT_EQ(run(transfer("x.png", {"--config", p("bad.json")})), kExitUsage);
    EXPECT_EQ(run(transfer("x.png", {"--config", p("none.json")})), kExitIo);
    // A schedule whose cumulative alpha underflows fails inside the pipeline.
    std::ofstream(dir_ / "blowup.json")
        << R"({"backend": {"beta_start": 0.5, "beta_end": 0.99, "beta_schedule": "linear"}})";
    EXPECT_EQ(run(transfer("x.png", {"--config", p("blowup.json")})), kExitPipeline) << err_.str();
    EXPECT_FALSE(std::filesystem::exists(dir_ / "x.png"));
    EXPECT_EQ(run({}), kExitUsage);
}

TEST_F(CliTest, HelpListsEveryFlag) {
    EXPECT_EQ(run({"transfer", "--help"}), kExitOk);
    const std::string help = out_.str();
    for (const char* flag : {"--alpha", "--steps", "--cfg-scale", "--attn-layers", "--residual-layers", "--order",
                             "--prompt", "--edit-prompt", "--seed", "--dump-banks", "--config", "--codec"}) {
        EXPECT_NE(help.find(flag), std::string::npos) << flag;
    }
}

TEST_F(CliTest, AblateNeedsAFlag) {
    const std::vector<std::string> base{"ablate", "--content", p("content.png"), "--style", p("style.png"), "--out",
                                        p("a.png"), "--steps", "4", "--alpha", "0.5"};
    EXPECT_EQ(run(base), kExitUsage);
    auto args = base;
    args.push_back("--no-style");
    ASSERT_EQ(run(args), kExitOk) << err_.str();
    const auto t = read_json("a.json");
    EXPECT_EQ(t["settings"]["ablation"]["style"], false);
    for (const auto& s : t["steps"]) {
        if (s["phase"] == "style") EXPECT_TRUE(s["attention"].is_null());
    }
    EXPECT_NE(out_.str().find("--no-style"), std::string::npos);
}

TEST_F(CliTest, SweepReportsOneContentInversion) {
    ASSERT_EQ(run({"sweep", "--content", p("content.png"), "--style", p("style.png"), "--out-dir", p("sweep"),
                   "--steps", "4", "--alphas", "0,0.5,1"}),
              kExitOk)
        << err_.str();
    EXPECT_NE(out_.str().find("content_inversions=1 "), std::string::npos) << out_.str();
    for (const char* f : {"alpha_0.00.png", "alpha_0.50.png", "alpha_1.00.png", "montage.png", "sweep.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir_ / "sweep" / f)) << f;
    }
    EXPECT_EQ(read_png(dir_ / "sweep" / "montage.png", ImageRole::output).width(), 16u * 3 + 2 * 2);
    EXPECT_EQ(run({"sweep", "--content", p("content.png"), "--style", p("style.png"), "--out-dir", p("sweep"),
                   "--alphas", "0,x"}),
              kExitUsage);
}

TEST_F(CliTest, InvertDumpsTrajectory) {
    ASSERT_EQ(run({"invert", "--image", p("style.png"), "--out-dir", p("inv"), "--steps", "5", "--branch", "style"}),
              kExitOk)
        << err_.str();
    const auto traj = load_trajectory(dir_ / "inv");
    EXPECT_EQ(traj.branch(), Branch::style);
    EXPECT_EQ(traj.size(), 6u);
    EXPECT_EQ(run({"invert", "--image", p("style.png"), "--out-dir", p("inv"), "--steps", "5", "--hi", "6"}),
              kExitUsage);
}

TEST_F(CliTest, MetricsCsv) {
    ASSERT_EQ(run({"metrics", "--generated", p("content.png"), p("style.png"), "--content", p("content.png"), "--style",
                   p("style.png"), "--csv", p("m.csv")}),
              kExitOk);
    std::ifstream in(dir_ / "m.csv");
    std::string header, first, second;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, second);
    EXPECT_EQ(header, "generated,reference,content_loss,style_loss,mse,runtime_ms");
    EXPECT_NE(first.find(",0,"), std::string::npos) << first;  // zero content loss against itself
    EXPECT_FALSE(second.empty());
}

}  // namespace
}  // namespace stylefuse
