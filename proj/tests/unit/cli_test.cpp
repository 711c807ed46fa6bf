// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "leti/fcft.hpp"
#include "leti/orchestrator.hpp"
#include "test_support.hpp"

namespace leti {
namespace {

using nlohmann::json;

std::string cli(const std::string& args) {
    return "'" + testing::cli_path().string() + "' " + args;
}

std::string quoted(const std::filesystem::path& p) {
    return "'" + p.string() + "'";
}

// Two problems, mock completions that pass and fail alternately.
std::filesystem::path write_mock_run(const testing::TempDir& dir, const std::string& interpreter = "python3 -S") {
    write_problems(dir / "problems.jsonl",
                   {testing::make_problem("a", "Return one", {"assert f() == 1"}),
                    testing::make_problem("b", "Return two", {"assert f() == 2"})});
    json table = json::array({
        {{"prompt", "Return one"}, {"completions", {"def f():\n    return 1\n", "def f():\n    return 0\n"}}},
        {{"prompt", "Return two"}, {"completions", {"def f():\n    return 2\n", "def f():\n    return x\n"}}},
    });
    write_file(dir / "table.json", table.dump());
    const json config{{"problems_path", "problems.jsonl"},
                      {"generator", {{"kind", "mock"}, {"mock_table", "table.json"}}},
                      {"n_samples", 2},
                      {"eval_samples", 2},
                      {"iterations", 2},
                      {"interpreter", interpreter},
                      {"run_id", "cli"}};
    write_file(dir / "config.json", config.dump(2));
    return dir / "config.json";
}

TEST(CliTest, HelpAndUsageErrors) {
    EXPECT_EQ(testing::run_command(cli("--help")).exit_code, 0);
    EXPECT_EQ(testing::run_command(cli("")).exit_code, 1);
    EXPECT_EQ(testing::run_command(cli("frobnicate")).exit_code, 1);
    EXPECT_EQ(testing::run_command(cli("loop")).exit_code, 1);  // --config missing
}

TEST(CliTest, PassAtKPrintsTheEstimate) {
    const auto r = testing::run_command(cli("metrics --pass-at-k 5 2 2"));
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NEAR(std::stod(r.output), 0.7, 1e-12);
    EXPECT_EQ(testing::run_command(cli("metrics --pass-at-k 2 3 1")).exit_code, 1);
}

TEST(CliTest, InvalidConfigIsExitOne) {
    testing::TempDir dir;
    write_file(dir / "bad.json", R"({"problems_path": "p.jsonl", "iterations": 0})");
    const auto r = testing::run_command(cli("--config " + quoted(dir / "bad.json") + " loop"));
    EXPECT_EQ(r.exit_code, 1) << r.output;
    EXPECT_NE(r.output.find("error:"), std::string::npos);
}

TEST(CliTest, UnspawnableInterpreterIsExitTwo) {
    testing::TempDir dir;
    const auto config = write_mock_run(dir, "/nonexistent/python3");
    const auto r = testing::run_command(cli("--config " + quoted(config) + " --run-dir " + quoted(dir / "runs") +
                                            " loop"));
    EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(CliTest, UnreachableEndpointIsExitTwo) {
    testing::TempDir dir;
    write_problems(dir / "problems.jsonl", {testing::make_problem("a", "Return one", {"assert f() == 1"})});
    const json config{{"problems_path", "problems.jsonl"},
                      {"generator",
                       {{"kind", "remote"}, {"endpoint", "http://127.0.0.1:1/generate"}, {"retries", 0},
                        {"timeout", 2.0}}},
                      {"n_samples", 1}};
    write_file(dir / "config.json", config.dump());
    const auto r = testing::run_command(cli("--config " + quoted(dir / "config.json") + " sample --out " +
                                            quoted(dir / "s.jsonl")));
    EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(CliTest, StepwiseSampleEvalBuild) {
    testing::TempDir dir;
    const auto config = write_mock_run(dir);
    const std::string base = cli("--config " + quoted(config) + " ");
    auto r = testing::run_command(base + "sample --out " + quoted(dir / "s.jsonl"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    r = testing::run_command(base + "eval --samples " + quoted(dir / "s.jsonl") + " --out " + quoted(dir / "f.jsonl"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("pass@1 50"), std::string::npos) << r.output;
    r = testing::run_command(base + "build-fcft --samples " + quoted(dir / "s.jsonl") + " --feedback " +
                             quoted(dir / "f.jsonl") + " --out " + quoted(dir / "d.jsonl"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto records = load_fcft_dataset(dir / "d.jsonl");
    ASSERT_EQ(records.size(), 4u);
    EXPECT_EQ(records[0].sequence, "<|good|>Return one<|sol|>def f():\n    return 1\n");

    r = testing::run_command(cli("metrics --feedback " + quoted(dir / "f.jsonl")));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("AssertionError"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("NameError"), std::string::npos) << r.output;
}

TEST(CliTest, LoopThenReport) {
    testing::TempDir dir;
    const auto config = write_mock_run(dir);
    const std::string base = cli("--config " + quoted(config) + " --run-dir " + quoted(dir / "runs") + " ");
    auto r = testing::run_command(base + "loop");
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("train pass@1 (%): 0=50.00 1=50.00 2=50.00"), std::string::npos) << r.output;
    EXPECT_TRUE(std::filesystem::exists(dir / "runs" / "cli" / "manifest.json"));

    r = testing::run_command(cli("--run-dir " + quoted(dir / "runs") + " report --run cli"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("iters to max"), std::string::npos) << r.output;

    // Same run id, different settings.
    r = testing::run_command(cli("--config " + quoted(config) + " --seed 99 --run-dir " + quoted(dir / "runs") +
                                 " loop"));
    EXPECT_EQ(r.exit_code, 1) << r.output;
}

TEST(CliTest, ToyBenchmarkWritesItsInputs) {
    testing::TempDir dir;
    const auto r = testing::run_command(cli("toy-benchmark --out " + quoted(dir / "toy")));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    for (const char* f : {"problems.jsonl", "pretrain.txt", "initial_state.json", "config.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / "toy" / f)) << f;
    }
    const auto s = testing::run_command(cli("--config " + quoted(dir / "toy" / "config.json") + " sample --n 1 --out " +
                                            quoted(dir / "s.jsonl")));
    ASSERT_EQ(s.exit_code, 0) << s.output;
    EXPECT_EQ(read_jsonl(dir / "s.jsonl").size(), 64u);
}

TEST(CliTest, EaeScoresPredictions) {
    testing::TempDir dir;
    write_file(dir / "ontology.jsonl",
               R"({"event_type": "Attack", "roles": [{"name": "Attacker", "entity_types": ["PER", "ORG"]}]})"
               "\n");
    write_file(dir / "instances.jsonl",
               R"({"id": "e1", "event_type": "Attack", "gold": [{"role": "Attacker", "span": "rebels"}]})"
               "\n");
    write_file(dir / "predictions.jsonl", R"({"id": "e1", "code": "Attacker = [ORG(\"rebels\")]"})"
                                          "\n");
    const auto r = testing::run_command(cli("eae --ontology " + quoted(dir / "ontology.jsonl") + " --instances " +
                                            quoted(dir / "instances.jsonl") + " --predictions " +
                                            quoted(dir / "predictions.jsonl") + " --out " + quoted(dir / "fb.jsonl")));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_EQ(read_jsonl(dir / "fb.jsonl").size(), 1u);
    EXPECT_EQ(json::parse(r.output).at("arg_c").at("f1"), 1.0) << r.output;
}

}  // namespace
}  // namespace leti
