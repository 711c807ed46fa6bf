// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 validation error,
// 2 infrastructure error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "leti/config.hpp"
#include "leti/eae.hpp"
#include "leti/error.hpp"
#include "leti/fcft.hpp"
#include "leti/metrics.hpp"
#include "leti/orchestrator.hpp"
#include "leti/toy_benchmark.hpp"

using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string run_dir = "runs";
};

leti::RunConfig load(const Globals& g) {
    if (g.config_path.empty()) {
        throw leti::ValidationError("--config is required for this command");
    }
    auto config = leti::load_config(g.config_path);
    if (g.seed) config.seed = *g.seed;
    return config;
}

std::vector<leti::Problem> split_problems(const leti::RunConfig& c, const std::string& split) {
    if (split == "test" && c.test_problems_path) {
        return leti::load_problems(c.resolve(*c.test_problems_path));
    }
    if (split != "train" && split != "test") {
        throw leti::ValidationError("--split must be train or test");
    }
    return leti::load_problems(c.resolve(c.problems_path));
}

void print_series(const char* label, const std::vector<std::pair<int, double>>& series) {
    std::printf("%s:", label);
    for (const auto& [i, v] : series) std::printf(" %d=%s", i, leti::format_rounded(100.0 * v).c_str());
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"leti: feedback-conditioned fine-tuning data engine"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Run config (.toml or .json)");
    app.add_option("--seed", g.seed, "Override the config seed");
    app.add_option("--run-dir", g.run_dir, "Directory holding runs/<run_id>")->capture_default_str();

    // sample
    auto* sample = app.add_subcommand("sample", "Sample solutions for every problem");
    std::string sample_out, sample_split = "train";
    int sample_iteration = 0;
    std::optional<int> sample_n;
    std::optional<double> sample_temperature;
    sample->add_option("--out", sample_out, "samples.jsonl to write")->required();
    sample->add_option("--iteration", sample_iteration, "Iteration index; >= 1 conditions on <|good|>");
    sample->add_option("--n", sample_n, "Samples per problem (default n_samples)");
    sample->add_option("--temperature", sample_temperature, "Sampling temperature (default train_temperature)");
    sample->add_option("--split", sample_split, "train or test");

    // eval
    auto* eval = app.add_subcommand("eval", "Execute samples against their tests");
    std::string eval_samples, eval_out, eval_split = "train";
    eval->add_option("--samples", eval_samples, "samples.jsonl")->required();
    eval->add_option("--out", eval_out, "feedback.jsonl to write")->required();
    eval->add_option("--split", eval_split, "train or test");

    // build-fcft
    auto* build = app.add_subcommand("build-fcft", "Build the feedback-conditioned dataset");
    std::string build_samples, build_feedback, build_out;
    int build_iteration = 0;
    build->add_option("--samples", build_samples, "samples.jsonl")->required();
    build->add_option("--feedback", build_feedback, "feedback.jsonl")->required();
    build->add_option("--out", build_out, "fcft.jsonl to write")->required();
    build->add_option("--iteration", build_iteration, "Iteration stored in each record");

    // loop
    auto* loop = app.add_subcommand("loop", "Run (or resume) the full improvement loop");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "pass@k and error distribution");
    std::vector<std::string> metrics_feedback;
    std::vector<int> pass_args;
    metrics->add_option("--feedback", metrics_feedback, "feedback.jsonl files (one table column each)");
    metrics->add_option("--pass-at-k", pass_args, "n c k")->expected(3);

    // report
    auto* report = app.add_subcommand("report", "Summarize a run from its manifest");
    std::string report_run;
    report->add_option("--run", report_run, "Run id (default from --config)");

    // toy-benchmark
    auto* toy = app.add_subcommand("toy-benchmark", "Write the built-in toy benchmark and optionally run it");
    std::string toy_dir;
    bool toy_run = false;
    toy->add_option("--out", toy_dir, "Directory for problems, corpus, state and config")->required();
    toy->add_flag("--run", toy_run, "Run the loop after writing");

    // eae
    auto* eae = app.add_subcommand("eae", "Rule-based event argument extraction evaluation");
    std::string eae_ontology, eae_instances, eae_predictions, eae_out;
    eae->add_option("--ontology", eae_ontology, "ontology.jsonl")->required();
    eae->add_option("--instances", eae_instances, "instances.jsonl with gold arguments")->required();
    eae->add_option("--predictions", eae_predictions, "predictions.jsonl (structured or code)")->required();
    eae->add_option("--out", eae_out, "feedback.jsonl to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*sample) {
            const auto config = load(g);
            auto generator = leti::make_generator(config.generator, config.base_dir);
            const auto problems = split_problems(config, sample_split);
            leti::SampleSettings s;
            s.n = sample_n.value_or(config.n_samples);
            s.temperature = sample_temperature.value_or(config.train_temperature);
            if (sample_iteration >= 1) s.condition = std::string(leti::vocab::kGood);
            s.post_processing = config.post_processing;
            s.stops = config.stops;
            s.show_example_test = config.show_example_test;
            s.seed = leti::round_seed(config.seed, "train", sample_iteration);
            const auto solutions = leti::sample_problems(*generator, problems, s);
            std::vector<json> rows(solutions.begin(), solutions.end());
            leti::write_jsonl(sample_out, rows);
            std::printf("wrote %zu samples to %s\n", rows.size(), sample_out.c_str());
        } else if (*eval) {
            const auto config = load(g);
            const auto problems = split_problems(config, eval_split);
            const auto solutions = leti::load_samples(eval_samples);
            leti::EvaluationCache cache(config.limits, config.sandbox_options());
            const auto feedback = cache.evaluate(problems, solutions);
            std::vector<json> rows;
            for (std::size_t i = 0; i < solutions.size(); ++i) rows.push_back(leti::feedback_row(solutions[i], feedback[i]));
            leti::write_jsonl(eval_out, rows);
            std::printf("pass@1 %s (%zu samples)\n",
                        leti::format_rounded(100.0 * leti::mean_pass_at_1(solutions, feedback)).c_str(),
                        solutions.size());
        } else if (*build) {
            const auto config = load(g);
            const auto problems = split_problems(config, "train");
            const auto solutions = leti::load_samples(build_samples);
            const auto by_key = leti::load_feedback(build_feedback);
            std::vector<leti::Feedback> feedback;
            for (const auto& s : solutions) {
                auto it = by_key.find({s.problem_id, s.sample_index});
                if (it == by_key.end()) {
                    throw leti::ValidationError("no feedback for " + s.problem_id + "#" +
                                                std::to_string(s.sample_index));
                }
                feedback.push_back(it->second);
            }
            const auto records = leti::build_fcft_dataset(problems, solutions, feedback, build_iteration,
                                                          config.show_example_test, config.dedup);
            leti::write_fcft_dataset(build_out, records);
            std::printf("wrote %zu records to %s\n", records.size(), build_out.c_str());
        } else if (*loop) {
            leti::Orchestrator orchestrator(load(g), g.run_dir);
            const auto manifest = orchestrator.run_loop();
            print_series("train pass@1 (%)", manifest.train_series());
            print_series("test pass@1 (%)", manifest.test_series());
            std::printf("run directory: %s\n", orchestrator.run_dir().c_str());
        } else if (*metrics) {
            if (!pass_args.empty()) {
                std::printf("%.17g\n", leti::pass_at_k(pass_args[0], pass_args[1], pass_args[2]));
            }
            std::vector<std::pair<std::string, leti::ErrorDistribution>> columns;
            for (const auto& path : metrics_feedback) {
                std::vector<leti::Feedback> fbs;
                for (auto& [_, f] : leti::load_feedback(path)) fbs.push_back(f);
                columns.emplace_back(path, leti::error_distribution(fbs));
            }
            if (!columns.empty()) std::printf("%s", leti::render_error_table(columns).c_str());
            if (pass_args.empty() && columns.empty()) {
                throw leti::ValidationError("metrics needs --feedback or --pass-at-k");
            }
        } else if (*report) {
            std::string run = report_run;
            if (run.empty()) run = load(g).run_id;
            const auto manifest = leti::RunManifest::load(std::filesystem::path(g.run_dir) / run / "manifest.json");
            print_series("train pass@1 (%)", manifest.train_series());
            print_series("test pass@1 (%)", manifest.test_series());
            if (manifest.finished()) {
                auto series = manifest.train_series();
                for (auto& [_, v] : series) v *= 100.0;
                const auto s = leti::improvement_rate(series);
                std::printf("initial %s  max %s  iters to max %d  avg/iter %s\n", leti::format_rounded(s.initial).c_str(),
                            leti::format_rounded(s.max).c_str(), s.iters_to_max,
                            leti::format_rounded(s.avg_per_iter).c_str());
            }
            const auto& iters = manifest.data.at("iterations");
            if (!iters.empty()) {
                std::vector<std::pair<std::string, leti::ErrorDistribution>> columns{
                    {"iter 0", leti::ErrorDistribution::from_json(iters.front().at("train_error_distribution"))}};
                if (manifest.finished()) {
                    columns.emplace_back("final", leti::ErrorDistribution::from_json(
                                                      manifest.data.at("final").at("train_error_distribution")));
                }
                std::printf("%s", leti::render_error_table(columns).c_str());
            }
        } else if (*toy) {
            auto config = leti::write_toy_benchmark(toy_dir);
            if (g.seed) config.seed = *g.seed;
            std::printf("wrote toy benchmark to %s (config.json)\n", toy_dir.c_str());
            if (toy_run) {
                leti::Orchestrator orchestrator(config, g.run_dir);
                const auto manifest = orchestrator.run_loop();
                print_series("train pass@1 (%)", manifest.train_series());
                print_series("test pass@1 (%)", manifest.test_series());
            }
        } else if (*eae) {
            const auto ontologies = leti::load_ontologies(eae_ontology);
            const auto instances = leti::load_eae_instances(eae_instances);
            const auto predictions = leti::load_eae_predictions(eae_predictions);
            std::vector<leti::EventPrediction> preds;
            std::vector<leti::GoldEvent> golds;
            std::vector<json> rows;
            for (const auto& inst : instances) {
                auto o = ontologies.find(inst.event_type);
                if (o == ontologies.end()) {
                    throw leti::ValidationError("no ontology for event type '" + inst.event_type + "'");
                }
                auto p = predictions.find(inst.id);
                const leti::EventPrediction pred = p == predictions.end() ? leti::EventPrediction{} : p->second;
                json row = leti::evaluate_event(pred, o->second, inst.gold);
                row["id"] = inst.id;
                rows.push_back(std::move(row));
                preds.push_back(pred);
                golds.push_back(inst.gold);
            }
            if (!eae_out.empty()) leti::write_jsonl(eae_out, rows);
            std::printf("%s\n", leti::to_json(leti::score_eae(preds, golds)).dump(2).c_str());
        }
    } catch (const leti::InfrastructureError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const leti::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
