// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// The improvement loop: sample -> evaluate -> build FCFT data -> fit,
// repeated for a configured number of iterations with every artifact
// persisted under runs/<run_id>/.
//
//   runs/<run_id>/manifest.json
//   runs/<run_id>/metrics.csv
//   runs/<run_id>/iter_<i>/{samples,feedback,fcft}.jsonl, metrics.json, generator_state.json
//   runs/<run_id>/final/{samples,feedback}.jsonl, metrics.json

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leti/config.hpp"
#include "leti/generator.hpp"
#include "leti/metrics.hpp"
#include "leti/problem.hpp"

namespace leti {

/// Instruction, plus the first test on its own line when requested.
std::string render_prompt(const Problem& problem, bool show_example_test);

/// Derives the seed for one sampling round.
std::uint64_t round_seed(std::uint64_t base_seed, std::string_view round, int index);

struct SampleSettings {
    int n = 1;
    double temperature = 1.0;
    std::optional<std::string> condition;
    bool post_processing = true;
    std::vector<std::string> stops;
    bool show_example_test = false;
    std::uint64_t seed = 0;
};

/// Samples every problem; solutions come back grouped by problem in input
/// order with sample_index 0..n-1.
std::vector<CandidateSolution> sample_problems(const Generator& generator, const std::vector<Problem>& problems,
                                               const SampleSettings& settings);

/// Memoizes feedback per (problem, solution text). Evaluation is a pure
/// function of that pair under fixed limits, so repeats are free.
class EvaluationCache {
public:
    EvaluationCache(ExecutionLimits limits, SandboxOptions options)
        : limits_(limits), options_(std::move(options)) {}

    /// Throws InfrastructureError when any evaluation cannot run.
    std::vector<Feedback> evaluate(const std::vector<Problem>& problems,
                                   const std::vector<CandidateSolution>& solutions);

    std::size_t size() const { return cache_.size(); }

private:
    ExecutionLimits limits_;
    SandboxOptions options_;
    std::map<std::string, Feedback> cache_;
};

/// Mean over problems of the unbiased pass@1 (c/n per problem).
double mean_pass_at_1(const std::vector<CandidateSolution>& solutions, const std::vector<Feedback>& feedback);

std::vector<FcftRecord> build_fcft_dataset(const std::vector<Problem>& problems,
                                           const std::vector<CandidateSolution>& solutions,
                                           const std::vector<Feedback>& feedback, int iteration,
                                           bool show_example_test, bool dedup);

/// Fits `state` on the records: `epochs` passes, each either plain or an
/// F,P-interleaved mix with `pretrain` batches.
void fit_trigram(TrigramState& state, const std::vector<FcftRecord>& records, int epochs,
                 const std::vector<std::string>* pretrain, std::size_t batch_size);

// Row formats for the per-iteration files.
nlohmann::json feedback_row(const CandidateSolution& solution, const Feedback& feedback);
std::vector<CandidateSolution> load_samples(const std::filesystem::path& path);
/// Feedback rows keyed by (problem_id, sample_index).
std::map<std::pair<std::string, int>, Feedback> load_feedback(const std::filesystem::path& path);

struct EvalReport {
    double pass_at_1 = 0.0;
    ErrorDistribution errors;
    /// Present when evaluation post-processing differs from training.
    std::optional<double> pass_at_1_train_postprocessing;
};

struct IterationReport {
    int iteration = 0;
    double train_pass_at_1 = 0.0;
    ErrorDistribution train_errors;
    EvalReport test;
    std::size_t fcft_records = 0;
    std::size_t fcft_good = 0;
    std::optional<std::string> state_checksum;
    bool external_train_pending = false;

    /// Deterministic content of metrics.json (no timestamps).
    nlohmann::json to_json() const;
};

struct RunManifest {
    nlohmann::json data;

    /// (iteration, train pass@1) for v = 0..K; entry K comes from the closing
    /// round after the last fit.
    std::vector<std::pair<int, double>> train_series() const;
    std::vector<std::pair<int, double>> test_series() const;
    int completed_iterations() const;
    bool finished() const;

    static RunManifest load(const std::filesystem::path& path);
};

class Orchestrator {
public:
    /// `runs_root` holds one directory per run id.
    Orchestrator(RunConfig config, std::filesystem::path runs_root);

    std::filesystem::path run_dir() const { return runs_root_ / config_.run_id; }

    /// Runs remaining iterations (resuming after the last completed one),
    /// then the closing round. Returns the final manifest.
    RunManifest run_loop();

    /// Runs one iteration on the current generator state and persists it.
    IterationReport run_iteration(int iteration);

    const Generator& generator() const { return *generator_; }

private:
    void load_inputs();
    void restore_generator(const RunManifest& manifest);
    EvalReport evaluate_split(const std::vector<Problem>& problems, std::string_view round, int index,
                              const std::optional<std::string>& condition, const std::filesystem::path* dump_dir);
    void write_manifest();
    void write_metrics_csv() const;

    RunConfig config_;
    std::filesystem::path runs_root_;
    std::vector<Problem> train_;
    std::vector<Problem> test_;
    std::vector<std::string> pretrain_;
    std::unique_ptr<Generator> generator_;
    EvaluationCache cache_;
    nlohmann::json manifest_;
};

}  // namespace leti
