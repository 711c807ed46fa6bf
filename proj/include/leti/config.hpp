// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration, loaded from JSON or from a small TOML subset.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "leti/generator.hpp"
#include "leti/process.hpp"
#include "leti/sandbox.hpp"

namespace leti {

struct RunConfig {
    std::string problems_path;
    /// Held-out split; when absent the training problems are also evaluated.
    std::optional<std::string> test_problems_path;
    GeneratorSpec generator;

    int n_samples = 128;
    double train_temperature = 1.0;
    double eval_temperature = 0.1;
    int eval_samples = 16;
    int epochs = 3;
    int iterations = 1;

    bool post_processing = true;
    /// When set and different from post_processing, test evaluation reports
    /// both variants.
    std::optional<bool> eval_post_processing;
    std::vector<std::string> stops;
    /// Appends the first test of each problem to the prompt.
    bool show_example_test = false;

    bool mixing_enabled = false;
    std::optional<std::string> pretrain_corpus_path;
    std::size_t batch_size = 8;
    bool dedup = false;

    ExecutionLimits limits;
    Backend backend = Backend::Raw;
    std::vector<std::string> interpreter;
    std::optional<std::string> shim_path;

    std::uint64_t seed = 0;
    std::string run_id = "run";

    /// Relative paths resolve against this directory (the config file's).
    std::filesystem::path base_dir;

    RunConfig();

    /// Throws ValidationError when an invariant is broken.
    void validate() const;

    std::filesystem::path resolve(const std::string& path) const;
    SandboxOptions sandbox_options() const;

    /// Snapshot stored in the run manifest (paths as written).
    nlohmann::json to_json() const;
    /// Unknown keys are rejected. Missing keys keep their defaults.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

/// Dispatches on the extension: .toml uses the TOML subset, anything else
/// is JSON.
RunConfig load_config(const std::filesystem::path& path);

/// Supported TOML: comments, [table] and [a.b] headers, key = value with
/// basic or literal strings, integers, floats, booleans and single-line
/// arrays of those. Throws ParseError with the offending line.
nlohmann::json parse_toml_subset(std::string_view text);

}  // namespace leti
