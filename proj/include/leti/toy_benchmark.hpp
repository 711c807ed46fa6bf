// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Built-in desk-scale benchmark: 64 one-line function problems (constants
// and simple arithmetic of x) and a noisy pretraining corpus whose
// documents pair rephrased instructions with correct and broken bodies.
//
// Every instruction ends with a number unique to its problem and every
// solution starts with that number, so a trigram model can tell problems
// apart right after <|sol|>.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "leti/config.hpp"
#include "leti/problem.hpp"

namespace leti {

inline constexpr int kToyProblemCount = 64;

/// Setup code shared by every toy problem; the solution completes the
/// return statement.
inline constexpr std::string_view kToySetup = "def f(x):\n    return ";

std::vector<Problem> toy_problems();

/// The reference body for a toy problem, e.g. "137 + x".
std::string toy_reference_solution(const Problem& problem);

std::vector<std::string> toy_pretrain_corpus();

/// Writes problems.jsonl, pretrain.txt and the fitted initial trigram
/// state into `dir` and returns a config that trains on them
/// (n=32, 3 iterations, mixing on).
RunConfig write_toy_benchmark(const std::filesystem::path& dir);

}  // namespace leti
