// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Solution evaluator for code tasks: runs a candidate against each test case
// of its problem and turns the executions into Feedback.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "leti/problem.hpp"
#include "leti/process.hpp"

namespace leti {

enum class Backend { Raw, Shim };

Backend parse_backend(std::string_view text);
std::string_view to_string(Backend backend);

/// How the evaluator reaches the interpreter. `shim_path` is only used by the
/// shim backend; when unset, LETI_SHIM_PATH is consulted.
struct SandboxOptions {
    std::vector<std::string> interpreter = default_interpreter();
    std::optional<std::string> shim_path;
    Backend backend = Backend::Raw;
};

/// Single-line JSON emitted by the runner shim:
/// {"status": "pass"|"fail", "exc_type": str|null, "traceback": str|null, "stdout": str}
struct ShimReport {
    bool passed = false;
    std::optional<std::string> exc_type;
    std::optional<std::string> traceback;
    std::string stdout_text;
};

/// Parses the last non-empty line of the shim's stdout. Throws ParseError
/// when the line is not valid JSON or violates the schema
/// (status = "pass" <=> exc_type null <=> traceback null).
ShimReport parse_shim_report(std::string_view shim_stdout);

/// f_text is tail-truncated to this many bytes.
inline constexpr std::size_t kMaxFeedbackChars = 2048;

/// Keeps the final `limit` bytes, never splitting a UTF-8 sequence.
std::string tail_truncate(std::string_view text, std::size_t limit = kMaxFeedbackChars);

/// "Execution timed out after {t}s."
std::string timeout_message(double seconds);

/// setup ⊕ solution ⊕ test. A newline is inserted between parts unless the
/// preceding part already ends with one; setup code ending in a space or tab
/// is joined verbatim so it can open a statement the solution completes.
std::string build_script(const Problem& problem, const CandidateSolution& solution, const TestCase& test);

/// Runs `script` with the chosen backend. Under the shim backend a healthy
/// shim report is folded back into an outcome (exit 0 for pass, 1 with the
/// traceback on stderr for fail); a faulty shim falls back to a raw run.
ExecutionOutcome execute_script(std::string_view script, const ExecutionLimits& limits,
                                const SandboxOptions& options = {});

/// Every test runs; f_text and error_class come from the earliest failing
/// test. Throws InfrastructureError when the interpreter cannot be spawned.
Feedback evaluate_solution(const Problem& problem, const CandidateSolution& solution,
                           const ExecutionLimits& limits, const SandboxOptions& options = {});

struct BatchResult {
    std::optional<Feedback> feedback;
    std::string infrastructure_error;  // non-empty iff feedback is absent

    bool ok() const { return feedback.has_value(); }
};

/// Evaluates pairs on a bounded worker pool; results keep input order.
/// Identical (problem, solution text) pairs are executed once.
std::vector<BatchResult> evaluate_batch(const std::vector<std::pair<Problem, CandidateSolution>>& pairs,
                                        const ExecutionLimits& limits, const SandboxOptions& options = {});

}  // namespace leti
