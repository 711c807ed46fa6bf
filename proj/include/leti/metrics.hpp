// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// pass@k estimation, error-distribution tables and improvement summaries.

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "leti/problem.hpp"

namespace leti {

/// Unbiased pass@k: 1 - C(n-c, k) / C(n, k), evaluated as
/// 1 - prod_{i=n-c+1..n} (1 - k/i). Throws DomainError unless
/// 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

/// Counts keyed by ErrorClass name ("Pass", "AssertionError", ..., or the
/// verbatim Other payload).
struct ErrorDistribution {
    std::map<std::string, int> counts;

    int count(const std::string& name) const;
    int total() const;
    /// Everything that is neither Pass nor one of the four canonical errors.
    int other_errors() const;

    nlohmann::json to_json() const;
    static ErrorDistribution from_json(const nlohmann::json& j);

    bool operator==(const ErrorDistribution&) const = default;
};

ErrorDistribution error_distribution(const std::vector<Feedback>& feedbacks);

/// Markdown table with one column per distribution. Rows: AssertionError,
/// SyntaxError, then IndentationError and NameError when any column has
/// them, then Other Errors and Pass Test.
std::string render_error_table(const std::vector<std::pair<std::string, ErrorDistribution>>& columns);

struct ImprovementSummary {
    double initial = 0.0;
    double max = 0.0;
    int iters_to_max = 0;
    double avg_per_iter = 0.0;
};

/// `series` holds (iteration, pass@1) points and must include iteration 0.
/// The max is taken at the earliest iteration that attains it; a series that
/// never exceeds its initial value reports 0 iterations and 0 average.
ImprovementSummary improvement_rate(const std::vector<std::pair<int, double>>& series);

/// Rounds half-up to `digits` decimals and prints with exactly that many.
std::string format_rounded(double value, int digits = 2);

nlohmann::json to_json(const ImprovementSummary& summary);

}  // namespace leti
