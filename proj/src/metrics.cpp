// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "leti/error.hpp"

namespace leti {

using nlohmann::json;

double pass_at_k(int n, int c, int k) {
    if (n < 1 || k < 1 || k > n) {
        throw DomainError("pass@k needs 1 <= k <= n (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
    if (c < 0 || c > n) {
        throw DomainError("pass@k needs 0 <= c <= n (n=" + std::to_string(n) + ", c=" + std::to_string(c) + ")");
    }
    if (n - c < k) {
        return 1.0;
    }
    double prod = 1.0;
    for (int i = n - c + 1; i <= n; ++i) {
        prod *= static_cast<double>(i - k) / static_cast<double>(i);
    }
    return 1.0 - prod;
}

// ------------------------------------------------------------- distribution

namespace {

constexpr const char* kCanonical[] = {"AssertionError", "SyntaxError", "IndentationError", "NameError"};

}  // namespace

int ErrorDistribution::count(const std::string& name) const {
    auto it = counts.find(name);
    return it == counts.end() ? 0 : it->second;
}

int ErrorDistribution::total() const {
    int sum = 0;
    for (const auto& [_, c] : counts) sum += c;
    return sum;
}

int ErrorDistribution::other_errors() const {
    int sum = total() - count("Pass");
    for (const char* name : kCanonical) sum -= count(name);
    return sum;
}

json ErrorDistribution::to_json() const {
    json j = json::object();
    for (const auto& [name, c] : counts) j[name] = c;
    return j;
}

ErrorDistribution ErrorDistribution::from_json(const json& j) {
    ErrorDistribution d;
    for (const auto& [name, c] : j.items()) d.counts[name] = c.get<int>();
    return d;
}

ErrorDistribution error_distribution(const std::vector<Feedback>& feedbacks) {
    ErrorDistribution d;
    for (const auto& f : feedbacks) {
        ++d.counts[f.error_class().name()];
    }
    return d;
}

std::string render_error_table(const std::vector<std::pair<std::string, ErrorDistribution>>& columns) {
    std::vector<std::pair<std::string, std::vector<int>>> rows;
    auto row = [&](std::string label, auto get, bool only_if_nonzero) {
        std::vector<int> values;
        bool any = false;
        for (const auto& [_, d] : columns) {
            values.push_back(get(d));
            any = any || values.back() != 0;
        }
        if (!only_if_nonzero || any) rows.emplace_back(std::move(label), std::move(values));
    };
    for (int i = 0; i < 4; ++i) {
        const std::string name = kCanonical[i];
        row("# of " + name, [&](const ErrorDistribution& d) { return d.count(name); }, i >= 2);
    }
    row("# of Other Errors", [](const ErrorDistribution& d) { return d.other_errors(); }, false);
    row("# of Pass Test", [](const ErrorDistribution& d) { return d.count("Pass"); }, false);

    std::string out = "| |";
    std::string rule = "|---|";
    for (const auto& [header, _] : columns) {
        out += " " + header + " |";
        rule += "---:|";
    }
    out += "\n" + rule + "\n";
    for (const auto& [label, values] : rows) {
        out += "| " + label + " |";
        for (int v : values) out += " " + std::to_string(v) + " |";
        out += "\n";
    }
    return out;
}

// -------------------------------------------------------------- improvement

ImprovementSummary improvement_rate(const std::vector<std::pair<int, double>>& series) {
    auto sorted = series;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || sorted.front().first != 0) {
        throw ValidationError("improvement series must contain iteration 0");
    }
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].first == sorted[i - 1].first) {
            throw ValidationError("improvement series repeats iteration " + std::to_string(sorted[i].first));
        }
    }
    ImprovementSummary s;
    s.initial = sorted.front().second;
    s.max = s.initial;
    for (const auto& [iter, value] : sorted) {
        if (value > s.max) {
            s.max = value;
            s.iters_to_max = iter;
        }
    }
    s.avg_per_iter = s.iters_to_max > 0 ? (s.max - s.initial) / s.iters_to_max : 0.0;
    return s;
}

std::string format_rounded(double value, int digits) {
    const double scale = std::pow(10.0, digits);
    // The nudge absorbs binary representation error at exact halves (x.xx5).
    const double scaled = std::abs(value) * scale;
    double rounded = std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, scaled)) / scale;
    if (value < 0 && rounded != 0.0) rounded = -rounded;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, rounded);
    return buf;
}

json to_json(const ImprovementSummary& s) {
    return json{{"initial", s.initial},
                {"max", s.max},
                {"iters_to_max", s.iters_to_max},
                {"avg_per_iter", s.avg_per_iter},
                {"avg_per_iter_rounded", format_rounded(s.avg_per_iter)}};
}

}  // namespace leti
