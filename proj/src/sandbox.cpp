// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/sandbox.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "leti/error.hpp"
#include "leti/error_taxonomy.hpp"

namespace leti {

using nlohmann::json;

Backend parse_backend(std::string_view text) {
    if (text == "raw") return Backend::Raw;
    if (text == "shim") return Backend::Shim;
    throw ValidationError("unknown backend '" + std::string(text) + "' (expected raw or shim)");
}

std::string_view to_string(Backend backend) {
    return backend == Backend::Raw ? "raw" : "shim";
}

ShimReport parse_shim_report(std::string_view shim_stdout) {
    while (!shim_stdout.empty() && (shim_stdout.back() == '\n' || shim_stdout.back() == '\r')) {
        shim_stdout.remove_suffix(1);
    }
    auto nl = shim_stdout.rfind('\n');
    std::string_view line = nl == std::string_view::npos ? shim_stdout : shim_stdout.substr(nl + 1);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("shim report is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("status") || !j["status"].is_string()) {
        throw ParseError("shim report lacks a string 'status'");
    }
    ShimReport report;
    const auto status = j["status"].get<std::string>();
    if (status != "pass" && status != "fail") {
        throw ParseError("shim report status must be 'pass' or 'fail', got '" + status + "'");
    }
    report.passed = status == "pass";
    auto optional_string = [&](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            return std::nullopt;
        }
        if (!it->is_string()) {
            throw ParseError(std::string("shim report field '") + key + "' must be a string or null");
        }
        return it->get<std::string>();
    };
    report.exc_type = optional_string("exc_type");
    report.traceback = optional_string("traceback");
    report.stdout_text = optional_string("stdout").value_or("");
    if (report.passed != !report.exc_type.has_value() || report.passed != !report.traceback.has_value()) {
        throw ParseError("shim report violates status/exc_type/traceback consistency");
    }
    return report;
}

std::string tail_truncate(std::string_view text, std::size_t limit) {
    if (text.size() <= limit) {
        return std::string(text);
    }
    std::size_t start = text.size() - limit;
    // Skip UTF-8 continuation bytes so the result starts on a code point.
    while (start < text.size() && (static_cast<unsigned char>(text[start]) & 0xC0) == 0x80) {
        ++start;
    }
    return std::string(text.substr(start));
}

std::string timeout_message(double seconds) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "Execution timed out after %gs.", seconds);
    return buf;
}

std::string build_script(const Problem& problem, const CandidateSolution& solution, const TestCase& test) {
    std::string script = problem.setup_code.value_or("");
    if (!script.empty() && script.back() != '\n' && script.back() != ' ' && script.back() != '\t') {
        script += '\n';
    }
    script += solution.text;
    if (!script.empty() && script.back() != '\n') {
        script += '\n';
    }
    script += test.source;
    if (script.back() != '\n') {
        script += '\n';
    }
    return script;
}

namespace {

std::optional<std::string> shim_location(const SandboxOptions& options) {
    if (options.shim_path) {
        return options.shim_path;
    }
    if (const char* env = std::getenv("LETI_SHIM_PATH"); env != nullptr && *env != '\0') {
        return std::string(env);
    }
    return std::nullopt;
}

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

ExecutionOutcome execute_script(std::string_view script, const ExecutionLimits& limits,
                                const SandboxOptions& options) {
    if (options.backend == Backend::Shim) {
        if (auto shim = shim_location(options)) {
            ExecutionOutcome outcome = run_interpreter(options.interpreter, script, limits, {*shim});
            if (outcome.exit_status.kind != ExitStatus::Kind::Normal) {
                return outcome;
            }
            if (outcome.exit_status.code == 0) {
                try {
                    ShimReport report = parse_shim_report(outcome.stdout_text);
                    ExecutionOutcome folded;
                    folded.duration = outcome.duration;
                    folded.stdout_text = std::move(report.stdout_text);
                    if (report.passed) {
                        folded.exit_status = ExitStatus::normal(0);
                    } else {
                        folded.exit_status = ExitStatus::normal(1);
                        folded.stderr_text = *report.traceback;
                        folded.reported_exception = report.exc_type;
                        // Keep the trace's last exception line equal to the
                        // reported identity so f_text names it too.
                        if (extract_exception_name(folded.stderr_text) != report.exc_type) {
                            if (!folded.stderr_text.empty() && folded.stderr_text.back() != '\n') {
                                folded.stderr_text += '\n';
                            }
                            folded.stderr_text += *report.exc_type + "\n";
                        }
                    }
                    return folded;
                } catch (const ParseError&) {
                    // fall through to raw mode
                }
            }
        }
    }
    return run_interpreter(options.interpreter, script, limits);
}

Feedback evaluate_solution(const Problem& problem, const CandidateSolution& solution,
                           const ExecutionLimits& limits, const SandboxOptions& options) {
    std::vector<TestOutcome> per_test;
    per_test.reserve(problem.tests.size());
    std::optional<ErrorClass> first_class;
    std::optional<std::string> first_text;

    for (const auto& test : problem.tests) {
        ExecutionOutcome outcome = execute_script(build_script(problem, solution, test), limits, options);
        if (outcome.exit_status.kind == ExitStatus::Kind::SpawnFailed) {
            throw InfrastructureError("cannot spawn interpreter: " + outcome.exit_status.reason);
        }
        TestStatus status = TestStatus::Pass;
        if (outcome.exit_status.kind == ExitStatus::Kind::TimedOut) {
            status = TestStatus::Timeout;
        } else if (outcome.exit_status.code != 0) {
            status = TestStatus::Fail;
        }
        per_test.push_back({test.index, status});
        if (status != TestStatus::Pass && !first_class) {
            first_class = classify_trace(outcome);
            if (status == TestStatus::Timeout) {
                first_text = timeout_message(limits.wall_clock_timeout);
            } else if (!is_blank(outcome.stderr_text)) {
                first_text = tail_truncate(outcome.stderr_text);
            }
        }
    }
    if (!first_class) {
        return Feedback::passing(std::move(per_test));
    }
    return Feedback(0, std::move(first_text), std::move(*first_class), std::move(per_test));
}

std::vector<BatchResult> evaluate_batch(const std::vector<std::pair<Problem, CandidateSolution>>& pairs,
                                        const ExecutionLimits& limits, const SandboxOptions& options) {
    limits.validate();
    std::vector<BatchResult> results(pairs.size());
    if (pairs.empty()) {
        return results;
    }

    // Collapse identical work items; evaluation is deterministic per pair.
    std::unordered_map<std::string, std::size_t> unique_index;
    std::vector<std::size_t> work;               // indices into pairs
    std::vector<std::size_t> owner(pairs.size());  // pair -> work slot
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [problem, solution] = pairs[i];
        std::string key = problem.id;
        key += '\0';
        key += problem.setup_code.value_or("");
        for (const auto& t : problem.tests) {
            key += '\0';
            key += t.source;
        }
        key += '\x01';
        key += solution.text;
        auto [it, inserted] = unique_index.emplace(std::move(key), work.size());
        if (inserted) {
            work.push_back(i);
        }
        owner[i] = it->second;
    }

    std::vector<BatchResult> unique_results(work.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t w = next.fetch_add(1); w < work.size(); w = next.fetch_add(1)) {
            const auto& [problem, solution] = pairs[work[w]];
            try {
                unique_results[w].feedback = evaluate_solution(problem, solution, limits, options);
            } catch (const std::exception& e) {
                unique_results[w].infrastructure_error = e.what();
            }
        }
    };
    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min(limits.max_concurrent == 0 ? 1 : limits.max_concurrent, work.size()));
    {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t t = 0; t < n_workers; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        results[i] = unique_results[owner[i]];
    }
    return results;
}

}  // namespace leti
