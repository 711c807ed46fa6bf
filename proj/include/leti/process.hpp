// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Runs one script in an external interpreter subprocess: fresh temporary
// working directory, scrubbed environment, hard wall-clock kill, capped
// stream capture.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace leti {

struct ExecutionLimits {
    double wall_clock_timeout = 10.0;          // seconds
    std::size_t max_stream_capture = 65536;    // bytes per stream
    std::size_t max_concurrent = std::thread::hardware_concurrency();

    /// Throws ValidationError on a non-positive timeout or capture cap.
    void validate() const;
};

struct ExitStatus {
    enum class Kind { Normal, TimedOut, SpawnFailed };

    Kind kind = Kind::Normal;
    int code = 0;              // Normal only; 128+signal when killed by a signal
    std::string reason;        // SpawnFailed only

    static ExitStatus normal(int code) { return {Kind::Normal, code, {}}; }
    static ExitStatus timed_out() { return {Kind::TimedOut, 0, {}}; }
    static ExitStatus spawn_failed(std::string reason) { return {Kind::SpawnFailed, 0, std::move(reason)}; }

    bool is_normal(int expected) const { return kind == Kind::Normal && code == expected; }
};

struct ExecutionOutcome {
    ExitStatus exit_status;
    std::string stdout_text;
    std::string stderr_text;
    double duration = 0.0;  // seconds
    /// Exception class reported by an in-interpreter runner, when one ran.
    /// Takes precedence over the name parsed from stderr.
    std::optional<std::string> reported_exception;
};

/// Appended to a stream once its capture cap is reached.
inline constexpr std::string_view kTruncationMarker = "\n[... output truncated ...]\n";

/// Replaces the per-run temporary directory inside tracebacks.
inline constexpr std::string_view kSourcePathToken = "<src>";

/// Interpreter command line: LETI_INTERPRETER (whitespace-split) when set,
/// otherwise "python3".
std::vector<std::string> default_interpreter();

/// Resolves argv[0] against PATH. Returns an empty string when not found.
std::string resolve_executable(const std::string& name);

/// Runs `interpreter... <script_file> extra_args...` where the script is
/// written to a fresh temporary directory. Never throws for program-level
/// failures; a missing interpreter yields ExitStatus::spawn_failed.
ExecutionOutcome run_interpreter(const std::vector<std::string>& interpreter, std::string_view script,
                                 const ExecutionLimits& limits,
                                 const std::vector<std::string>& leading_args = {});

}  // namespace leti
