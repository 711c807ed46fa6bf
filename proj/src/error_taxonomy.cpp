// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/error_taxonomy.hpp"

#include <array>
#include <cctype>

namespace leti {

namespace {

constexpr std::array<std::string_view, 8> kKnownNames = {
    "BaseException",  "Exception",     "KeyboardInterrupt", "StopIteration",
    "StopAsyncIteration", "SystemExit", "GeneratorExit",    "BaseExceptionGroup",
};

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_exception_name(std::string_view name) {
    if (ends_with(name, "Error") || ends_with(name, "Exception") || ends_with(name, "Warning") ||
        ends_with(name, "ExceptionGroup")) {
        return true;
    }
    for (auto known : kKnownNames) {
        if (name == known) {
            return true;
        }
    }
    return false;
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Matches `Name` or `Name: ...` at column 0, where Name may be dotted.
std::optional<std::string_view> match_exception_line(std::string_view line) {
    if (line.empty() || !is_ident_start(line.front())) {
        return std::nullopt;
    }
    std::size_t i = 0;
    std::size_t last_segment = 0;
    while (i < line.size()) {
        if (!is_ident_start(line[i])) {
            return std::nullopt;
        }
        last_segment = i;
        while (i < line.size() && is_ident_char(line[i])) {
            ++i;
        }
        if (i < line.size() && line[i] == '.') {
            ++i;
            continue;
        }
        break;
    }
    if (i < line.size() && line[i] != ':') {
        return std::nullopt;
    }
    std::string_view name = line.substr(last_segment, i - last_segment);
    if (!is_exception_name(name)) {
        return std::nullopt;
    }
    return name;
}

}  // namespace

std::optional<std::string> extract_exception_name(std::string_view trace) {
    std::size_t end = trace.size();
    while (end > 0) {
        std::size_t start = trace.rfind('\n', end - 1);
        start = start == std::string_view::npos ? 0 : start + 1;
        std::string_view line = trace.substr(start, end - start);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.remove_suffix(1);
        }
        if (auto name = match_exception_line(line)) {
            return std::string(*name);
        }
        if (start == 0) {
            break;
        }
        end = start - 1;
    }
    return std::nullopt;
}

ErrorClass classify_trace(const ExecutionOutcome& outcome) {
    switch (outcome.exit_status.kind) {
    case ExitStatus::Kind::TimedOut:
        return ErrorClass::timeout();
    case ExitStatus::Kind::SpawnFailed:
        return ErrorClass::unknown();
    case ExitStatus::Kind::Normal:
        break;
    }
    if (outcome.exit_status.code == 0) {
        return ErrorClass::pass();
    }
    if (outcome.reported_exception && !outcome.reported_exception->empty()) {
        return ErrorClass::from_exception_name(outcome.reported_exception);
    }
    return ErrorClass::from_exception_name(extract_exception_name(outcome.stderr_text));
}

}  // namespace leti
