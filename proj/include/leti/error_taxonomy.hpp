// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Classifies interpreter tracebacks into the error classes reported for
// generated programs: AssertionError, SyntaxError, IndentationError,
// NameError, Timeout, Other(name).

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "leti/problem.hpp"
#include "leti/process.hpp"

namespace leti {

/// Name of the last exception reported in `trace`: the identifier before the
/// first ':' (or end of line) on the last non-empty line shaped like
/// `Name` or `Name: message`. Module-qualified names are reduced to the class
/// name. Returns nullopt when no such line exists.
std::optional<std::string> extract_exception_name(std::string_view trace);

/// Total: timed_out -> Timeout, normal(0) -> Pass, anything else is mapped
/// through the exception name parsed from stderr.
ErrorClass classify_trace(const ExecutionOutcome& outcome);

}  // namespace leti
