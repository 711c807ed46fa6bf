// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared domain types and the problem-corpus loader.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace leti {

struct TestCase {
    std::size_t index = 0;
    std::string source;

    bool operator==(const TestCase&) const = default;
};

struct Problem {
    std::string id;
    std::string instruction;
    std::vector<TestCase> tests;
    std::optional<std::string> setup_code;

    bool operator==(const Problem&) const = default;
};

/// Throws ValidationError when an invariant is broken (empty id/instruction,
/// no tests, empty test source, or misnumbered test indices).
void validate(const Problem& problem);

struct CandidateSolution {
    std::string problem_id;
    int sample_index = 0;
    std::string raw_text;
    std::string text;
    std::optional<std::string> conditioned_on;

    bool operator==(const CandidateSolution&) const = default;
};

class ErrorClass {
public:
    enum class Kind { Pass, AssertionError, SyntaxError, IndentationError, NameError, Timeout, Other };

    ErrorClass() = default;
    static ErrorClass pass() { return ErrorClass(Kind::Pass); }
    static ErrorClass timeout() { return ErrorClass(Kind::Timeout); }
    /// `name` is the verbatim exception name, or "Unknown".
    static ErrorClass other(std::string name);
    static ErrorClass unknown() { return other("Unknown"); }

    /// Maps a parsed exception name onto the canonical classes, falling back
    /// to Other(name). Absent names map to Other("Unknown").
    static ErrorClass from_exception_name(const std::optional<std::string>& name);

    /// Inverse of name(); used when reading persisted feedback.
    static ErrorClass parse(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    bool is_pass() const noexcept { return kind_ == Kind::Pass; }
    bool is_canonical_error() const noexcept;

    /// "Pass", "AssertionError", ..., "Timeout", or the Other payload.
    std::string name() const;

    bool operator==(const ErrorClass&) const = default;
    auto operator<=>(const ErrorClass& other) const { return name() <=> other.name(); }

private:
    explicit ErrorClass(Kind kind, std::string other = {}) : kind_(kind), other_(std::move(other)) {}

    Kind kind_ = Kind::Pass;
    std::string other_;
};

enum class TestStatus { Pass, Fail, Timeout };

std::string_view to_string(TestStatus status);
TestStatus parse_test_status(std::string_view text);

struct TestOutcome {
    std::size_t index = 0;
    TestStatus status = TestStatus::Pass;

    bool operator==(const TestOutcome&) const = default;
};

/// Binary + textual execution feedback. The constructor enforces
/// f_binary = 1 <=> every test passed <=> error_class = Pass, and
/// f_text present => f_binary = 0.
class Feedback {
public:
    Feedback(int f_binary, std::optional<std::string> f_text, ErrorClass error_class,
             std::vector<TestOutcome> per_test);

    static Feedback passing(std::vector<TestOutcome> per_test) {
        return Feedback(1, std::nullopt, ErrorClass::pass(), std::move(per_test));
    }

    int f_binary() const noexcept { return f_binary_; }
    const std::optional<std::string>& f_text() const noexcept { return f_text_; }
    const ErrorClass& error_class() const noexcept { return error_class_; }
    const std::vector<TestOutcome>& per_test() const noexcept { return per_test_; }

    bool operator==(const Feedback&) const = default;

private:
    int f_binary_;
    std::optional<std::string> f_text_;
    ErrorClass error_class_;
    std::vector<TestOutcome> per_test_;
};

struct FcftRecord {
    std::string sequence;
    std::string problem_id;
    int sample_index = 0;
    int f_binary = 0;
    int iteration = 0;
    /// Number of collapsed duplicates; only serialized when greater than one.
    int count = 1;

    bool operator==(const FcftRecord&) const = default;
};

// JSON mapping used by every persisted file.
void to_json(nlohmann::json& j, const Problem& p);
void from_json(const nlohmann::json& j, Problem& p);
void to_json(nlohmann::json& j, const CandidateSolution& s);
void from_json(const nlohmann::json& j, CandidateSolution& s);
void to_json(nlohmann::json& j, const Feedback& f);
Feedback feedback_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const FcftRecord& r);
void from_json(const nlohmann::json& j, FcftRecord& r);

/// Reads a JSONL corpus; one problem per non-blank line. `tests` may be an
/// array of strings or of {"source": ...} objects. Unknown keys are ignored.
std::vector<Problem> load_problems(const std::filesystem::path& path);
std::vector<Problem> parse_problems(std::string_view jsonl);
void write_problems(const std::filesystem::path& path, const std::vector<Problem>& problems);

// Generic JSONL helpers.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace leti
