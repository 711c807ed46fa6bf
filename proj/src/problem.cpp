// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/problem.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "leti/error.hpp"

namespace leti {

using nlohmann::json;

void validate(const Problem& problem) {
    if (problem.id.empty()) {
        throw ValidationError("problem id must be non-empty");
    }
    if (problem.instruction.empty()) {
        throw ValidationError("problem '" + problem.id + "' has an empty instruction");
    }
    if (problem.tests.empty()) {
        throw ValidationError("problem '" + problem.id + "' has no tests");
    }
    for (std::size_t i = 0; i < problem.tests.size(); ++i) {
        if (problem.tests[i].index != i) {
            throw ValidationError("problem '" + problem.id + "': test index mismatch at position " +
                                  std::to_string(i));
        }
        if (problem.tests[i].source.empty()) {
            throw ValidationError("problem '" + problem.id + "': test " + std::to_string(i) +
                                  " has empty source");
        }
    }
}

// ---------------------------------------------------------------- ErrorClass

ErrorClass ErrorClass::other(std::string name) {
    if (name.empty()) {
        name = "Unknown";
    }
    return ErrorClass(Kind::Other, std::move(name));
}

ErrorClass ErrorClass::from_exception_name(const std::optional<std::string>& name) {
    if (!name) {
        return unknown();
    }
    if (*name == "AssertionError") return ErrorClass(Kind::AssertionError);
    if (*name == "SyntaxError") return ErrorClass(Kind::SyntaxError);
    if (*name == "IndentationError") return ErrorClass(Kind::IndentationError);
    if (*name == "NameError") return ErrorClass(Kind::NameError);
    return other(*name);
}

ErrorClass ErrorClass::parse(std::string_view text) {
    if (text == "Pass") return pass();
    if (text == "Timeout") return timeout();
    return from_exception_name(std::string(text));
}

bool ErrorClass::is_canonical_error() const noexcept {
    switch (kind_) {
    case Kind::AssertionError:
    case Kind::SyntaxError:
    case Kind::IndentationError:
    case Kind::NameError:
        return true;
    default:
        return false;
    }
}

std::string ErrorClass::name() const {
    switch (kind_) {
    case Kind::Pass: return "Pass";
    case Kind::AssertionError: return "AssertionError";
    case Kind::SyntaxError: return "SyntaxError";
    case Kind::IndentationError: return "IndentationError";
    case Kind::NameError: return "NameError";
    case Kind::Timeout: return "Timeout";
    case Kind::Other: return other_;
    }
    return other_;
}

std::string_view to_string(TestStatus status) {
    switch (status) {
    case TestStatus::Pass: return "pass";
    case TestStatus::Fail: return "fail";
    case TestStatus::Timeout: return "timeout";
    }
    return "fail";
}

TestStatus parse_test_status(std::string_view text) {
    if (text == "pass") return TestStatus::Pass;
    if (text == "fail") return TestStatus::Fail;
    if (text == "timeout") return TestStatus::Timeout;
    throw ParseError("unknown test status '" + std::string(text) + "'");
}

// ------------------------------------------------------------------ Feedback

Feedback::Feedback(int f_binary, std::optional<std::string> f_text, ErrorClass error_class,
                   std::vector<TestOutcome> per_test)
    : f_binary_(f_binary), f_text_(std::move(f_text)), error_class_(std::move(error_class)),
      per_test_(std::move(per_test)) {
    if (f_binary_ != 0 && f_binary_ != 1) {
        throw ValidationError("f_binary must be 0 or 1");
    }
    bool all_pass = true;
    for (const auto& t : per_test_) {
        all_pass = all_pass && t.status == TestStatus::Pass;
    }
    if ((f_binary_ == 1) != all_pass) {
        throw ValidationError("f_binary must be 1 exactly when every test passes");
    }
    if ((f_binary_ == 1) != error_class_.is_pass()) {
        throw ValidationError("f_binary must be 1 exactly when error_class is Pass");
    }
    if (f_text_ && f_binary_ == 1) {
        throw ValidationError("passing feedback cannot carry f_text");
    }
}

// ---------------------------------------------------------------------- JSON

void to_json(json& j, const Problem& p) {
    json tests = json::array();
    for (const auto& t : p.tests) {
        tests.push_back(t.source);
    }
    j = json{{"id", p.id}, {"instruction", p.instruction}, {"tests", std::move(tests)}};
    if (p.setup_code) {
        j["setup_code"] = *p.setup_code;
    }
}

void from_json(const json& j, Problem& p) {
    p.id = j.at("id").get<std::string>();
    p.instruction = j.at("instruction").get<std::string>();
    p.tests.clear();
    for (const auto& t : j.at("tests")) {
        TestCase tc;
        tc.index = p.tests.size();
        tc.source = t.is_string() ? t.get<std::string>() : t.at("source").get<std::string>();
        p.tests.push_back(std::move(tc));
    }
    p.setup_code.reset();
    if (auto it = j.find("setup_code"); it != j.end() && !it->is_null()) {
        p.setup_code = it->get<std::string>();
    }
}

void to_json(json& j, const CandidateSolution& s) {
    j = json{{"problem_id", s.problem_id},
             {"sample_index", s.sample_index},
             {"raw_text", s.raw_text},
             {"text", s.text},
             {"conditioned_on", s.conditioned_on ? json(*s.conditioned_on) : json(nullptr)}};
}

void from_json(const json& j, CandidateSolution& s) {
    s.problem_id = j.at("problem_id").get<std::string>();
    s.sample_index = j.at("sample_index").get<int>();
    s.raw_text = j.at("raw_text").get<std::string>();
    s.text = j.value("text", s.raw_text);
    s.conditioned_on.reset();
    if (auto it = j.find("conditioned_on"); it != j.end() && !it->is_null()) {
        s.conditioned_on = it->get<std::string>();
    }
}

void to_json(json& j, const Feedback& f) {
    json per_test = json::array();
    for (const auto& t : f.per_test()) {
        per_test.push_back({{"index", t.index}, {"status", std::string(to_string(t.status))}});
    }
    j = json{{"f_binary", f.f_binary()},
             {"f_text", f.f_text() ? json(*f.f_text()) : json(nullptr)},
             {"error_class", f.error_class().name()},
             {"per_test", std::move(per_test)}};
}

Feedback feedback_from_json(const json& j) {
    std::optional<std::string> text;
    if (auto it = j.find("f_text"); it != j.end() && !it->is_null()) {
        text = it->get<std::string>();
    }
    std::vector<TestOutcome> per_test;
    for (const auto& t : j.at("per_test")) {
        per_test.push_back({t.at("index").get<std::size_t>(),
                            parse_test_status(t.at("status").get<std::string>())});
    }
    return Feedback(j.at("f_binary").get<int>(), std::move(text),
                    ErrorClass::parse(j.at("error_class").get<std::string>()), std::move(per_test));
}

void to_json(json& j, const FcftRecord& r) {
    j = json{{"sequence", r.sequence},
             {"problem_id", r.problem_id},
             {"sample_index", r.sample_index},
             {"f_binary", r.f_binary},
             {"iteration", r.iteration}};
    if (r.count > 1) {
        j["count"] = r.count;
    }
}

void from_json(const json& j, FcftRecord& r) {
    r.sequence = j.at("sequence").get<std::string>();
    r.problem_id = j.at("problem_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<int>();
    r.f_binary = j.at("f_binary").get<int>();
    r.iteration = j.at("iteration").get<int>();
    r.count = j.value("count", 1);
}

// ----------------------------------------------------------------------- I/O

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InfrastructureError("cannot open '" + path.string() + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        ++line_no;
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") != std::string_view::npos) {
            fn(line, line_no);
        }
        start = end + 1;
    }
}

}  // namespace

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::vector<json> rows;
    const std::string text = read_file(path);
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
    });
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<Problem> parse_problems(std::string_view jsonl) {
    std::vector<Problem> problems;
    std::unordered_set<std::string> seen;
    for_each_line(jsonl, [&](std::string_view line, std::size_t line_no) {
        Problem p;
        try {
            from_json(json::parse(line), p);
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed problem: ") + e.what(), line_no);
        }
        validate(p);
        if (!seen.insert(p.id).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate problem id '" +
                                  p.id + "'");
        }
        problems.push_back(std::move(p));
    });
    return problems;
}

std::vector<Problem> load_problems(const std::filesystem::path& path) {
    return parse_problems(read_file(path));
}

void write_problems(const std::filesystem::path& path, const std::vector<Problem>& problems) {
    std::vector<json> rows;
    rows.reserve(problems.size());
    for (const auto& p : problems) {
        rows.emplace_back(p);
    }
    write_jsonl(path, rows);
}

}  // namespace leti
