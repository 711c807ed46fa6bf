// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/config.hpp"

#include <cctype>
#include <cstdlib>
#include <set>

#include "leti/error.hpp"
#include "leti/postprocess.hpp"
#include "leti/problem.hpp"

namespace leti {

using nlohmann::json;

// --------------------------------------------------------------------- TOML

namespace {

class TomlValueParser {
public:
    TomlValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    json parse_line_value() {
        json v = value();
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] != '#') {
            fail("unexpected trailing characters");
        }
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError("TOML: " + what, line_); }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    json value() {
        skip_ws();
        if (pos_ >= text_.size()) fail("missing value");
        const char c = text_[pos_];
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (text_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return number();
    }

    json basic_string() {
        ++pos_;
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            char c = text_[pos_++];
            if (c != '\\') {
                out += c;
                continue;
            }
            if (pos_ >= text_.size()) fail("unterminated escape");
            char e = text_[pos_++];
            switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
            }
        }
        if (pos_ >= text_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    json literal_string() {
        ++pos_;
        auto end = text_.find('\'', pos_);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string out(text_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return out;
    }

    json array() {
        ++pos_;
        json arr = json::array();
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ']') {
            ++pos_;
            return arr;
        }
        while (true) {
            arr.push_back(value());
            skip_ws();
            if (pos_ >= text_.size()) fail("unterminated array");
            if (text_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ']') {
                    ++pos_;
                    return arr;
                }
                continue;
            }
            if (text_[pos_] == ']') {
                ++pos_;
                return arr;
            }
            fail("expected ',' or ']' in array");
        }
    }

    json number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                                       text_[pos_] == '+' || text_[pos_] == '-' || text_[pos_] == '_')) {
            ++pos_;
        }
        std::string raw;
        for (char c : text_.substr(start, pos_ - start)) {
            if (c != '_') raw += c;
        }
        if (raw.empty()) fail("expected a value");
        const bool is_float = raw.find_first_of(".eE") != std::string::npos && raw.find("0x") == std::string::npos;
        char* end = nullptr;
        if (is_float) {
            double d = std::strtod(raw.c_str(), &end);
            if (*end != '\0') fail("bad number '" + raw + "'");
            return d;
        }
        long long v = std::strtoll(raw.c_str(), &end, 10);
        if (*end != '\0') fail("bad value '" + raw + "'");
        return v;
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
}

}  // namespace

json parse_toml_subset(std::string_view text) {
    json root = json::object();
    json* table = &root;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;

        if (line.front() == '[') {
            auto close = line.find(']');
            if (close == std::string_view::npos || line.substr(0, 2) == "[[") {
                throw ParseError("TOML: malformed table header", line_no);
            }
            auto rest = trim(line.substr(close + 1));
            if (!rest.empty() && rest.front() != '#') {
                throw ParseError("TOML: trailing characters after table header", line_no);
            }
            table = &root;
            std::string_view path = trim(line.substr(1, close - 1));
            while (true) {
                auto dot = path.find('.');
                auto part = trim(path.substr(0, dot));
                if (!valid_key(part)) throw ParseError("TOML: bad table name", line_no);
                json& next = (*table)[std::string(part)];
                if (next.is_null()) next = json::object();
                if (!next.is_object()) throw ParseError("TOML: table redefines a value", line_no);
                table = &next;
                if (dot == std::string_view::npos) break;
                path = path.substr(dot + 1);
            }
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("TOML: expected key = value", line_no);
        }
        auto key = trim(line.substr(0, eq));
        if (!valid_key(key)) {
            throw ParseError("TOML: bad key '" + std::string(key) + "'", line_no);
        }
        if (table->contains(std::string(key))) {
            throw ParseError("TOML: duplicate key '" + std::string(key) + "'", line_no);
        }
        (*table)[std::string(key)] = TomlValueParser(line.substr(eq + 1), line_no).parse_line_value();
    }
    return root;
}

// ------------------------------------------------------------------- config

RunConfig::RunConfig() : stops(default_stop_sequences()), interpreter(default_interpreter()) {}

void RunConfig::validate() const {
    if (problems_path.empty()) throw ValidationError("problems_path is required");
    if (iterations < 1) throw ValidationError("iterations must be at least 1");
    if (n_samples < 1) throw ValidationError("n_samples must be at least 1");
    if (eval_samples < 1) throw ValidationError("eval_samples must be at least 1");
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (train_temperature < 0.0 || eval_temperature < 0.0) {
        throw ValidationError("temperatures must be non-negative");
    }
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    if (mixing_enabled && !pretrain_corpus_path) {
        throw ValidationError("mixing_enabled requires pretrain_corpus_path");
    }
    if (interpreter.empty()) throw ValidationError("interpreter must not be empty");
    if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..") {
        throw ValidationError("run_id must be a plain directory name");
    }
    limits.validate();
    generator.validate();
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
    std::filesystem::path p(path);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
}

SandboxOptions RunConfig::sandbox_options() const {
    SandboxOptions o;
    o.interpreter = interpreter;
    if (shim_path) o.shim_path = resolve(*shim_path).string();
    o.backend = backend;
    return o;
}

json RunConfig::to_json() const {
    json gen{{"kind", to_string(generator.kind)},
             {"alpha", generator.alpha},
             {"default_temperature", generator.default_temperature},
             {"max_new_tokens", generator.max_new_tokens},
             {"timeout", generator.timeout},
             {"retries", generator.retries},
             {"stop", generator.stop}};
    if (!generator.endpoint.empty()) gen["endpoint"] = generator.endpoint;
    if (!generator.mock_table.empty()) gen["mock_table"] = generator.mock_table;
    if (!generator.state_path.empty()) gen["state_path"] = generator.state_path;

    json j{{"problems_path", problems_path},
           {"generator", std::move(gen)},
           {"n_samples", n_samples},
           {"train_temperature", train_temperature},
           {"eval_temperature", eval_temperature},
           {"eval_samples", eval_samples},
           {"epochs", epochs},
           {"iterations", iterations},
           {"post_processing", post_processing},
           {"stops", stops},
           {"show_example_test", show_example_test},
           {"mixing_enabled", mixing_enabled},
           {"batch_size", batch_size},
           {"dedup", dedup},
           {"limits",
            {{"timeout_s", limits.wall_clock_timeout},
             {"max_stream_capture", limits.max_stream_capture},
             {"max_concurrent", limits.max_concurrent}}},
           {"backend", to_string(backend)},
           {"interpreter", interpreter},
           {"seed", seed},
           {"run_id", run_id}};
    if (test_problems_path) j["test_problems_path"] = *test_problems_path;
    if (eval_post_processing) j["eval_post_processing"] = *eval_post_processing;
    if (pretrain_corpus_path) j["pretrain_corpus_path"] = *pretrain_corpus_path;
    if (shim_path) j["shim_path"] = *shim_path;
    return j;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw ValidationError("unknown config key '" + where + key + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where = "") {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config key '" + where + key + "' has the wrong type");
    }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where = "") {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    T value{};
    read(j, key, value, where);
    out = std::move(value);
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ValidationError("config must be an object");
    reject_unknown(j,
                   {"problems_path", "test_problems_path", "generator", "n_samples", "train_temperature",
                    "eval_temperature", "eval_samples", "epochs", "iterations", "post_processing",
                    "eval_post_processing", "stops", "show_example_test", "mixing_enabled", "pretrain_corpus_path",
                    "batch_size", "dedup", "limits", "backend", "interpreter", "shim_path", "seed", "run_id"},
                   "");
    RunConfig c;
    c.base_dir = base_dir;
    read(j, "problems_path", c.problems_path);
    read(j, "test_problems_path", c.test_problems_path);
    read(j, "n_samples", c.n_samples);
    read(j, "train_temperature", c.train_temperature);
    read(j, "eval_temperature", c.eval_temperature);
    read(j, "eval_samples", c.eval_samples);
    read(j, "epochs", c.epochs);
    read(j, "iterations", c.iterations);
    read(j, "post_processing", c.post_processing);
    read(j, "eval_post_processing", c.eval_post_processing);
    read(j, "stops", c.stops);
    read(j, "show_example_test", c.show_example_test);
    read(j, "mixing_enabled", c.mixing_enabled);
    read(j, "pretrain_corpus_path", c.pretrain_corpus_path);
    read(j, "batch_size", c.batch_size);
    read(j, "dedup", c.dedup);
    read(j, "shim_path", c.shim_path);
    read(j, "seed", c.seed);
    read(j, "run_id", c.run_id);
    if (auto it = j.find("backend"); it != j.end()) {
        c.backend = parse_backend(it->get<std::string>());
    }
    if (auto it = j.find("interpreter"); it != j.end()) {
        if (it->is_string()) {
            c.interpreter = split_words(it->get<std::string>());
        } else {
            read(j, "interpreter", c.interpreter);
        }
    }
    if (auto it = j.find("limits"); it != j.end()) {
        reject_unknown(*it, {"timeout_s", "max_stream_capture", "max_concurrent"}, "limits.");
        read(*it, "timeout_s", c.limits.wall_clock_timeout, "limits.");
        read(*it, "max_stream_capture", c.limits.max_stream_capture, "limits.");
        read(*it, "max_concurrent", c.limits.max_concurrent, "limits.");
    }
    if (auto it = j.find("generator"); it != j.end()) {
        const json& g = *it;
        reject_unknown(g,
                       {"kind", "endpoint", "mock_table", "state_path", "alpha", "default_temperature",
                        "max_new_tokens", "timeout", "retries", "stop"},
                       "generator.");
        if (auto k = g.find("kind"); k != g.end()) {
            c.generator.kind = parse_generator_kind(k->get<std::string>());
        }
        read(g, "endpoint", c.generator.endpoint, "generator.");
        read(g, "mock_table", c.generator.mock_table, "generator.");
        read(g, "state_path", c.generator.state_path, "generator.");
        read(g, "alpha", c.generator.alpha, "generator.");
        read(g, "default_temperature", c.generator.default_temperature, "generator.");
        read(g, "max_new_tokens", c.generator.max_new_tokens, "generator.");
        read(g, "timeout", c.generator.timeout, "generator.");
        read(g, "retries", c.generator.retries, "generator.");
        read(g, "stop", c.generator.stop, "generator.");
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json j;
    if (path.extension() == ".toml") {
        j = parse_toml_subset(text);
    } else {
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }
    return RunConfig::from_json(j, path.parent_path());
}

}  // namespace leti
