// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/generator.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "leti/error.hpp"
#include "leti/fcft.hpp"
#include "leti/problem.hpp"
#include "leti/tokenizer.hpp"

namespace leti {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

GeneratorKind parse_generator_kind(std::string_view text) {
    if (text == "remote") return GeneratorKind::Remote;
    if (text == "mock") return GeneratorKind::Mock;
    if (text == "trigram") return GeneratorKind::Trigram;
    throw ValidationError("unknown generator kind '" + std::string(text) + "' (expected remote, mock or trigram)");
}

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::Remote: return "remote";
        case GeneratorKind::Mock: return "mock";
        case GeneratorKind::Trigram: return "trigram";
    }
    return "trigram";
}

void GeneratorSpec::validate() const {
    if (max_new_tokens <= 0) {
        throw ValidationError("generator.max_new_tokens must be positive");
    }
    if (default_temperature < 0.0) {
        throw ValidationError("generator.default_temperature must be non-negative");
    }
    if (!(alpha > 0.0)) {
        throw ValidationError("generator.alpha must be positive");
    }
    if (!(timeout > 0.0)) {
        throw ValidationError("generator.timeout must be positive");
    }
    if (retries < 0) {
        throw ValidationError("generator.retries must be non-negative");
    }
    if (kind == GeneratorKind::Mock && mock_table.empty()) {
        throw ValidationError("mock generator needs generator.mock_table");
    }
}

// ------------------------------------------------------------------- common

Generator::Generator(int max_new_tokens) : max_new_tokens_(max_new_tokens) {
    if (max_new_tokens_ <= 0) {
        throw ValidationError("max_new_tokens must be positive");
    }
}

void Generator::check_request(const SampleRequest& request) {
    if (request.n < 1) {
        throw ValidationError("n must be at least 1");
    }
    if (request.temperature < 0.0) {
        throw ValidationError("temperature must be non-negative");
    }
    if (request.condition && !vocab::is_reward_token(*request.condition)) {
        throw ValidationError("condition must be <|good|> or <|bad|>, got '" + *request.condition + "'");
    }
}

std::string Generator::cap(std::string_view completion) const {
    return cap_completion(completion, max_new_tokens_);
}

std::string cap_completion(std::string_view completion, int max_new_tokens) {
    std::size_t cut = completion.size();
    for (auto lit : vocab::kAll) {
        cut = std::min(cut, completion.find(lit));
    }
    completion = completion.substr(0, cut);
    auto tokens = tokenize(completion);
    if (max_new_tokens >= 0 && tokens.size() > static_cast<std::size_t>(max_new_tokens)) {
        tokens.resize(static_cast<std::size_t>(max_new_tokens));
        return detokenize(tokens);
    }
    return std::string(completion);
}

std::string conditioned_prefix(const SampleRequest& request) {
    std::string prefix = request.condition.value_or("");
    prefix += request.prompt;
    prefix += vocab::kSolution;
    return prefix;
}

// --------------------------------------------------------------------- mock

void MockGenerator::add(std::string prompt, std::string condition, std::vector<std::string> completions) {
    if (completions.empty()) {
        throw ValidationError("mock table entry for '" + prompt + "' has no completions");
    }
    if (condition != kAnyCondition && !vocab::is_reward_token(condition)) {
        throw ValidationError("mock table condition must be any, <|good|> or <|bad|>");
    }
    table_[{std::move(prompt), std::move(condition)}] = std::move(completions);
}

MockGenerator MockGenerator::from_json(const json& table, int max_new_tokens) {
    if (!table.is_array()) {
        throw ParseError("mock table must be a JSON array");
    }
    MockGenerator gen(max_new_tokens);
    for (const auto& entry : table) {
        try {
            std::string condition = std::string(kAnyCondition);
            if (auto it = entry.find("condition"); it != entry.end() && !it->is_null()) {
                condition = it->get<std::string>();
            }
            gen.add(entry.at("prompt").get<std::string>(), std::move(condition),
                    entry.at("completions").get<std::vector<std::string>>());
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed mock table entry: ") + e.what());
        }
    }
    return gen;
}

MockGenerator MockGenerator::load(const std::filesystem::path& path, int max_new_tokens) {
    try {
        return from_json(json::parse(read_file(path)), max_new_tokens);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::string> MockGenerator::sample(const SampleRequest& request) const {
    check_request(request);
    auto it = table_.end();
    if (request.condition) {
        it = table_.find({request.prompt, *request.condition});
    }
    if (it == table_.end()) {
        it = table_.find({request.prompt, std::string(kAnyCondition)});
    }
    if (it == table_.end()) {
        throw ValidationError("mock generator has no entry for prompt '" + request.prompt + "'");
    }
    const auto& list = it->second;
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(request.n));
    for (int i = 0; i < request.n; ++i) {
        out.push_back(cap(list[static_cast<std::size_t>(i) % list.size()]));
    }
    return out;
}

// ------------------------------------------------------------------- remote

RemoteGenerator::RemoteGenerator(const GeneratorSpec& spec)
    : Generator(spec.max_new_tokens), timeout_(spec.timeout), retries_(spec.retries), stop_(spec.stop) {
    std::string url = spec.endpoint;
    if (url.empty()) {
        if (const char* env = std::getenv("LETI_GEN_ENDPOINT")) {
            url = env;
        }
    }
    if (url.empty()) {
        throw ValidationError("remote generator needs generator.endpoint or LETI_GEN_ENDPOINT");
    }
    constexpr std::string_view scheme = "http://";
    if (url.compare(0, scheme.size(), scheme) != 0) {
        throw ValidationError("remote endpoint must be an http:// URL, got '" + url + "'");
    }
    auto slash = url.find('/', scheme.size());
    host_ = url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
    if (host_.size() == scheme.size()) {
        throw ValidationError("remote endpoint has no host: '" + url + "'");
    }
}

std::vector<std::string> RemoteGenerator::sample(const SampleRequest& request) const {
    check_request(request);
    const json body{{"prompt", conditioned_prefix(request)},
                    {"n", request.n},
                    {"temperature", request.temperature},
                    {"max_new_tokens", max_new_tokens()},
                    {"stop", stop_}};
    const std::string payload = body.dump();
    const auto whole = static_cast<time_t>(timeout_);
    const auto micros = static_cast<time_t>((timeout_ - static_cast<double>(whole)) * 1e6);

    std::string last_error;
    const int attempts = retries_ + 1;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Client client(host_);
        client.set_connection_timeout(whole, micros);
        client.set_read_timeout(whole, micros);
        client.set_write_timeout(whole, micros);
        auto res = client.Post(path_, payload, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
        } else if (res->status >= 400 && res->status < 500) {
            throw TransportError("endpoint rejected the request with HTTP " + std::to_string(res->status), attempt);
        } else if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
        } else {
            json reply;
            try {
                reply = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw TransportError(std::string("endpoint returned invalid JSON: ") + e.what(), attempt);
            }
            auto it = reply.find("completions");
            if (it == reply.end() || !it->is_array() ||
                it->size() != static_cast<std::size_t>(request.n)) {
                throw TransportError("endpoint reply must carry exactly n completions", attempt);
            }
            std::vector<std::string> out;
            out.reserve(it->size());
            for (const auto& c : *it) {
                if (!c.is_string()) {
                    throw TransportError("endpoint reply has a non-string completion", attempt);
                }
                out.push_back(cap(c.get<std::string>()));
            }
            return out;
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        }
    }
    throw TransportError("remote generation at " + host_ + path_ + " failed: " + last_error, attempts);
}

// ------------------------------------------------------------------ trigram

std::vector<std::string> TrigramGenerator::sample(const SampleRequest& request) const {
    check_request(request);
    const std::string prefix = conditioned_prefix(request);
    const std::uint64_t base = splitmix64(request.seed ^ fnv1a(prefix));
    TrigramSampler sampler(state_);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(request.n));
    for (int i = 0; i < request.n; ++i) {
        const auto seed = splitmix64(base + static_cast<std::uint64_t>(i));
        out.push_back(cap(sampler.complete(prefix, request.temperature, seed, max_new_tokens())));
    }
    return out;
}

// ------------------------------------------------------------------ factory

TrigramState load_trigram_state(const std::filesystem::path& path) {
    try {
        return TrigramState::from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_trigram_state(const std::filesystem::path& path, const TrigramState& state) {
    write_file(path, state.to_json().dump() + "\n");
}

std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec, const std::filesystem::path& base_dir) {
    spec.validate();
    switch (spec.kind) {
        case GeneratorKind::Remote:
            return std::make_unique<RemoteGenerator>(spec);
        case GeneratorKind::Mock:
            return std::make_unique<MockGenerator>(
                MockGenerator::load(resolve(base_dir, spec.mock_table), spec.max_new_tokens));
        case GeneratorKind::Trigram: {
            TrigramState state = spec.state_path.empty() ? TrigramState(spec.alpha)
                                                         : load_trigram_state(resolve(base_dir, spec.state_path));
            return std::make_unique<TrigramGenerator>(std::move(state), spec.max_new_tokens);
        }
    }
    throw ValidationError("unknown generator kind");
}

}  // namespace leti
