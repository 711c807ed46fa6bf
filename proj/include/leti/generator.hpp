// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sampling interface for the policy being improved. Three kinds exist: a
// remote HTTP endpoint, a table-driven mock, and the trainable trigram model.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "leti/trigram.hpp"

namespace leti {

enum class GeneratorKind { Remote, Mock, Trigram };

GeneratorKind parse_generator_kind(std::string_view text);
std::string_view to_string(GeneratorKind kind);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Trigram;
    std::string endpoint;                 // remote; falls back to LETI_GEN_ENDPOINT
    std::string mock_table;               // mock; path to a JSON table
    std::string state_path;               // trigram; empty starts from an empty model
    double alpha = 1.0;                   // trigram smoothing for a fresh state
    double default_temperature = 1.0;
    int max_new_tokens = 256;
    double timeout = 60.0;                // remote, seconds per request
    int retries = 2;                      // remote, extra attempts after the first
    std::vector<std::string> stop;        // forwarded to the remote endpoint

    /// Throws ValidationError on out-of-range fields.
    void validate() const;
};

struct SampleRequest {
    std::string prompt;
    int n = 1;
    double temperature = 1.0;
    /// <|good|> or <|bad|>; prepended to the prompt exactly once.
    std::optional<std::string> condition;
    std::uint64_t seed = 0;
};

class Generator {
public:
    virtual ~Generator() = default;

    /// Exactly `request.n` completions, each cut at the first vocabulary
    /// literal and capped at max_new_tokens tokens. Safe for concurrent use.
    virtual std::vector<std::string> sample(const SampleRequest& request) const = 0;

    virtual GeneratorKind kind() const noexcept = 0;
    int max_new_tokens() const noexcept { return max_new_tokens_; }

protected:
    explicit Generator(int max_new_tokens);
    /// Validates n, temperature and condition.
    static void check_request(const SampleRequest& request);
    std::string cap(std::string_view completion) const;

private:
    int max_new_tokens_;
};

/// Cuts `completion` before the first vocabulary literal, then keeps at most
/// `max_new_tokens` tokens.
std::string cap_completion(std::string_view completion, int max_new_tokens);

/// (prompt, condition) -> completions. A condition of "any" (or a missing
/// one in the JSON form) matches every request for that prompt; exact
/// condition entries win. Completions cycle when n exceeds the list.
class MockGenerator final : public Generator {
public:
    static constexpr std::string_view kAnyCondition = "any";

    explicit MockGenerator(int max_new_tokens = 256) : Generator(max_new_tokens) {}

    void add(std::string prompt, std::string condition, std::vector<std::string> completions);

    /// JSON form: [{"prompt": str, "condition": str?, "completions": [str]}].
    static MockGenerator from_json(const nlohmann::json& table, int max_new_tokens = 256);
    static MockGenerator load(const std::filesystem::path& path, int max_new_tokens = 256);

    /// Throws ValidationError for a prompt missing from the table.
    std::vector<std::string> sample(const SampleRequest& request) const override;
    GeneratorKind kind() const noexcept override { return GeneratorKind::Mock; }

private:
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> table_;
};

/// JSON-over-HTTP client:
/// POST {"prompt", "n", "temperature", "max_new_tokens", "stop"} -> {"completions": [str]}.
/// The posted prompt is condition ⊕ prompt ⊕ <|sol|>.
class RemoteGenerator final : public Generator {
public:
    /// Throws ValidationError when no endpoint is configured or the URL is
    /// not plain http.
    explicit RemoteGenerator(const GeneratorSpec& spec);

    /// Throws TransportError after `retries + 1` failed attempts.
    std::vector<std::string> sample(const SampleRequest& request) const override;
    GeneratorKind kind() const noexcept override { return GeneratorKind::Remote; }

    const std::string& host() const { return host_; }
    const std::string& path() const { return path_; }

private:
    std::string host_;  // scheme://host[:port]
    std::string path_;
    double timeout_;
    int retries_;
    std::vector<std::string> stop_;
};

/// Conditional trigram sampler over a mutable state. Sampling and fitting
/// must not overlap (single writer, many readers).
class TrigramGenerator final : public Generator {
public:
    TrigramGenerator(TrigramState state, int max_new_tokens = 256)
        : Generator(max_new_tokens), state_(std::move(state)) {}

    /// Completion i uses a seed derived from (seed, conditioned prompt, i),
    /// so results do not depend on n or on call order.
    std::vector<std::string> sample(const SampleRequest& request) const override;
    GeneratorKind kind() const noexcept override { return GeneratorKind::Trigram; }

    const TrigramState& state() const noexcept { return state_; }
    TrigramState& state() noexcept { return state_; }

private:
    TrigramState state_;
};

/// Text the model continues: condition ⊕ prompt ⊕ <|sol|>.
std::string conditioned_prefix(const SampleRequest& request);

/// Builds the generator described by `spec`. Relative paths resolve
/// against `base_dir`.
std::unique_ptr<Generator> make_generator(const GeneratorSpec& spec, const std::filesystem::path& base_dir = {});

TrigramState load_trigram_state(const std::filesystem::path& path);
void save_trigram_state(const std::filesystem::path& path, const TrigramState& state);

}  // namespace leti
