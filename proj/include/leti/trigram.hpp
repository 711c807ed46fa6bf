// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Count-based conditional trigram model used as a desk-scale trainable
// generator.
//
// Counts are kept per conditioning stratum: a sequence whose first token is
// <|good|> or <|bad|> is counted in that stratum, anything else in the
// unconditioned stratum. Every observation is also added to a pooled table.
// The next-token distribution for (stratum, t[-2], t[-1]) is Laplace
// smoothed over the whole vocabulary:
//
//   P(w | ctx) = (count(ctx, w) + alpha) / (count(ctx) + alpha * |V|)
//
// When a reward stratum has never seen the context the unconditioned table
// is consulted, then the pooled table; when no table has seen it the
// distribution is uniform.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace leti {

class TrigramState {
public:
    using TokenId = std::uint32_t;

    /// Context padding; never part of the vocabulary.
    static constexpr std::string_view kBegin = "<s>";
    /// Emitted after the last token of every fitted sequence.
    static constexpr std::string_view kEnd = "</s>";

    enum class Stratum : std::uint8_t { Unconditioned = 0, Good = 1, Bad = 2, Pooled = 3 };

    /// `reserve_special_tokens` seeds the vocabulary with the four feedback
    /// literals, <|sol|> and the end token.
    explicit TrigramState(double smoothing_alpha = 1.0, bool reserve_special_tokens = true);

    double alpha() const noexcept { return alpha_; }
    std::size_t vocabulary_size() const noexcept { return vocab_.size(); }
    const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
    std::optional<TokenId> id_of(std::string_view token) const;

    /// Adds `epochs` x the trigram occurrences of each sequence.
    void fit(std::span<const std::string> sequences, int epochs = 1);

    /// Smoothed P(next | context implied by `prefix`). `prefix` is raw text;
    /// its leading reward token (if any) selects the stratum.
    double probability(std::string_view prefix, std::string_view next_token) const;

    /// Full next-token distribution after `prefix_tokens`, indexed by id.
    std::vector<double> distribution(std::span<const std::string> prefix_tokens) const;

    /// Sum of log smoothed conditionals of `continuation`'s tokens given
    /// `prefix`. Unseen tokens count as zero-count vocabulary members.
    double logprob(std::string_view continuation, std::string_view prefix) const;

    /// Total observations recorded for a context (stratum table only).
    std::uint64_t context_total(Stratum stratum, std::string_view t2, std::string_view t1) const;

    nlohmann::json to_json() const;
    static TrigramState from_json(const nlohmann::json& j);

    /// FNV-1a over the canonical serialization.
    std::string checksum() const;

    bool operator==(const TrigramState& other) const;

private:
    struct NextCounts {
        std::uint64_t total = 0;
        std::unordered_map<TokenId, std::uint64_t> next;
    };

    double token_probability(std::span<const std::string> context, std::string_view token) const;
    TokenId intern(std::string_view token);
    TokenId lookup_or_unknown(std::string_view token) const;
    static std::uint64_t key(Stratum s, TokenId t2, TokenId t1);
    static Stratum stratum_of(std::span<const std::string> tokens);
    const NextCounts* table_for(Stratum s, TokenId t2, TokenId t1) const;

    double alpha_;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, TokenId> ids_;
    std::unordered_map<std::uint64_t, NextCounts> counts_;

    friend class TrigramSampler;
};

/// Samples completions token by token from a TrigramState. Reserved
/// literals are never emitted; generation ends at the end token or after
/// `max_new_tokens` tokens.
class TrigramSampler {
public:
    explicit TrigramSampler(const TrigramState& state) : state_(state) {}

    /// Temperature 0 is greedy decoding (ties break toward the
    /// lexicographically smallest token); otherwise tokens are drawn from
    /// P^(1/T), renormalized.
    std::string complete(std::string_view prefix, double temperature, std::uint64_t seed,
                         int max_new_tokens) const;

private:
    const TrigramState& state_;
};

}  // namespace leti
