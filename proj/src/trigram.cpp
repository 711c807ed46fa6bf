// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/trigram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "leti/error.hpp"
#include "leti/fcft.hpp"
#include "leti/tokenizer.hpp"

namespace leti {

using nlohmann::json;

namespace {

constexpr std::uint32_t kIdBits = 31;
constexpr TrigramState::TokenId kPadId = (1u << kIdBits) - 1;
constexpr TrigramState::TokenId kUnknownId = (1u << kIdBits) - 2;

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

TrigramState::TrigramState(double smoothing_alpha, bool reserve_special_tokens) : alpha_(smoothing_alpha) {
    if (!(alpha_ > 0.0)) {
        throw ValidationError("smoothing alpha must be positive");
    }
    if (reserve_special_tokens) {
        for (auto lit : vocab::kAll) {
            intern(lit);
        }
        intern(kEnd);
    }
}

std::optional<TrigramState::TokenId> TrigramState::id_of(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) {
        return std::nullopt;
    }
    return it->second;
}

TrigramState::TokenId TrigramState::intern(std::string_view token) {
    auto [it, inserted] = ids_.emplace(std::string(token), static_cast<TokenId>(vocab_.size()));
    if (inserted) {
        if (vocab_.size() >= kUnknownId) {
            throw ValidationError("trigram vocabulary overflow");
        }
        vocab_.emplace_back(token);
    }
    return it->second;
}

TrigramState::TokenId TrigramState::lookup_or_unknown(std::string_view token) const {
    return id_of(token).value_or(kUnknownId);
}

std::uint64_t TrigramState::key(Stratum s, TokenId t2, TokenId t1) {
    return (static_cast<std::uint64_t>(s) << (2 * kIdBits)) | (static_cast<std::uint64_t>(t2) << kIdBits) | t1;
}

TrigramState::Stratum TrigramState::stratum_of(std::span<const std::string> tokens) {
    if (!tokens.empty()) {
        if (tokens.front() == vocab::kGood) return Stratum::Good;
        if (tokens.front() == vocab::kBad) return Stratum::Bad;
    }
    return Stratum::Unconditioned;
}

const TrigramState::NextCounts* TrigramState::table_for(Stratum s, TokenId t2, TokenId t1) const {
    // A reward-conditioned context never seen under its token falls back to
    // the unconditioned statistics first, then to everything observed.
    const Stratum chain[] = {s, s == Stratum::Unconditioned ? Stratum::Pooled : Stratum::Unconditioned,
                             Stratum::Pooled};
    for (Stratum candidate : chain) {
        auto it = counts_.find(key(candidate, t2, t1));
        if (it != counts_.end() && it->second.total > 0) {
            return &it->second;
        }
    }
    return nullptr;
}

void TrigramState::fit(std::span<const std::string> sequences, int epochs) {
    if (epochs < 1) {
        throw ValidationError("epochs must be at least 1");
    }
    const TokenId end = intern(kEnd);
    const auto weight = static_cast<std::uint64_t>(epochs);
    for (const auto& sequence : sequences) {
        const auto tokens = tokenize(sequence);
        const Stratum s = stratum_of(tokens);
        std::vector<TokenId> ids;
        ids.reserve(tokens.size() + 1);
        for (const auto& t : tokens) {
            ids.push_back(intern(t));
        }
        ids.push_back(end);
        TokenId t2 = kPadId;
        TokenId t1 = kPadId;
        for (TokenId w : ids) {
            for (Stratum target : {s, Stratum::Pooled}) {
                auto& table = counts_[key(target, t2, t1)];
                table.total += weight;
                table.next[w] += weight;
            }
            t2 = t1;
            t1 = w;
        }
    }
}

std::vector<double> TrigramState::distribution(std::span<const std::string> prefix_tokens) const {
    const Stratum s = stratum_of(prefix_tokens);
    TokenId t2 = kPadId;
    TokenId t1 = kPadId;
    const std::size_t n = prefix_tokens.size();
    if (n >= 1) t1 = lookup_or_unknown(prefix_tokens[n - 1]);
    if (n >= 2) t2 = lookup_or_unknown(prefix_tokens[n - 2]);

    const double v = static_cast<double>(vocab_.size());
    std::vector<double> probs(vocab_.size(), 0.0);
    if (vocab_.empty()) {
        return probs;
    }
    const NextCounts* table = table_for(s, t2, t1);
    const double total = table ? static_cast<double>(table->total) : 0.0;
    const double denom = total + alpha_ * v;
    std::fill(probs.begin(), probs.end(), alpha_ / denom);
    if (table) {
        for (const auto& [w, c] : table->next) {
            probs[w] = (static_cast<double>(c) + alpha_) / denom;
        }
    }
    return probs;
}

double TrigramState::token_probability(std::span<const std::string> context, std::string_view token) const {
    const Stratum s = stratum_of(context);
    const std::size_t n = context.size();
    const TokenId t1 = n >= 1 ? lookup_or_unknown(context[n - 1]) : kPadId;
    const TokenId t2 = n >= 2 ? lookup_or_unknown(context[n - 2]) : kPadId;
    const NextCounts* table = table_for(s, t2, t1);
    const double total = table ? static_cast<double>(table->total) : 0.0;
    double count = 0.0;
    if (table) {
        if (auto id = id_of(token)) {
            if (auto it = table->next.find(*id); it != table->next.end()) {
                count = static_cast<double>(it->second);
            }
        }
    }
    // Out-of-vocabulary tokens are scored as zero-count members.
    const double v = static_cast<double>(std::max<std::size_t>(1, vocab_.size()));
    return (count + alpha_) / (total + alpha_ * v);
}

double TrigramState::probability(std::string_view prefix, std::string_view next_token) const {
    return token_probability(tokenize(prefix), next_token);
}

double TrigramState::logprob(std::string_view continuation, std::string_view prefix) const {
    auto context = tokenize(prefix);
    double sum = 0.0;
    for (auto& t : tokenize(continuation)) {
        sum += std::log(token_probability(context, t));
        context.push_back(std::move(t));
    }
    return sum;
}

std::uint64_t TrigramState::context_total(Stratum stratum, std::string_view t2, std::string_view t1) const {
    auto id = [&](std::string_view t) { return t == kBegin ? kPadId : lookup_or_unknown(t); };
    auto it = counts_.find(key(stratum, id(t2), id(t1)));
    return it == counts_.end() ? 0 : it->second.total;
}

json TrigramState::to_json() const {
    std::map<std::uint64_t, std::map<TokenId, std::uint64_t>> sorted;
    for (const auto& [k, table] : counts_) {
        auto& row = sorted[k];
        for (const auto& [w, c] : table.next) {
            row[w] = c;
        }
    }
    json counts = json::array();
    const std::uint64_t mask = (1ull << kIdBits) - 1;
    for (const auto& [k, row] : sorted) {
        json next = json::array();
        for (const auto& [w, c] : row) {
            next.push_back({w, c});
        }
        const auto t1 = static_cast<TokenId>(k & mask);
        const auto t2 = static_cast<TokenId>((k >> kIdBits) & mask);
        const auto s = static_cast<int>(k >> (2 * kIdBits));
        auto encode = [](TokenId t) { return t == kPadId ? json(-1) : json(t); };
        counts.push_back({s, encode(t2), encode(t1), std::move(next)});
    }
    char alpha[32];
    std::snprintf(alpha, sizeof alpha, "%.17g", alpha_);
    return json{{"format", "leti-trigram-v1"}, {"alpha", alpha}, {"vocabulary", vocab_}, {"counts", std::move(counts)}};
}

TrigramState TrigramState::from_json(const json& j) {
    if (j.value("format", "") != "leti-trigram-v1") {
        throw ParseError("not a trigram state (format tag missing or unknown)");
    }
    TrigramState state(std::stod(j.at("alpha").get<std::string>()), false);
    for (const auto& token : j.at("vocabulary")) {
        state.intern(token.get<std::string>());
    }
    auto decode = [&](const json& v) -> TokenId {
        const auto raw = v.get<std::int64_t>();
        if (raw == -1) return kPadId;
        if (raw < 0 || static_cast<std::size_t>(raw) >= state.vocab_.size()) {
            throw ParseError("trigram state references an unknown token id");
        }
        return static_cast<TokenId>(raw);
    };
    for (const auto& row : j.at("counts")) {
        const auto s = row.at(0).get<int>();
        if (s < 0 || s > 3) {
            throw ParseError("trigram state has an invalid stratum");
        }
        auto& table = state.counts_[key(static_cast<Stratum>(s), decode(row.at(1)), decode(row.at(2)))];
        for (const auto& entry : row.at(3)) {
            const auto c = entry.at(1).get<std::uint64_t>();
            table.next[decode(entry.at(0))] += c;
            table.total += c;
        }
    }
    return state;
}

std::string TrigramState::checksum() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
    return buf;
}

bool TrigramState::operator==(const TrigramState& other) const {
    return to_json() == other.to_json();
}

// ------------------------------------------------------------------ sampling

std::string TrigramSampler::complete(std::string_view prefix, double temperature, std::uint64_t seed,
                                     int max_new_tokens) const {
    if (temperature < 0.0) {
        throw ValidationError("temperature must be non-negative");
    }
    auto context = tokenize(prefix);
    const auto& vocab = state_.vocabulary();
    std::vector<bool> allowed(vocab.size(), true);
    for (auto lit : vocab::kAll) {
        if (auto id = state_.id_of(lit)) {
            allowed[*id] = false;
        }
    }
    const auto end_id = state_.id_of(TrigramState::kEnd);

    std::mt19937_64 rng(seed);
    std::string out;
    std::vector<double> weights(vocab.size());
    for (int step = 0; step < max_new_tokens; ++step) {
        const auto probs = state_.distribution(context);
        std::size_t chosen = vocab.size();
        if (temperature == 0.0) {
            double best = -1.0;
            for (std::size_t w = 0; w < vocab.size(); ++w) {
                if (!allowed[w]) continue;
                if (probs[w] > best || (probs[w] == best && vocab[w] < vocab[chosen])) {
                    best = probs[w];
                    chosen = w;
                }
            }
        } else {
            double max_logit = -std::numeric_limits<double>::infinity();
            for (std::size_t w = 0; w < vocab.size(); ++w) {
                weights[w] = allowed[w] ? std::log(probs[w]) / temperature : -std::numeric_limits<double>::infinity();
                max_logit = std::max(max_logit, weights[w]);
            }
            double total = 0.0;
            for (std::size_t w = 0; w < vocab.size(); ++w) {
                weights[w] = allowed[w] ? std::exp(weights[w] - max_logit) : 0.0;
                total += weights[w];
            }
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
            double acc = 0.0;
            for (std::size_t w = 0; w < vocab.size(); ++w) {
                if (weights[w] == 0.0) continue;
                acc += weights[w];
                chosen = w;
                if (u < acc) break;
            }
        }
        if (chosen >= vocab.size() || (end_id && chosen == *end_id)) {
            break;
        }
        out += vocab[chosen];
        context.push_back(vocab[chosen]);
    }
    return out;
}

}  // namespace leti
