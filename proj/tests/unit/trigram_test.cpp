// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "leti/error.hpp"
#include "leti/fcft.hpp"
#include "leti/tokenizer.hpp"
#include "leti/trigram.hpp"

namespace leti {
namespace {

using Stratum = TrigramState::Stratum;

std::vector<std::string> repeat(const std::string& s, int n) {
    return std::vector<std::string>(static_cast<std::size_t>(n), s);
}

// Vocabulary {<|good|>, A, B, </s>}: nothing reserved up front.
TrigramState nine_to_one() {
    TrigramState state(1.0, false);
    auto corpus = repeat("<|good|>A", 9);
    corpus.push_back("<|good|>B");
    state.fit(corpus, 1);
    return state;
}

TEST(TrigramFitTest, HandCountedLaplaceValue) {
    const auto state = nine_to_one();
    ASSERT_EQ(state.vocabulary_size(), 4u);
    EXPECT_NEAR(state.probability("<|good|>", "A"), 10.0 / 14.0, 1e-12);
    EXPECT_NEAR(state.probability("<|good|>", "B"), 2.0 / 14.0, 1e-12);
    EXPECT_EQ(state.context_total(Stratum::Good, TrigramState::kBegin, "<|good|>"), 10u);
}

TEST(TrigramFitTest, LogprobOfSingleTokenContinuation) {
    EXPECT_NEAR(nine_to_one().logprob("A", "<|good|>"), std::log(10.0 / 14.0), 1e-12);
}

TEST(TrigramFitTest, EmptyContinuationHasZeroLogprob) {
    EXPECT_EQ(nine_to_one().logprob("", "<|good|>"), 0.0);
}

TEST(TrigramFitTest, DefaultStateReservesSpecialTokens) {
    TrigramState state;
    for (auto lit : vocab::kAll) EXPECT_TRUE(state.id_of(lit)) << lit;
    EXPECT_TRUE(state.id_of(TrigramState::kEnd));
    EXPECT_EQ(state.vocabulary_size(), 6u);
}

TEST(TrigramFitTest, EmptyRecordListLeavesStateUnchanged) {
    auto state = nine_to_one();
    const auto before = state;
    state.fit(std::vector<std::string>{}, 3);
    EXPECT_EQ(state, before);
}

TEST(TrigramFitTest, EpochsAreAdditive) {
    const std::vector<std::string> corpus{"<|good|>x<|sol|>1+x", "<|bad|>x<|sol|>1*x", "plain text here"};
    TrigramState twice(0.5);
    twice.fit(corpus, 1);
    twice.fit(corpus, 1);
    TrigramState once(0.5);
    once.fit(corpus, 2);
    EXPECT_EQ(twice, once);
    EXPECT_EQ(twice.checksum(), once.checksum());
}

TEST(TrigramFitTest, InvalidArguments) {
    EXPECT_THROW(TrigramState(0.0), ValidationError);
    TrigramState s;
    EXPECT_THROW(s.fit(std::vector<std::string>{"a"}, 0), ValidationError);
}

TEST(TrigramFitTest, VocabularyClosedUnderObservedTrigrams) {
    TrigramState s;
    s.fit(std::vector<std::string>{"alpha beta(gamma)", "<|bad|><|text_feedback|>E<|/text_feedback|>q<|sol|>r"}, 1);
    for (const auto& t : tokenize("alpha beta(gamma)")) EXPECT_TRUE(s.id_of(t)) << t;
    EXPECT_TRUE(s.id_of("E"));
}

TEST(TrigramProbabilityTest, UnseenContextIsUniform) {
    const auto state = nine_to_one();
    EXPECT_NEAR(state.probability("zzz yyy", "A"), 0.25, 1e-12);
}

TEST(TrigramProbabilityTest, OutOfVocabularyTokenIsAZeroCountMember) {
    const auto state = nine_to_one();
    EXPECT_NEAR(state.probability("<|good|>", "C"), 1.0 / 14.0, 1e-12);
}

TEST(TrigramProbabilityTest, ConditionedContextBacksOffToUnconditioned) {
    TrigramState s(1.0, false);
    s.fit(std::vector<std::string>{"q r s", "q r s", "<|bad|>q r t"}, 1);
    // Under <|good|>, context ("r", " ") is unseen; the unconditioned table
    // (two observations of "s") is used, not the bad one.
    const double p_s = s.probability("<|good|>q r ", "s");
    const double p_t = s.probability("<|good|>q r ", "t");
    EXPECT_GT(p_s, p_t);
    EXPECT_NEAR(p_s, s.probability("q r ", "s"), 1e-12);
}

TEST(TrigramProbabilityTest, UnconditionedContextBacksOffToPooled) {
    TrigramState s(1.0, false);
    s.fit(std::vector<std::string>{"<|good|>m n o"}, 1);
    EXPECT_GT(s.probability("m n ", "o"), s.probability("m n ", "m"));
}

TEST(TrigramProbabilityTest, DistributionsAreNormalized) {
    TrigramState s(0.3);
    s.fit(std::vector<std::string>{"<|good|>a b c<|sol|>1+x", "<|bad|>a b d<|sol|>2*x", "a b e f g"}, 2);
    const std::vector<std::string> prefixes{"", "<|good|>", "<|good|>a b", "<|bad|>a b", "a b", "never seen",
                                            "<|good|>a b c<|sol|>"};
    for (const auto& prefix : prefixes) {
        const auto d = s.distribution(tokenize(prefix));
        EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12) << prefix;
        for (std::size_t w = 0; w < d.size(); ++w) {
            EXPECT_NEAR(d[w], s.probability(prefix, s.vocabulary()[w]), 1e-15);
        }
    }
}

TEST(TrigramProbabilityTest, LogprobIsAdditiveOverSplitPoints) {
    TrigramState s(0.7);
    s.fit(std::vector<std::string>{"<|good|>p<|sol|>12 + x", "<|good|>p<|sol|>12 * x", "12 - y"}, 1);
    const std::string prefix = "<|good|>p<|sol|>";
    const std::string continuation = "12 + x";
    const auto tokens = tokenize(continuation);
    const double whole = s.logprob(continuation, prefix);
    EXPECT_LE(whole, 0.0);
    for (std::size_t k = 0; k <= tokens.size(); ++k) {
        std::string head, tail;
        for (std::size_t i = 0; i < tokens.size(); ++i) (i < k ? head : tail) += tokens[i];
        EXPECT_NEAR(s.logprob(head, prefix) + s.logprob(tail, prefix + head), whole, 1e-12) << k;
    }
}

// Good and bad continuation populations are disjoint; every good token is
// seen at least twice as often as any bad token.
TEST(TrigramConditioningTest, GoodContextPrefersGoodContinuations) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        TrigramState s(1.0);
        std::vector<std::string> corpus;
        std::vector<std::string> good_tokens, bad_tokens;
        int max_bad = 0;
        const int n_bad = 1 + static_cast<int>(rng() % 4);
        for (int b = 0; b < n_bad; ++b) {
            bad_tokens.push_back("bad" + std::to_string(b));
            const int c = 1 + static_cast<int>(rng() % 5);
            max_bad = std::max(max_bad, c);
            for (int i = 0; i < c; ++i) corpus.push_back("<|bad|>task<|sol|>" + bad_tokens.back());
        }
        const int n_good = 1 + static_cast<int>(rng() % 4);
        for (int g = 0; g < n_good; ++g) {
            good_tokens.push_back("good" + std::to_string(g));
            const int c = 2 * max_bad + static_cast<int>(rng() % 3);
            for (int i = 0; i < c; ++i) corpus.push_back("<|good|>task<|sol|>" + good_tokens.back());
        }
        std::shuffle(corpus.begin(), corpus.end(), rng);
        s.fit(corpus, 1);
        for (const auto& a : good_tokens) {
            for (const auto& b : bad_tokens) {
                ASSERT_GT(s.probability("<|good|>task<|sol|>", a), s.probability("<|good|>task<|sol|>", b));
                ASSERT_GT(s.probability("<|bad|>task<|sol|>", b), s.probability("<|bad|>task<|sol|>", a));
            }
        }
    }
}

TEST(TrigramSerializationTest, JsonRoundTripPreservesEverything) {
    TrigramState s(0.25);
    s.fit(std::vector<std::string>{"<|good|>a b<|sol|>c", "<|bad|><|text_feedback|>E<|/text_feedback|>a<|sol|>d"}, 3);
    const auto restored = TrigramState::from_json(nlohmann::json::parse(s.to_json().dump()));
    EXPECT_EQ(restored, s);
    EXPECT_EQ(restored.alpha(), 0.25);
    EXPECT_EQ(restored.checksum(), s.checksum());
    EXPECT_EQ(restored.probability("<|good|>a b<|sol|>", "c"), s.probability("<|good|>a b<|sol|>", "c"));
}

TEST(TrigramSerializationTest, RejectsForeignJson) {
    EXPECT_THROW(TrigramState::from_json(nlohmann::json{{"format", "other"}}), ParseError);
    nlohmann::json bad = TrigramState().to_json();
    bad["counts"] = nlohmann::json::array({nlohmann::json::array({0, -1, 99, nlohmann::json::array()})});
    EXPECT_THROW(TrigramState::from_json(bad), ParseError);
}

TEST(TrigramSamplerTest, GreedyIsArgmaxAndDeterministic) {
    const auto state = nine_to_one();
    TrigramSampler sampler(state);
    EXPECT_EQ(sampler.complete("<|good|>", 0.0, 1, 5), "A");
    EXPECT_EQ(sampler.complete("<|good|>", 0.0, 999, 5), "A");
}

TEST(TrigramSamplerTest, GreedyTiesBreakLexicographically) {
    TrigramState s(1.0, false);
    s.fit(std::vector<std::string>{"<|good|>B", "<|good|>A"}, 1);
    EXPECT_EQ(TrigramSampler(s).complete("<|good|>", 0.0, 0, 1), "A");
}

TEST(TrigramSamplerTest, SameSeedSameOutput) {
    TrigramState s(1.0);
    s.fit(std::vector<std::string>{"a b c d", "a b d c", "a c b d"}, 1);
    TrigramSampler sampler(s);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_EQ(sampler.complete("a", 1.0, seed, 6), sampler.complete("a", 1.0, seed, 6));
    }
}

TEST(TrigramSamplerTest, LowTemperatureConvergesToArgmax) {
    const auto state = nine_to_one();
    TrigramSampler sampler(state);
    int agree = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        agree += sampler.complete("<|good|>", 0.05, seed, 1) == "A" ? 1 : 0;
    }
    EXPECT_EQ(agree, 200);
}

TEST(TrigramSamplerTest, NeverEmitsReservedLiteralsAndRespectsTheCap) {
    TrigramState s(1.0);
    s.fit(std::vector<std::string>{"<|good|>x<|sol|><|bad|><|sol|>y"}, 5);
    TrigramSampler sampler(s);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto out = sampler.complete("<|good|>x<|sol|>", 3.0, seed, 4);
        EXPECT_FALSE(vocab::find_literal(out)) << out;
        EXPECT_LE(tokenize(out).size(), 4u);
    }
    EXPECT_THROW(sampler.complete("x", -1.0, 0, 1), ValidationError);
}

}  // namespace
}  // namespace leti
