// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "leti/error.hpp"
#include "leti/metrics.hpp"

namespace leti {
namespace {

// Independent oracle: fraction of k-subsets of n samples (c correct) that
// contain at least one correct sample, by enumeration.
double brute_force_pass_at_k(int n, int c, int k) {
    long long hit = 0, total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        ++total;
        // Samples 0..c-1 are the correct ones.
        hit += (mask & ((1u << c) - 1)) != 0 ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

TEST(PassAtKTest, SpotValues) {
    EXPECT_EQ(pass_at_k(16, 0, 1), 0.0);
    EXPECT_EQ(pass_at_k(5, 2, 2), 0.7);
    EXPECT_EQ(pass_at_k(200, 1, 100), 0.5);
    EXPECT_EQ(pass_at_k(16, 16, 8), 1.0);
}

TEST(PassAtKTest, MatchesEnumerationForSmallN) {
    for (int n = 1; n <= 12; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                ASSERT_NEAR(pass_at_k(n, c, k), brute_force_pass_at_k(n, c, k), 1e-12) << n << " " << c << " " << k;
            }
        }
    }
}

TEST(PassAtKTest, MonotoneInCAndK) {
    for (int n = 1; n <= 40; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                if (c < n) ASSERT_LE(pass_at_k(n, c, k), pass_at_k(n, c + 1, k));
                if (k < n) ASSERT_LE(pass_at_k(n, c, k), pass_at_k(n, c, k + 1));
            }
        }
    }
}

TEST(PassAtKTest, PassAtOneIsTheSuccessRate) {
    EXPECT_DOUBLE_EQ(pass_at_k(32, 8, 1), 0.25);
}

TEST(PassAtKTest, DomainErrors) {
    EXPECT_THROW(pass_at_k(4, 1, 5), DomainError);
    EXPECT_THROW(pass_at_k(4, 5, 1), DomainError);
    EXPECT_THROW(pass_at_k(4, -1, 1), DomainError);
    EXPECT_THROW(pass_at_k(4, 1, 0), DomainError);
}

Feedback fb(const std::string& cls) {
    if (cls == "Pass") return Feedback::passing({{0, TestStatus::Pass}});
    return Feedback(0, std::nullopt, ErrorClass::parse(cls), {{0, TestStatus::Fail}});
}

TEST(ErrorDistributionTest, Counting) {
    const auto d = error_distribution({fb("Pass"), fb("Pass"), fb("AssertionError"), fb("AssertionError"),
                                       fb("SyntaxError")});
    EXPECT_EQ(d.counts, (std::map<std::string, int>{{"Pass", 2}, {"AssertionError", 2}, {"SyntaxError", 1}}));
    EXPECT_EQ(d.total(), 5);
}

TEST(ErrorDistributionTest, EmptyInput) {
    const auto d = error_distribution({});
    EXPECT_EQ(d.total(), 0);
    EXPECT_EQ(d.count("Pass"), 0);
    EXPECT_EQ(d.other_errors(), 0);
}

TEST(ErrorDistributionTest, OtherAggregatesNonCanonicalClasses) {
    const auto d = error_distribution({fb("KeyError"), fb("Timeout"), fb("Unknown"), fb("NameError"), fb("Pass")});
    EXPECT_EQ(d.other_errors(), 3);
    EXPECT_EQ(d.total(), 5);
    EXPECT_EQ(ErrorDistribution::from_json(d.to_json()), d);
}

TEST(RenderErrorTableTest, PaperShapedColumn) {
    ErrorDistribution d;
    d.counts = {{"AssertionError", 1189}, {"SyntaxError", 5179}, {"IndentationError", 467},
                {"ZeroDivisionError", 500}, {"TypeError", 299}, {"Pass", 366}};
    EXPECT_EQ(render_error_table({{"Pre-trained", d}}),
              "| | Pre-trained |\n"
              "|---|---:|\n"
              "| # of AssertionError | 1189 |\n"
              "| # of SyntaxError | 5179 |\n"
              "| # of IndentationError | 467 |\n"
              "| # of Other Errors | 799 |\n"
              "| # of Pass Test | 366 |\n");
}

TEST(RenderErrorTableTest, NameErrorRowAppearsWhenAnyColumnHasIt) {
    ErrorDistribution a, b;
    a.counts = {{"Pass", 1}};
    b.counts = {{"NameError", 2}};
    const auto t = render_error_table({{"a", a}, {"b", b}});
    EXPECT_NE(t.find("| # of NameError | 0 | 2 |"), std::string::npos);
    EXPECT_EQ(t.find("IndentationError"), std::string::npos);
    EXPECT_NE(t.find("| # of AssertionError | 0 | 0 |"), std::string::npos);
}

TEST(ImprovementRateTest, LargeModelRow) {
    const auto s = improvement_rate({{0, 4.50}, {3, 20.0}, {6, 28.00}, {8, 27.5}});
    EXPECT_EQ(s.iters_to_max, 6);
    EXPECT_NEAR(s.avg_per_iter, 3.92, 0.005);
    EXPECT_EQ(format_rounded(s.avg_per_iter), "3.92");
}

TEST(ImprovementRateTest, SmallModelRow) {
    const auto s = improvement_rate({{0, 7.40}, {14, 13.96}});
    EXPECT_NEAR(s.avg_per_iter, 0.47, 0.005);
    EXPECT_EQ(format_rounded(s.avg_per_iter), "0.47");
}

TEST(ImprovementRateTest, ConstantSeries) {
    const auto s = improvement_rate({{0, 5.0}, {1, 5.0}, {2, 5.0}});
    EXPECT_EQ(s.iters_to_max, 0);
    EXPECT_EQ(s.avg_per_iter, 0.0);
}

TEST(ImprovementRateTest, EarliestMaximumWins) {
    const auto s = improvement_rate({{2, 9.0}, {0, 1.0}, {1, 9.0}});
    EXPECT_EQ(s.iters_to_max, 1);
    EXPECT_EQ(s.avg_per_iter, 8.0);
}

TEST(ImprovementRateTest, Validation) {
    EXPECT_THROW(improvement_rate({}), ValidationError);
    EXPECT_THROW(improvement_rate({{1, 2.0}}), ValidationError);
    EXPECT_THROW(improvement_rate({{0, 2.0}, {0, 3.0}}), ValidationError);
}

TEST(FormatRoundedTest, HalfUp) {
    EXPECT_EQ(format_rounded(0.125), "0.13");
    EXPECT_EQ(format_rounded(2.675), "2.68");
    EXPECT_EQ(format_rounded(1.0), "1.00");
    EXPECT_EQ(format_rounded(-0.125), "-0.13");
    EXPECT_EQ(format_rounded(3.14159, 3), "3.142");
    EXPECT_EQ(to_json(improvement_rate({{0, 4.5}, {6, 28.0}})).at("avg_per_iter_rounded"), "3.92");
}

}  // namespace
}  // namespace leti
