// Copyright 2026 The branchlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "branchlab/selection.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace branchlab;
using namespace branchlab::selection;
using testutil::expect_error;

namespace {

StepAmplitudes step(double a2) {
    return real_step(a2);
}

std::vector<SelectionRule> born_rules() {
    return {CollapsePerStep{}, CollapseOnce{}, SelfLocationMind{}};
}

std::vector<SelectionRule> all_rules() {
    auto r = born_rules();
    r.push_back(Indifference{SingletonCells{}});
    r.push_back(Indifference{FrequencyCells{}});
    r.push_back(Indifference{GrahamWorlds{25}});
    return r;
}

}  // namespace

TEST(Names, Rules) {
    EXPECT_EQ(rule_name(CollapseOnce{}), "collapse-once");
    EXPECT_EQ(rule_name(Indifference{SingletonCells{}}), "indifference(singleton)");
    EXPECT_EQ(rule_name(Indifference{GrahamWorlds{25}}), "indifference(graham:25)");
}

TEST(Distance, Basics) {
    const Distribution a{0.2, 0.3, 0.5};
    EXPECT_DOUBLE_EQ(distribution_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(distribution_distance({1.0, 0.0}, {0.0, 1.0}), 1.0);
    const Distribution b{0.5, 0.3, 0.2};
    EXPECT_DOUBLE_EQ(distribution_distance(a, b), distribution_distance(b, a));
    expect_error(ErrorKind::DomainMismatch, [] { distribution_distance({1.0}, {0.5, 0.5}); });
}

TEST(Distance, BinomialsAtTen) {
    const auto a = oracle::binomial_pmf(10, 0.36L);
    const auto b = oracle::binomial_pmf(10, 0.5L);
    Distribution da(a.begin(), a.end()), db(b.begin(), b.end());
    EXPECT_NEAR(distribution_distance(da, db), static_cast<double>(oracle::total_variation(a, b)), 1e-15);
    EXPECT_NEAR(distribution_distance(da, db), oracle::frozen::kTv_binom10_036_vs_05, 1e-12);
}

TEST(Exact, BornRulesGiveBinomial) {
    for (double a2 = 0.1; a2 < 0.95; a2 += 0.1) {
        const auto s = step(a2);
        for (unsigned k = 0; k <= 12; ++k) {
            const auto pmf = oracle::binomial_pmf(k, a2);
            for (const auto &rule : born_rules()) {
                const auto d = exact_rule_distribution(rule, s.alpha, s.beta, k);
                EXPECT_LT(static_cast<double>(oracle::total_variation(d, pmf)), 1e-12) << rule_name(rule) << k;
            }
        }
    }
}

TEST(Exact, PerStepAndOnceAgreeOnSequences) {
    const auto s = step(0.36);
    const auto a = exact_rule_distribution(CollapsePerStep{}, s.alpha, s.beta, 12, Marginal::sequence);
    const auto b = exact_rule_distribution(CollapseOnce{}, s.alpha, s.beta, 12, Marginal::sequence);
    const auto c = exact_rule_distribution(SelfLocationMind{}, s.alpha, s.beta, 12, Marginal::sequence);
    EXPECT_LT(distribution_distance(a, b), 1e-12);
    EXPECT_LT(distribution_distance(b, c), 1e-12);
}

TEST(Exact, SingletonIndifferenceIsFairCoin) {
    const auto s = step(0.36);
    const auto d = exact_rule_distribution(Indifference{SingletonCells{}}, s.alpha, s.beta, 10);
    const auto pmf = oracle::binomial_pmf(10, 0.5L);
    EXPECT_LT(static_cast<double>(oracle::total_variation(d, pmf)), 1e-12);
}

TEST(Exact, FrequencyIndifferenceIsUniformOverCounts) {
    const auto s = step(0.36);
    const auto d = exact_rule_distribution(Indifference{FrequencyCells{}}, s.alpha, s.beta, 10);
    for (double x : d) {
        EXPECT_NEAR(x, 1.0 / 11, 1e-12);
    }
}

TEST(Exact, GrahamIndifferenceIsBorn) {
    const auto s = step(0.36);
    const auto d = exact_rule_distribution(Indifference{GrahamWorlds{25}}, s.alpha, s.beta, 10);
    EXPECT_LT(static_cast<double>(oracle::total_variation(d, oracle::binomial_pmf(10, 0.36L))), 1e-12);
}

TEST(Exact, PartitionDependence) {
    const auto s = step(0.36);
    const auto single = exact_rule_distribution(Indifference{SingletonCells{}}, s.alpha, s.beta, 10);
    const auto graham = exact_rule_distribution(Indifference{GrahamWorlds{25}}, s.alpha, s.beta, 10);
    EXPECT_GT(distribution_distance(single, graham), 0.25);
}

TEST(Exact, Errors) {
    const auto s = step(0.36);
    expect_error(ErrorKind::DepthTooLarge, [&] { exact_rule_distribution(CollapseOnce{}, s.alpha, s.beta, 25); });
    expect_error(ErrorKind::DepthTooLarge,
                 [&] { exact_rule_distribution(CollapsePerStep{}, s.alpha, s.beta, 17, Marginal::sequence); });
    expect_error(ErrorKind::NotNormalized, [] { exact_rule_distribution(CollapseOnce{}, 0.6, 0.6, 3); });
    expect_error(ErrorKind::NonIntegerSplit,
                 [&] { exact_rule_distribution(Indifference{GrahamWorlds{7}}, s.alpha, s.beta, 3); });
    expect_error(ErrorKind::EmptyPartitionCell, [&] {
        exact_rule_distribution(Indifference{ExplicitCells{{{Record(0, 1), Record(1, 1)}, {}}}}, s.alpha, s.beta, 1);
    });
}

TEST(Exact, PerStepHandlesLargeK) {
    const auto s = step(0.36);
    const auto d = exact_rule_distribution(CollapsePerStep{}, s.alpha, s.beta, 30);
    EXPECT_LT(static_cast<double>(oracle::total_variation(d, oracle::binomial_pmf(30, 0.36L))), 1e-12);
}

TEST(Sample, DegenerateAllUp) {
    const auto s = step(1.0);
    for (const auto &rule : born_rules()) {
        const auto r = sample(rule, s.alpha, s.beta, 6, 1000, 7);
        EXPECT_EQ(r.up_counts.counts[6], 1000u) << rule_name(rule);
    }
    // Only one branch survives, so every cell of every partition is all-up.
    const auto r = sample(Indifference{SingletonCells{}}, s.alpha, s.beta, 6, 1000, 7);
    EXPECT_EQ(r.up_counts.counts[6], 1000u);
}

TEST(Sample, DeterministicInSeed) {
    const auto s = step(0.36);
    for (const auto &rule : all_rules()) {
        const auto a = sample(rule, s.alpha, s.beta, 8, 5000, 11, true);
        const auto b = sample(rule, s.alpha, s.beta, 8, 5000, 11, true);
        EXPECT_EQ(a.up_counts.counts, b.up_counts.counts);
        EXPECT_EQ(a.sequences->counts, b.sequences->counts);
        const auto c = sample(rule, s.alpha, s.beta, 8, 5000, 12);
        EXPECT_NE(a.up_counts.counts, c.up_counts.counts) << rule_name(rule);
    }
}

TEST(Sample, SampleOneMatchesDraw) {
    const Sampler sampler(CollapseOnce{}, step(0.36), 6);
    const auto t = sampler.sample_one(5);
    EXPECT_EQ(t.records.depth(), 6u);
    EXPECT_EQ(t.seed, 5u);
}

TEST(Sample, CollapseOnceConverges) {
    const auto s = step(0.36);
    const auto r = sample(CollapseOnce{}, s.alpha, s.beta, 10, 1000000, 2024);
    const auto pmf = oracle::binomial_pmf(10, 0.36L);
    EXPECT_LT(static_cast<double>(oracle::total_variation(r.up_counts.normalized(), pmf)), 0.005);
}

TEST(Sample, SingletonIndifferenceConvergesToFairCoin) {
    const auto s = step(0.36);
    const auto r = sample(Indifference{SingletonCells{}}, s.alpha, s.beta, 10, 1000000, 2025);
    const auto pmf = oracle::binomial_pmf(10, 0.5L);
    EXPECT_LT(static_cast<double>(oracle::total_variation(r.up_counts.normalized(), pmf)), 0.005);
}

TEST(Sample, EveryRuleConverges) {
    const auto s = step(0.36);
    for (const auto &rule : all_rules()) {
        const auto r = sample(rule, s.alpha, s.beta, 10, 200000, 99);
        const auto d = exact_rule_distribution(rule, s.alpha, s.beta, 10);
        EXPECT_LT(distribution_distance(r.up_counts.normalized(), d), 0.01) << rule_name(rule);
    }
}

TEST(Sample, ExplicitCellsDrawCellThenMember) {
    const auto s = step(0.5);
    // Cell {↑↑} and cell {↑↓, ↓↑, ↓↓}: P(two ups) = 1/2.
    const ExplicitCells cells{{{Record(0, 2)}, {Record(1, 2), Record(2, 2), Record(3, 2)}}};
    const auto d = exact_rule_distribution(Indifference{cells}, s.alpha, s.beta, 2);
    EXPECT_NEAR(d[2], 0.5, 1e-15);
    EXPECT_NEAR(d[1], 2.0 / 6.0, 1e-15);
    const auto r = sample(Indifference{cells}, s.alpha, s.beta, 2, 200000, 3);
    EXPECT_NEAR(r.up_counts.normalized()[2], 0.5, 0.01);
}

TEST(Sample, Errors) {
    const auto s = step(0.36);
    expect_error(ErrorKind::InvalidArgument, [&] { sample(CollapseOnce{}, s.alpha, s.beta, 4, 0, 1); });
    expect_error(ErrorKind::DepthTooLarge, [&] { sample(CollapseOnce{}, s.alpha, s.beta, 17, 1, 1, true); });
    expect_error(ErrorKind::DepthTooLarge, [&] { sample(SelfLocationMind{}, s.alpha, s.beta, 25, 1, 1); });
    expect_error(ErrorKind::EmptyPartitionCell, [&] {
        sample(Indifference{ExplicitCells{{{Record(0, 1), Record(1, 1)}, {}}}}, s.alpha, s.beta, 1, 10, 1);
    });
    // Per-step collapse needs no layer.
    EXPECT_NO_THROW(sample(CollapsePerStep{}, s.alpha, s.beta, 32, 10, 1));
}

TEST(Compare, ReportFields) {
    const auto s = step(0.36);
    const auto r = compare(CollapseOnce{}, Indifference{SingletonCells{}}, s.alpha, s.beta, 10, 100000, 5);
    EXPECT_EQ(r.rule_a, "collapse-once");
    EXPECT_EQ(r.rule_b, "indifference(singleton)");
    EXPECT_NEAR(r.alpha_sq, 0.36, 1e-15);
    EXPECT_NEAR(r.tv_exact, oracle::frozen::kTv_binom10_036_vs_05, 1e-12);
    EXPECT_NEAR(r.tv_empirical, r.tv_exact, 0.02);
    EXPECT_EQ(r.n_samples, 100000u);
    EXPECT_EQ(r.seed, 5u);
}
