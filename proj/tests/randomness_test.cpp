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

#include "branchlab/randomness.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace branchlab;
using namespace branchlab::theorems;
using testutil::expect_error;

namespace {

RandomnessTestSpec only(RandomnessTest t, double calibration) {
    RandomnessTestSpec s;
    s.tests = {t};
    s.calibration_p = calibration;
    return s;
}

unsigned brute_runs(const Record &r) {
    if (r.depth() == 0) return 0;
    unsigned runs = 1;
    for (unsigned i = 1; i < r.depth(); ++i) {
        runs += r.at(i) != r.at(i - 1) ? 1 : 0;
    }
    return runs;
}

}  // namespace

TEST(Names, RoundTrip) {
    for (auto t : {RandomnessTest::monobit, RandomnessTest::runs, RandomnessTest::block_entropy}) {
        EXPECT_EQ(parse_test(test_name(t)), t);
    }
    expect_error(ErrorKind::InvalidArgument, [] { parse_test("spectral"); });
}

TEST(Monobit, AllUpFailsAtSixteen) {
    for (unsigned k = 16; k <= 24; ++k) {
        const Record r(0, k);
        EXPECT_LT(monobit_p_value(r, 0.5), 1e-4) << k;
        EXPECT_FALSE(passes(RandomnessTest::monobit, r, only(RandomnessTest::monobit, 0.5)));
    }
}

TEST(Monobit, BalancedPassesFully) {
    EXPECT_DOUBLE_EQ(monobit_p_value(Record::parse("↑↓↑↓"), 0.5), 1.0);
}

TEST(Runs, CountMatchesDirectScan) {
    for (std::uint32_t c = 0; c < 1024; ++c) {
        const Record r(c, 10);
        EXPECT_EQ(run_count(r), brute_runs(r));
    }
    EXPECT_EQ(run_count(Record()), 0u);
    EXPECT_EQ(run_count(Record::parse("↓")), 1u);
}

TEST(Runs, MomentsMatchEnumeration) {
    // Exact mean and variance of the run count under iid Bernoulli(p),
    // by enumeration, feed the same two-sided normal p-value.
    for (double p : {0.36, 0.5, 0.8}) {
        const unsigned k = 12;
        long double mean = 0, second = 0;
        for (std::uint32_t c = 0; c < (1u << k); ++c) {
            const Record r(c, k);
            const long double w = std::pow((long double)p, r.up_count()) * std::pow(1.0L - p, r.down_count());
            mean += w * brute_runs(r);
            second += w * brute_runs(r) * brute_runs(r);
        }
        const long double var = second - mean * mean;
        for (std::uint32_t c : {0u, 1u, 0x555u, 0x0f0u, 0xabcu}) {
            const Record r(c, k);
            const double expect = std::erfc(std::abs(brute_runs(r) - (double)mean) / std::sqrt(2.0 * (double)var));
            EXPECT_NEAR(runs_p_value(r, p), expect, 1e-9) << p << " " << c;
        }
    }
}

TEST(BlockEntropy, UniformBlocksPass) {
    // Every 2-block pattern once at calibration 1/2: G = 0.
    EXPECT_NEAR(block_entropy_p_value(Record::parse("↑↑↑↓↓↑↓↓"), 0.5, 2), 1.0, 1e-12);
    EXPECT_LT(block_entropy_p_value(Record(0, 24), 0.5, 2), 1e-4);
    EXPECT_DOUBLE_EQ(block_entropy_p_value(Record::parse("↑"), 0.5, 2), 1.0);
    EXPECT_DOUBLE_EQ(block_entropy_p_value(Record::parse("↓↓"), 1.0, 2), 0.0);
}

TEST(RandomnessMass, HalfMonobitAtTwenty) {
    const auto layer = build_layer(std::sqrt(0.5), std::sqrt(0.5), 20);
    const auto rows = randomness_mass(layer, only(RandomnessTest::monobit, 0.5));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_GE(rows[0].measure_mass, 0.93);
    EXPECT_LE(rows[0].measure_mass, 0.97);
    EXPECT_NEAR(rows[0].measure_mass, oracle::frozen::kMonobitMeasure_05_20, 1e-12);
    EXPECT_NEAR(rows[0].count_fraction, rows[0].measure_mass, 1e-12);
}

TEST(RandomnessMass, RunsCalibratedAtPointThreeSix) {
    const auto layer = build_layer(0.6, 0.8, 20);
    const auto rows = randomness_mass(layer, only(RandomnessTest::runs, 0.36));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].measure_mass, oracle::frozen::kRunsMeasure_036_20, 1e-12);
    EXPECT_NEAR(rows[0].count_fraction, oracle::frozen::kRunsCount_036_20, 1e-12);
    // Enumeration puts the count fraction above the measure mass here.
    EXPECT_GT(rows[0].count_fraction, rows[0].measure_mass);
}

TEST(RandomnessMass, MonobitGapAtPointThreeSix) {
    const auto layer = build_layer(0.6, 0.8, 20);
    const auto rows = randomness_mass(layer, only(RandomnessTest::monobit, 0.36));
    EXPECT_NEAR(rows[0].measure_mass, oracle::frozen::kMonobitMeasure_036_20, 1e-12);
    EXPECT_NEAR(rows[0].count_fraction, oracle::frozen::kMonobitCount_036_20, 1e-12);
    EXPECT_LT(rows[0].count_fraction, rows[0].measure_mass);
}

TEST(RandomnessMass, BinomialModeMatchesEnumeration) {
    const auto spec = only(RandomnessTest::monobit, 0.36);
    const auto a = randomness_mass(build_layer(0.6, 0.8, 18), spec);
    const auto b = randomness_mass_binomial(0.36, 18, spec);
    EXPECT_NEAR(a[0].measure_mass, b[0].measure_mass, 1e-12);
    EXPECT_NEAR(a[0].count_fraction, b[0].count_fraction, 1e-12);
    const auto big = randomness_mass_binomial(0.36, 5000, spec);
    EXPECT_GT(big[0].measure_mass, 0.9);
    EXPECT_LT(big[0].count_fraction, 1e-60);
    EXPECT_GT(big[0].count_fraction, 0.0);
}

TEST(RandomnessMass, Validation) {
    const auto layer = build_layer(0.6, 0.8, 4);
    RandomnessTestSpec s;
    s.significance = 0.5;
    expect_error(ErrorKind::InvalidArgument, [&] { randomness_mass(layer, s); });
    s = {};
    s.tests.clear();
    expect_error(ErrorKind::InvalidArgument, [&] { randomness_mass(layer, s); });
    s = {};
    s.block_length = 0;
    expect_error(ErrorKind::InvalidArgument, [&] { randomness_mass(layer, s); });
    s = {};
    expect_error(ErrorKind::InvalidArgument, [&] { randomness_mass_binomial(0.36, 30, s); });
}
