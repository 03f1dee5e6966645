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

#include "branchlab/exact.hpp"
#include "oracles.hpp"

using namespace branchlab::exact;

TEST(Binomial, SmallValues) {
    EXPECT_EQ(binomial(5, 2), 10);
    EXPECT_EQ(binomial(10, 0), 1);
    EXPECT_EQ(binomial(10, 10), 1);
    EXPECT_EQ(binomial(3, 4), 0);
}

TEST(Binomial, RowSumsToPowerOfTwo) {
    for (unsigned n : {1u, 17u, 100u, 1000u}) {
        BigInt s = 0;
        for (unsigned j = 0; j <= n; ++j) {
            s += binomial(n, j);
        }
        EXPECT_EQ(s, power(BigInt(2), n)) << n;
    }
}

TEST(Binomial, HundredChooseFifty) {
    EXPECT_EQ(binomial(100, 50).str(), "100891344545564193334812497256");
}

TEST(Window, DecimalBoundariesIncluded) {
    const auto w = frequency_window(0.36, 100, 0.05);
    EXPECT_EQ(w.lo, 31);
    EXPECT_EQ(w.hi, 41);
    const auto h = frequency_window(0.5, 10, 0.1);
    EXPECT_EQ(h.lo, 4);
    EXPECT_EQ(h.hi, 6);
}

TEST(Window, ClampedAndEmpty) {
    const auto w = frequency_window(0.0, 10, 0.05);
    EXPECT_EQ(w.lo, 0);
    EXPECT_EQ(w.hi, 0);
    const auto e = frequency_window(0.55, 4, 0.01);
    EXPECT_TRUE(e.empty());
    EXPECT_FALSE(e.contains(2));
}

TEST(Window, AgreesWithOracleMembership) {
    for (unsigned k : {1u, 7u, 20u, 99u, 100u}) {
        for (double p : {0.1, 0.36, 0.5, 0.9}) {
            for (double eps : {0.01, 0.05, 0.25}) {
                const auto w = frequency_window(p, k, eps);
                for (unsigned j = 0; j <= k; ++j) {
                    EXPECT_EQ(w.contains(j), oracle::in_window(j, k, p, eps)) << k << " " << p << " " << eps;
                }
            }
        }
    }
}

TEST(ToDouble, Rationals) {
    EXPECT_DOUBLE_EQ(to_double(Rational(1, 3)), 1.0 / 3.0);
    const Rational huge(power(BigInt(3), 400), power(BigInt(2), 700));
    EXPECT_NEAR(to_double(huge), std::exp(400 * std::log(3.0) - 700 * std::log(2.0)), 1e-20);
}
