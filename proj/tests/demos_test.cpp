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
#include <complex>

#include "branchlab/demos.hpp"
#include "test_util.hpp"

using namespace branchlab;
using namespace branchlab::demos;
using testutil::expect_error;

TEST(Interference, PureAlwaysPlusMixtureSplits) {
    for (int i = 0; i <= 20; ++i) {
        const double a2 = i / 20.0;
        const double a = std::sqrt(a2), b = std::sqrt(1.0 - a2);
        const auto r = interference_distributions(make_interference_setup(a, b));
        EXPECT_NEAR(r.pure.p_plus, 1.0, 1e-12);
        EXPECT_NEAR(r.pure.p_minus, 0.0, 1e-12);
        EXPECT_NEAR(r.mixture.p_plus, a2 * a2 + (1 - a2) * (1 - a2), 1e-12) << a2;
        EXPECT_NEAR(r.mixture.p_plus + r.mixture.p_minus, 1.0, 1e-12);
    }
}

TEST(Interference, ComplexPhasesDoNotMatter) {
    const Amplitude a = std::polar(0.6, 0.7), b = std::polar(0.8, -2.1);
    const auto r = interference_distributions(make_interference_setup(a, b));
    EXPECT_NEAR(r.pure.p_plus, 1.0, 1e-12);
    EXPECT_NEAR(r.mixture.p_plus, std::pow(0.36, 2) + std::pow(0.64, 2), 1e-12);
}

TEST(Interference, MixtureLeastLikePureAtEqualWeights) {
    const auto half = interference_distributions(make_interference_setup(std::sqrt(0.5), std::sqrt(0.5)));
    EXPECT_NEAR(half.mixture.p_plus, 0.5, 1e-12);
    for (double a2 : {0.1, 0.3, 0.45, 0.55, 0.9}) {
        const auto r = interference_distributions(make_interference_setup(std::sqrt(a2), std::sqrt(1 - a2)));
        EXPECT_GT(r.mixture.p_plus, half.mixture.p_plus);
    }
}

TEST(Interference, SingleBranchIsIndistinguishable) {
    const auto r = interference_distributions(make_interference_setup(1.0, 0.0));
    EXPECT_NEAR(r.pure.p_plus, 1.0, 1e-12);
    EXPECT_NEAR(r.mixture.p_plus, 1.0, 1e-12);
}

TEST(Interference, SetupInvariants) {
    const auto s = make_interference_setup(0.6, 0.8);
    EXPECT_NEAR(s.pure_state.norm_squared(), 1.0, 1e-12);
    ASSERT_EQ(s.collapsed_mixture.size(), 2u);
    EXPECT_NEAR(s.collapsed_mixture[0].first, 0.36, 1e-12);
    EXPECT_NEAR(s.collapsed_mixture[1].first, 0.64, 1e-12);
}

TEST(Interference, BadMixtureWeights) {
    auto s = make_interference_setup(0.6, 0.8);
    s.collapsed_mixture[0].first = 0.5;
    expect_error(ErrorKind::NotNormalized, [&] { interference_distributions(s); });
    s.collapsed_mixture[0].first = -0.36;
    expect_error(ErrorKind::InvalidArgument, [&] { interference_distributions(s); });
}

TEST(Cube, ThreeParameterizationsDisagree) {
    const CubeFactorySpec spec{2.0, 0.0, 1.0};
    const double side = cube_probability(spec, CubeParameterization::side_length);
    const double paper = cube_probability(spec, CubeParameterization::paper_volume);
    const double geo = cube_probability(spec, CubeParameterization::geometric_volume);
    EXPECT_DOUBLE_EQ(side, 0.5);
    EXPECT_DOUBLE_EQ(paper, 0.25);
    EXPECT_DOUBLE_EQ(geo, 0.125);
    EXPECT_NE(side, paper);
    EXPECT_NE(paper, geo);
    EXPECT_NE(side, geo);
}

TEST(Cube, FullRangeIsCertain) {
    const CubeFactorySpec spec{2.0, 0.0, 2.0};
    EXPECT_DOUBLE_EQ(cube_probability(spec, CubeParameterization::side_length), 1.0);
    EXPECT_DOUBLE_EQ(cube_probability(spec, CubeParameterization::geometric_volume), 1.0);
    // Side^3 reaches 8 but the quoted volume range stops at 4.
    EXPECT_DOUBLE_EQ(cube_probability(spec, CubeParameterization::paper_volume), 1.0);
}

TEST(Cube, Names) {
    EXPECT_EQ(parameterization_name(CubeParameterization::side_length), "side");
    EXPECT_EQ(parameterization_name(CubeParameterization::paper_volume), "paper-volume");
    EXPECT_EQ(parameterization_name(CubeParameterization::geometric_volume), "geometric-volume");
}

TEST(Cube, InvalidIntervals) {
    for (const CubeFactorySpec bad : {CubeFactorySpec{2.0, 1.5, 1.0}, CubeFactorySpec{2.0, -0.1, 1.0},
                                      CubeFactorySpec{2.0, 0.0, 2.5}, CubeFactorySpec{0.0, 0.0, 0.0}}) {
        expect_error(ErrorKind::InvalidInterval, [&] { cube_probability(bad, CubeParameterization::side_length); });
    }
}
