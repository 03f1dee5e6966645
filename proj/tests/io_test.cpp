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

#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "branchlab/io.hpp"
#include "test_util.hpp"

using namespace branchlab;
using testutil::expect_error;
using nlohmann::json;

namespace {

void expect_same_layer(const BranchLayer &a, const BranchLayer &b) {
    ASSERT_EQ(a.depth(), b.depth());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.dense().size(); ++i) {
        EXPECT_EQ(a.dense()[i], b.dense()[i]) << i;
    }
    EXPECT_EQ(a.steps(), b.steps());
}

std::vector<std::string> lines(const std::string &s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

}  // namespace

TEST(LayerJson, Fields) {
    const auto s = real_step(0.36);
    const auto j = io::layer_to_json(build_layer(s.alpha, s.beta, 2));
    EXPECT_EQ(j.at("depth"), 2);
    EXPECT_NEAR(j.at("alpha")[0].get<double>(), 0.6, 1e-15);
    EXPECT_EQ(j.at("alpha")[1].get<double>(), 0.0);
    ASSERT_EQ(j.at("branches").size(), 4u);
    EXPECT_EQ(j.at("branches")[0].at("records"), "↑↑");
    EXPECT_EQ(j.at("branches")[3].at("records"), "↓↓");
    EXPECT_NEAR(j.at("branches")[3].at("amp")[0].get<double>(), 0.64, 1e-15);
    EXPECT_FALSE(j.contains("steps"));
}

TEST(LayerJson, RoundTripThroughText) {
    const Amplitude a = std::polar(std::sqrt(0.3), 0.4), b = std::polar(std::sqrt(0.7), -1.3);
    const auto layer = build_layer(a, b, 5);
    const auto back = io::layer_from_json(json::parse(io::layer_to_json(layer).dump()));
    expect_same_layer(layer, back);
    ASSERT_TRUE(back.nominal_step());
    EXPECT_EQ(back.nominal_step()->alpha, a);
}

TEST(LayerJson, RoundTripHeterogeneous) {
    const std::vector<StepAmplitudes> steps{real_step(0.2), real_step(0.5), real_step(0.9)};
    const auto layer = build_layer(steps);
    const auto j = io::layer_to_json(layer);
    ASSERT_TRUE(j.contains("steps"));
    EXPECT_EQ(j.at("steps").size(), 3u);
    expect_same_layer(layer, io::layer_from_json(json::parse(j.dump())));
}

TEST(LayerJson, PrunedBranchesOmitted) {
    const auto layer = build_layer(Amplitude{1.0}, Amplitude{0.0}, 3);
    const auto j = io::layer_to_json(layer);
    ASSERT_EQ(j.at("branches").size(), 1u);
    EXPECT_EQ(j.at("branches")[0].at("records"), "↑↑↑");
    expect_same_layer(layer, io::layer_from_json(j));
}

TEST(LayerJson, RejectsBadInput) {
    expect_error(ErrorKind::InvalidArgument, [] { io::layer_from_json(json::object()); });
    expect_error(ErrorKind::DepthTooLarge,
                 [] { io::layer_from_json(json{{"depth", 25}, {"branches", json::array()}}); });
    const json wrong_depth = {{"depth", 2}, {"branches", {{{"records", "↑"}, {"amp", {1.0, 0.0}}}}}};
    expect_error(ErrorKind::ArityMismatch, [&] { io::layer_from_json(wrong_depth); });
    const json unnormalized = {{"depth", 1}, {"branches", {{{"records", "↑"}, {"amp", {0.5, 0.0}}}}}};
    expect_error(ErrorKind::NotNormalized, [&] { io::layer_from_json(unnormalized); });
    expect_error(ErrorKind::InvalidArgument, [] { io::amplitude_from_json(json{1.0}); });
}

TEST(Csv, ViolationHeaderAndRows) {
    measures::AxiomReport r;
    r.measure_kind = "count";
    r.param = "";
    r.condition_4.max_violation = 0.25;
    const auto ls = lines(io::axiom_report_csv(r));
    ASSERT_EQ(ls.size(), 7u);
    EXPECT_EQ(ls[0], "measure_kind,param,condition,max_violation");
    EXPECT_EQ(ls[4], "count,,condition_4,0.25");
    EXPECT_EQ(lines(io::axiom_report_csv(r, false)).size(), 6u);
}

TEST(Csv, UniquenessRows) {
    const std::vector<measures::UniquenessRow> rows{{1.0, 0.5}, {2.0, 0.0}};
    const auto ls = lines(io::uniqueness_csv(rows));
    ASSERT_EQ(ls.size(), 3u);
    EXPECT_EQ(ls[0], "measure_kind,param,condition,max_violation");
    EXPECT_EQ(ls[1], "amplitude-power,1,subbranch_additivity,0.5");
    EXPECT_EQ(ls[2], "amplitude-power,2,subbranch_additivity,0");
    const auto j = io::uniqueness_json(rows);
    EXPECT_EQ(j[0].at("param"), 1.0);
}

TEST(Csv, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 0.044273789358805826, 1e-300}) {
        EXPECT_EQ(std::stod(io::num(v)), v);
    }
}

TEST(ReportJson, Comparison) {
    selection::ComparisonReport r{"collapse-once", "indifference(singleton)", 0.36, 10, 0.35, 0.351, 1000, 7};
    const auto j = io::comparison_json(r);
    EXPECT_EQ(j.at("rule_b"), "indifference(singleton)");
    EXPECT_EQ(j.at("k"), 10);
    EXPECT_EQ(j.at("seed"), 7);
}

TEST(ReportJson, Randomness) {
    const std::vector<theorems::RandomnessRow> rows{{theorems::RandomnessTest::runs, 0.9, 0.8}};
    const auto j = io::randomness_json(rows);
    EXPECT_EQ(j[0].at("test"), "runs");
    EXPECT_EQ(j[0].at("measure_mass"), 0.9);
}
