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

/**
 * @file
 * JSON and CSV forms of layers and reports. Field names are stable.
 */

#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "branchlab/branching.hpp"
#include "branchlab/measures.hpp"
#include "branchlab/randomness.hpp"
#include "branchlab/selection.hpp"

namespace branchlab::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json amplitude_json(Amplitude a) {
    return json::array({a.real(), a.imag()});
}

inline Amplitude amplitude_from_json(const json &j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        fail(ErrorKind::InvalidArgument, "amplitude must be [re, im]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

/// Shortest round-trip decimal form, for CSV cells.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// {alpha:[re,im], beta:[re,im], depth, branches:[{records, amp:[re,im]}]}.
/// Heterogeneous layers also carry steps:[{alpha, beta}, ...] and put the
/// first step's amplitudes in alpha/beta.
inline json layer_to_json(const BranchLayer &layer) {
    json j;
    std::optional<StepAmplitudes> nominal = layer.nominal_step();
    if (!nominal && !layer.steps().empty()) {
        nominal = layer.steps().front();
    }
    j["alpha"] = nominal ? amplitude_json(nominal->alpha) : json(nullptr);
    j["beta"] = nominal ? amplitude_json(nominal->beta) : json(nullptr);
    j["depth"] = layer.depth();
    json branches = json::array();
    for (const auto &r : layer.branches()) {
        branches.push_back({{"records", r.str()}, {"amp", amplitude_json(layer.amplitude(r))}});
    }
    j["branches"] = std::move(branches);
    if (!layer.steps().empty() && !layer.iid()) {
        json steps = json::array();
        for (const auto &s : layer.steps()) {
            steps.push_back({{"alpha", amplitude_json(s.alpha)}, {"beta", amplitude_json(s.beta)}});
        }
        j["steps"] = std::move(steps);
    }
    return j;
}

inline BranchLayer layer_from_json(const json &j) {
    if (!j.is_object() || !j.contains("depth") || !j.contains("branches")) {
        fail(ErrorKind::InvalidArgument, "layer JSON needs depth and branches");
    }
    const unsigned depth = j.at("depth").get<unsigned>();
    if (depth > kMaxLayerDepth) {
        fail(ErrorKind::DepthTooLarge, "layer depth exceeds 24");
    }
    std::vector<Amplitude> amps(std::size_t{1} << depth);
    for (const auto &b : j.at("branches")) {
        const Record r = Record::parse(b.at("records").get<std::string>());
        if (r.depth() != depth) {
            fail(ErrorKind::ArityMismatch, "branch '" + r.str() + "' has the wrong depth");
        }
        amps[r.code()] = amplitude_from_json(b.at("amp"));
    }
    std::vector<StepAmplitudes> steps;
    std::optional<StepAmplitudes> nominal;
    if (j.contains("steps")) {
        for (const auto &s : j.at("steps")) {
            steps.push_back({amplitude_from_json(s.at("alpha")), amplitude_from_json(s.at("beta"))});
        }
    } else if (j.contains("alpha") && !j.at("alpha").is_null()) {
        nominal = StepAmplitudes{amplitude_from_json(j.at("alpha")), amplitude_from_json(j.at("beta"))};
        steps.assign(depth, *nominal);
    }
    return BranchLayer::from_amplitudes(depth, std::move(amps), std::move(steps), nominal);
}

inline json condition_json(const measures::ConditionResult &c) {
    return {{"passed", c.passed}, {"max_violation", c.max_violation}};
}

inline json axiom_report_json(const measures::AxiomReport &r) {
    return {{"measure_kind", r.measure_kind},
            {"param", r.param},
            {"condition_1", condition_json(r.condition_1)},
            {"condition_2", condition_json(r.condition_2)},
            {"condition_3", condition_json(r.condition_3)},
            {"condition_4", condition_json(r.condition_4)},
            {"amplitude_only", condition_json(r.amplitude_only)},
            {"subbranch_additivity", condition_json(r.subbranch_additivity)},
            {"all_passed", r.all_passed()}};
}

inline constexpr const char *kViolationCsvHeader = "measure_kind,param,condition,max_violation\n";

inline std::string axiom_report_csv(const measures::AxiomReport &r, bool header = true) {
    std::ostringstream out;
    if (header) {
        out << kViolationCsvHeader;
    }
    const std::pair<const char *, const measures::ConditionResult *> rows[] = {
        {"condition_1", &r.condition_1},     {"condition_2", &r.condition_2},
        {"condition_3", &r.condition_3},     {"condition_4", &r.condition_4},
        {"amplitude_only", &r.amplitude_only}, {"subbranch_additivity", &r.subbranch_additivity},
    };
    for (const auto &[name, c] : rows) {
        out << r.measure_kind << ',' << r.param << ',' << name << ',' << num(c->max_violation) << '\n';
    }
    return out.str();
}

inline json uniqueness_json(const std::vector<measures::UniquenessRow> &rows) {
    json arr = json::array();
    for (const auto &r : rows) {
        arr.push_back({{"measure_kind", "amplitude-power"},
                       {"param", r.p},
                       {"condition", "subbranch_additivity"},
                       {"max_violation", r.max_violation}});
    }
    return arr;
}

inline std::string uniqueness_csv(const std::vector<measures::UniquenessRow> &rows) {
    std::ostringstream out;
    out << kViolationCsvHeader;
    for (const auto &r : rows) {
        out << "amplitude-power," << num(r.p) << ",subbranch_additivity," << num(r.max_violation) << '\n';
    }
    return out.str();
}

inline json randomness_json(const std::vector<theorems::RandomnessRow> &rows) {
    json arr = json::array();
    for (const auto &r : rows) {
        arr.push_back({{"test", std::string(theorems::test_name(r.test))},
                       {"measure_mass", r.measure_mass},
                       {"count_fraction", r.count_fraction}});
    }
    return arr;
}

inline json comparison_json(const selection::ComparisonReport &r) {
    return {{"rule_a", r.rule_a},   {"rule_b", r.rule_b},         {"alpha_sq", r.alpha_sq},
            {"k", r.k},             {"tv_exact", r.tv_exact},     {"tv_empirical", r.tv_empirical},
            {"n_samples", r.n_samples}, {"seed", r.seed}};
}

}  // namespace branchlab::io
