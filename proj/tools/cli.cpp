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

#include "cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "branchlab/branchlab.hpp"

namespace branchlab::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Input parsing

std::string read_file(const std::string &flag, const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError(flag, "cannot read '" + path + "'");
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json_file(const std::string &flag, const std::string &path) {
    try {
        return json::parse(read_file(flag, path));
    } catch (const json::exception &e) {
        throw UsageError(flag, "'" + path + "' is not valid JSON: " + e.what());
    }
}

/// Runs f, reporting library and parse errors against flag.
template <class F>
auto checked(const std::string &flag, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const UsageError &) {
        throw;
    } catch (const Error &e) {
        throw UsageError(flag, e.what());
    } catch (const json::exception &e) {
        throw UsageError(flag, e.what());
    }
}

double parse_double(const std::string &flag, const std::string &text) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) {
        throw UsageError(flag, "'" + text + "' is not a finite number");
    }
    return v;
}

std::uint64_t parse_count(const std::string &flag, const std::string &text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos || text.size() > 19) {
        throw UsageError(flag, "'" + text + "' is not a non-negative integer");
    }
    return std::stoull(text);
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        out.push_back(cur);
    }
    return out;
}

bool starts_with(const std::string &s, std::string_view prefix) {
    return s.rfind(prefix, 0) == 0;
}

std::string file_part(const std::string &token) {
    return starts_with(token, "file:") ? token.substr(5) : token;
}

bool is_file_token(const std::string &token) {
    static const char *const named[] = {"all", "singleton", "by-frequency", "whole", "graham", "prefix"};
    for (const char *n : named) {
        if (token == n) {
            return false;
        }
    }
    return !starts_with(token, "graham:") && !starts_with(token, "prefix:");
}

measures::TypicalityMeasure parse_measure(const RunConfig &c) {
    const std::string &m = c.measure;
    const std::string flag = "--measure";
    if (m == "norm-squared") {
        return measures::NormSquared{};
    }
    if (m == "count" || m == "branch-count") {
        return measures::BranchCount{};
    }
    if (starts_with(m, "power:")) {
        auto parts = split(m.substr(6), ':');
        if (parts.empty() || parts.size() > 2 || (parts.size() == 2 && parts[1] != "raw")) {
            throw UsageError(flag, "expected power:P or power:P:raw");
        }
        return measures::AmplitudePower{parse_double(flag, parts[0]), parts.size() == 1};
    }
    if (starts_with(m, "graham:")) {
        const auto n = parse_count(flag, m.substr(7));
        if (n == 0) {
            throw UsageError(flag, "Graham resolution must be positive");
        }
        return measures::GrahamCount{n};
    }
    if (starts_with(m, "table:")) {
        const json &t = c.measure_table;
        if (!t.is_object()) {
            throw UsageError(flag, "weight table must be a JSON object keyed by outcome label");
        }
        auto weight = [&](const char *a, const char *b) {
            const json *v = t.contains(a) ? &t.at(a) : (t.contains(b) ? &t.at(b) : nullptr);
            if (!v || !v->is_number()) {
                throw UsageError(flag, std::string("weight table needs a numeric '") + a + "' entry");
            }
            const double w = v->get<double>();
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw UsageError(flag, "weights must be finite and non-negative");
            }
            return w;
        };
        const double up = weight("↑", "up");
        const double down = weight("↓", "down");
        if (!(up + down > 0.0)) {
            throw UsageError(flag, "weight table assigns zero weight to both outcomes");
        }
        return measures::BasisFunction{up, down};
    }
    throw UsageError(flag, "unknown measure '" + m + "' (norm-squared, count, power:P, graham:N, table:FILE)");
}

StepAmplitudes parse_step(const RunConfig &c) {
    if (!(c.alpha_sq >= 0.0 && c.alpha_sq <= 1.0)) {
        throw UsageError("--alpha-sq", "must lie in [0, 1]");
    }
    double beta_sq = 1.0 - c.alpha_sq;
    if (c.beta_sq) {
        if (!(*c.beta_sq >= 0.0 && *c.beta_sq <= 1.0)) {
            throw UsageError("--beta-sq", "must lie in [0, 1]");
        }
        if (std::abs(c.alpha_sq + *c.beta_sq - 1.0) > kTolerance) {
            throw UsageError("--beta-sq", "alpha^2 + beta^2 must equal 1");
        }
        beta_sq = *c.beta_sq;
    }
    return {Amplitude{std::sqrt(c.alpha_sq)}, Amplitude{std::sqrt(beta_sq)}};
}

std::vector<std::vector<Record>> parse_cells(const json &j) {
    const json &cells = j.is_object() ? j.at("cells") : j;
    if (!cells.is_array()) {
        throw UsageError("--partition", "partition file must hold an array of cells");
    }
    std::vector<std::vector<Record>> out;
    for (const auto &cell : cells) {
        if (!cell.is_array()) {
            throw UsageError("--partition", "each cell must be an array of record strings");
        }
        std::vector<Record> members;
        for (const auto &r : cell) {
            members.push_back(checked("--partition", [&] { return Record::parse(r.get<std::string>()); }));
        }
        out.push_back(std::move(members));
    }
    return out;
}

std::string default_partition(const std::string &command) {
    if (command == "measures-check") {
        return "all";
    }
    // Merging sibling branches of the first step.
    return command == "uniqueness-scan" ? "prefix:1" : "singleton";
}

std::string effective_partition(const RunConfig &c) {
    return c.partition.empty() ? default_partition(c.command) : c.partition;
}

/// Coarse-grainings of the layer named by a comma list.
std::vector<Partition> parse_coarse_grainings(const RunConfig &c, const BranchLayer &layer) {
    const std::string flag = "--partition";
    std::vector<Partition> out;
    for (const auto &token : split(effective_partition(c), ',')) {
        if (token == "all") {
            for (unsigned len = 0; len <= layer.depth(); ++len) {
                out.push_back(prefix_partition(layer, len));
            }
            out.push_back(by_frequency_partition(layer));
        } else if (token == "singleton") {
            out.push_back(singleton_partition(layer));
        } else if (token == "by-frequency") {
            out.push_back(by_frequency_partition(layer));
        } else if (token == "whole") {
            out.push_back(whole_partition(layer));
        } else if (token == "prefix") {
            for (unsigned len = 0; len <= layer.depth(); ++len) {
                out.push_back(prefix_partition(layer, len));
            }
        } else if (starts_with(token, "prefix:")) {
            const auto len = parse_count(flag, token.substr(7));
            if (len > layer.depth()) {
                throw UsageError(flag, "prefix length exceeds the layer depth");
            }
            out.push_back(prefix_partition(layer, static_cast<unsigned>(len)));
        } else if (token == "graham" || starts_with(token, "graham:")) {
            throw UsageError(flag, "Graham worlds refine branches and are not a coarse-graining; use them with select");
        } else {
            if (c.partition_cells.is_null()) {
                throw UsageError(flag, "partition file '" + token + "' was not loaded");
            }
            const auto cells = parse_cells(c.partition_cells);
            out.push_back(checked(flag, [&] { return coarse_grain(layer, cells); }));
        }
    }
    if (out.empty()) {
        throw UsageError(flag, "no partitions given");
    }
    return out;
}

selection::PartitionSpec parse_partition_spec(const RunConfig &c, const std::string &token) {
    const std::string flag = "--partition";
    if (token == "singleton") {
        return selection::SingletonCells{};
    }
    if (token == "by-frequency") {
        return selection::FrequencyCells{};
    }
    if (token == "graham") {
        return selection::GrahamWorlds{c.resolution};
    }
    if (starts_with(token, "graham:")) {
        return selection::GrahamWorlds{parse_count(flag, token.substr(7))};
    }
    if (token == "all" || token == "whole" || starts_with(token, "prefix")) {
        throw UsageError(flag, "'" + token + "' is not an indifference partition (singleton, by-frequency, graham, FILE)");
    }
    if (c.partition_cells.is_null()) {
        throw UsageError(flag, "partition file '" + token + "' was not loaded");
    }
    return selection::ExplicitCells{parse_cells(c.partition_cells)};
}

selection::SelectionRule parse_rule(const RunConfig &c, const std::string &flag, const std::string &text) {
    if (text == "collapse-per-step") {
        return selection::CollapsePerStep{};
    }
    if (text == "collapse-once") {
        return selection::CollapseOnce{};
    }
    if (text == "self-location-mind" || text == "self-location") {
        return selection::SelfLocationMind{};
    }
    if (text == "indifference") {
        return selection::Indifference{parse_partition_spec(c, effective_partition(c))};
    }
    if (starts_with(text, "indifference:")) {
        return selection::Indifference{parse_partition_spec(c, text.substr(13))};
    }
    throw UsageError(flag,
                     "unknown rule '" + text +
                         "' (collapse-per-step, collapse-once, self-location-mind, indifference[:PARTITION])");
}

std::vector<theorems::RandomnessTest> parse_tests(const std::string &text) {
    std::vector<theorems::RandomnessTest> out;
    for (const auto &t : split(text, ',')) {
        out.push_back(checked("--tests", [&] { return theorems::parse_test(t); }));
    }
    if (out.empty()) {
        throw UsageError("--tests", "no tests given");
    }
    return out;
}

std::vector<double> parse_grid(const std::string &text) {
    std::vector<double> out;
    for (const auto &t : split(text, ',')) {
        out.push_back(parse_double("--p-grid", t));
    }
    if (out.empty()) {
        throw UsageError("--p-grid", "empty grid");
    }
    return out;
}

std::vector<demos::CubeParameterization> parse_modes(const std::string &mode) {
    using P = demos::CubeParameterization;
    if (mode == "all") {
        return {P::side_length, P::paper_volume, P::geometric_volume};
    }
    if (mode == "side" || mode == "side-length") {
        return {P::side_length};
    }
    if (mode == "paper-volume") {
        return {P::paper_volume};
    }
    if (mode == "geometric-volume") {
        return {P::geometric_volume};
    }
    throw UsageError("--mode", "unknown mode '" + mode + "' (side, paper-volume, geometric-volume, all)");
}

void check_range(const char *flag, double v, double lo, double hi, bool open) {
    const bool ok = open ? (v > lo && v < hi) : (v >= lo && v <= hi);
    if (!ok) {
        std::ostringstream s;
        s << "must lie in " << (open ? "(" : "[") << lo << ", " << hi << (open ? ")" : "]");
        throw UsageError(flag, s.str());
    }
}

void check_k(const RunConfig &c, unsigned lo, unsigned hi) {
    if (c.k < lo || c.k > hi) {
        throw UsageError("--k", "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

BranchLayer input_layer(const RunConfig &c, const StepAmplitudes &step) {
    if (!c.layer.is_null()) {
        return checked("--layer", [&] { return io::layer_from_json(c.layer); });
    }
    check_k(c, 0, kMaxLayerDepth);
    return build_layer(step.alpha, step.beta, c.k);
}

bool needs_layer_rule(const selection::SelectionRule &r) {
    return selection::detail::needs_layer(r);
}

void check_rule(const RunConfig &c, const selection::SelectionRule &rule, const StepAmplitudes &step,
                const std::string &flag) {
    check_k(c, 0, needs_layer_rule(rule) ? kMaxLayerDepth : Record::kMaxBits);
    if (const auto *ind = std::get_if<selection::Indifference>(&rule)) {
        if (const auto *g = std::get_if<selection::GrahamWorlds>(&ind->partition)) {
            if (g->resolution == 0) {
                throw UsageError("--resolution", "must be positive");
            }
            checked("--resolution", [&] { return measures::graham_split(step, g->resolution); });
        } else if (const auto *e = std::get_if<selection::ExplicitCells>(&ind->partition)) {
            const auto layer = build_layer(step.alpha, step.beta, c.k);
            checked("--partition", [&] { return selection::detail::resolve_cells(*e, layer); });
        }
    }
    (void)flag;
}

// ---------------------------------------------------------------------------
// Output

std::string dump(const json &j) {
    return j.dump(2) + "\n";
}

std::string num(double v) {
    return io::num(v);
}

json opt_json(const std::optional<unsigned> &v) {
    return v ? json(*v) : json(nullptr);
}

std::string run_branch(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto layer = build_layer(step.alpha, step.beta, c.k);
    if (c.format == "csv") {
        std::ostringstream out;
        out << "records,amp_re,amp_im,amplitude_sq\n";
        for (const auto &r : layer.branches()) {
            const Amplitude a = layer.amplitude(r);
            out << r.str() << ',' << num(a.real()) << ',' << num(a.imag()) << ',' << num(std::norm(a)) << '\n';
        }
        return out.str();
    }
    return dump(io::layer_to_json(layer));
}

std::string run_measures_check(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto layer = input_layer(c, step);
    const auto m = parse_measure(c);
    const auto partitions = parse_coarse_grainings(c, layer);
    const auto report = measures::check_axioms(m, layer, partitions, c.trials, c.seed);
    if (c.format == "csv") {
        return io::axiom_report_csv(report);
    }
    json j = io::axiom_report_json(report);
    j["depth"] = layer.depth();
    j["branches"] = layer.size();
    j["partitions"] = partitions.size();
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    return dump(j);
}

std::string run_uniqueness(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto layer = input_layer(c, step);
    const auto partitions = parse_coarse_grainings(c, layer);
    const auto grid = parse_grid(c.p_grid);
    const auto rows = measures::uniqueness_scan(grid, layer, partitions);
    if (c.format == "csv") {
        return io::uniqueness_csv(rows);
    }
    return dump(io::uniqueness_json(rows));
}

std::string run_graham(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto g = measures::build_graham_layer(step.alpha, step.beta, c.resolution, c.k);
    const double target = std::norm(step.alpha);
    const auto graham_exact = measures::count_fraction_near_exact(g, c.epsilon, target);
    const double graham = exact::to_double(graham_exact);
    const double everett = measures::count_fraction_near(measures::EverettCounting{c.k}, c.epsilon, target);
    const double mass = theorems::typical_mass(target, c.k, c.epsilon);
    if (c.format == "csv") {
        std::ostringstream out;
        out << "alpha_sq,k,epsilon,resolution,norm_squared_mass,everett_count_fraction,graham_count_fraction\n"
            << num(target) << ',' << c.k << ',' << num(c.epsilon) << ',' << c.resolution << ',' << num(mass) << ','
            << num(everett) << ',' << num(graham) << '\n';
        return out.str();
    }
    return dump({{"alpha_sq", target},
                 {"k", c.k},
                 {"epsilon", c.epsilon},
                 {"resolution", c.resolution},
                 {"up_worlds", g.up_worlds()},
                 {"down_worlds", g.down_worlds()},
                 {"norm_squared_mass", mass},
                 {"everett_count_fraction", everett},
                 {"graham_count_fraction", graham},
                 {"graham_count_fraction_exact", graham_exact.str()}});
}

std::string run_rf(const RunConfig &c) {
    const theorems::RFTheoremQuery q{c.alpha_sq, c.epsilon, c.delta, c.k_max};
    const auto r = theorems::minimal_k(q);
    const unsigned envelope = theorems::hoeffding_envelope(c.epsilon, c.delta);
    if (c.format == "csv") {
        std::ostringstream out;
        out << "alpha_sq,k,epsilon,mass\n";
        for (unsigned k = 1; k <= c.k_max; ++k) {
            out << num(c.alpha_sq) << ',' << k << ',' << num(c.epsilon) << ',' << num(r.masses[k - 1]) << '\n';
        }
        auto show = [](const std::optional<unsigned> &v) { return v ? std::to_string(*v) : std::string("none"); };
        out << "# delta=" << num(c.delta) << '\n'
            << "# first_k=" << show(r.first_k) << '\n'
            << "# stable_k=" << show(r.stable_k) << '\n'
            << "# holds_in_window=" << (r.holds_in_window ? "true" : "false") << '\n'
            << "# hoeffding_envelope=" << envelope << '\n';
        return out.str();
    }
    return dump({{"alpha_sq", c.alpha_sq},
                 {"epsilon", c.epsilon},
                 {"delta", c.delta},
                 {"k_max", c.k_max},
                 {"first_k", opt_json(r.first_k)},
                 {"stable_k", opt_json(r.stable_k)},
                 {"holds_in_window", r.holds_in_window},
                 {"window_end", r.window_end},
                 {"hoeffding_envelope", envelope},
                 {"masses", r.masses}});
}

theorems::RandomnessTestSpec randomness_spec(const RunConfig &c) {
    theorems::RandomnessTestSpec spec;
    spec.tests = parse_tests(c.tests);
    spec.significance = c.significance;
    spec.calibration_p = c.calibration_p;
    spec.block_length = c.block_length;
    return spec;
}

std::string run_randomness(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto spec = randomness_spec(c);
    const bool enumerate = c.k <= kMaxLayerDepth;
    const auto rows = enumerate ? theorems::randomness_mass(build_layer(step.alpha, step.beta, c.k), spec)
                                : theorems::randomness_mass_binomial(std::norm(step.alpha), c.k, spec);
    if (c.format == "csv") {
        std::ostringstream out;
        out << "test,measure_mass,count_fraction\n";
        for (const auto &r : rows) {
            out << theorems::test_name(r.test) << ',' << num(r.measure_mass) << ',' << num(r.count_fraction) << '\n';
        }
        return out.str();
    }
    return dump({{"alpha_sq", c.alpha_sq},
                 {"k", c.k},
                 {"significance", c.significance},
                 {"calibration_p", c.calibration_p},
                 {"block_length", c.block_length},
                 {"mode", enumerate ? "enumeration" : "binomial"},
                 {"rows", io::randomness_json(rows)}});
}

std::string run_select(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto rule = parse_rule(c, "--rule", c.rule);
    const auto result = selection::sample(rule, step.alpha, step.beta, c.k, c.n_samples, c.seed, c.sequences);
    const auto exact = selection::exact_rule_distribution(rule, step.alpha, step.beta, c.k);
    const auto empirical = result.up_counts.normalized();
    const double tv = selection::distribution_distance(empirical, exact);
    if (c.format == "csv") {
        std::ostringstream out;
        out << "up_count,count,empirical,exact\n";
        for (unsigned j = 0; j <= c.k; ++j) {
            out << j << ',' << result.up_counts.counts[j] << ',' << num(empirical[j]) << ',' << num(exact[j]) << '\n';
        }
        out << "# tv_to_exact=" << num(tv) << '\n';
        return out.str();
    }
    json j{{"rule", selection::rule_name(rule)},
           {"alpha_sq", c.alpha_sq},
           {"k", c.k},
           {"n_samples", c.n_samples},
           {"seed", c.seed},
           {"up_counts", result.up_counts.counts},
           {"empirical", empirical},
           {"exact", exact},
           {"tv_to_exact", tv}};
    if (result.sequences) {
        j["sequence_counts"] = result.sequences->counts;
    }
    return dump(j);
}

std::string run_compare(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto a = parse_rule(c, "--rule", c.rule);
    const auto b = parse_rule(c, "--rule-b", c.rule_b);
    auto r = selection::compare(a, b, step.alpha, step.beta, c.k, c.n_samples, c.seed);
    // Report the input, not |sqrt(alpha_sq)|^2.
    r.alpha_sq = c.alpha_sq;
    if (c.format == "csv") {
        std::ostringstream out;
        out << "rule_a,rule_b,alpha_sq,k,tv_exact,tv_empirical,n_samples,seed\n"
            << r.rule_a << ',' << r.rule_b << ',' << num(r.alpha_sq) << ',' << r.k << ',' << num(r.tv_exact) << ','
            << num(r.tv_empirical) << ',' << r.n_samples << ',' << r.seed << '\n';
        return out.str();
    }
    return dump(io::comparison_json(r));
}

std::string run_wigner(const RunConfig &c) {
    const auto step = parse_step(c);
    const auto setup = demos::make_interference_setup(step.alpha, step.beta);
    const auto r = demos::interference_distributions(setup);
    if (c.format == "csv") {
        std::ostringstream out;
        out << "state,p_plus,p_minus\n"
            << "pure," << num(r.pure.p_plus) << ',' << num(r.pure.p_minus) << '\n'
            << "mixture," << num(r.mixture.p_plus) << ',' << num(r.mixture.p_minus) << '\n';
        return out.str();
    }
    return dump({{"alpha", io::amplitude_json(step.alpha)},
                 {"beta", io::amplitude_json(step.beta)},
                 {"pure", {{"p_plus", r.pure.p_plus}, {"p_minus", r.pure.p_minus}}},
                 {"mixture", {{"p_plus", r.mixture.p_plus}, {"p_minus", r.mixture.p_minus}}},
                 {"distinguishable", std::abs(r.pure.p_plus - r.mixture.p_plus) > kTolerance}});
}

std::string run_cube(const RunConfig &c) {
    const demos::CubeFactorySpec spec{c.max_side, c.side_lo, c.side_hi};
    const auto modes = parse_modes(c.mode);
    if (c.format == "csv") {
        std::ostringstream out;
        out << "mode,probability\n";
        for (auto m : modes) {
            out << demos::parameterization_name(m) << ',' << num(demos::cube_probability(spec, m)) << '\n';
        }
        return out.str();
    }
    json results = json::array();
    for (auto m : modes) {
        results.push_back({{"mode", std::string(demos::parameterization_name(m))},
                           {"probability", demos::cube_probability(spec, m)}});
    }
    return dump({{"max_side", c.max_side}, {"side_lo", c.side_lo}, {"side_hi", c.side_hi}, {"results", results}});
}

struct Command {
    const char *name;
    const char *help;
    std::string (*exec)(const RunConfig &);
};

const Command kCommands[] = {
    {"branch", "Build the branch layer for k measurements", run_branch},
    {"measures-check", "Check the measure conditions on a layer", run_measures_check},
    {"uniqueness-scan", "Sub-branch additivity of |a|^p over a p grid", run_uniqueness},
    {"graham", "Graham world counting against Everett counting", run_graham},
    {"rf-theorem", "Typical mass against k and the minimal k", run_rf},
    {"randomness", "Measure and count mass of branches passing randomness tests", run_randomness},
    {"select", "Sample a branch-selection rule", run_select},
    {"compare", "Compare two selection rules", run_compare},
    {"wigner", "Pure state against collapsed mixture for the interference observable", run_wigner},
    {"cube-factory", "Indifference over side length and volume", run_cube},
};

const Command *find_command(const std::string &name) {
    for (const auto &c : kCommands) {
        if (name == c.name) {
            return &c;
        }
    }
    return nullptr;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Payloads above this size are logged by hash only.
constexpr std::size_t kMaxLoggedPayload = std::size_t{4} << 20;

}  // namespace

// ---------------------------------------------------------------------------
// Config and run log

json to_json(const RunConfig &c) {
    return {{"command", c.command},
            {"alpha_sq", c.alpha_sq},
            {"beta_sq", c.beta_sq ? json(*c.beta_sq) : json(nullptr)},
            {"k", c.k},
            {"epsilon", c.epsilon},
            {"delta", c.delta},
            {"significance", c.significance},
            {"calibration_p", c.calibration_p},
            {"block_length", c.block_length},
            {"measure", c.measure},
            {"measure_table", c.measure_table},
            {"partition", c.partition},
            {"partition_cells", c.partition_cells},
            {"layer", c.layer},
            {"resolution", c.resolution},
            {"n_samples", c.n_samples},
            {"seed", c.seed},
            {"trials", c.trials},
            {"k_max", c.k_max},
            {"tests", c.tests},
            {"p_grid", c.p_grid},
            {"rule", c.rule},
            {"rule_b", c.rule_b},
            {"sequences", c.sequences},
            {"mode", c.mode},
            {"max_side", c.max_side},
            {"side_lo", c.side_lo},
            {"side_hi", c.side_hi},
            {"format", c.format},
            {"out", c.out}};
}

RunConfig config_from_json(const json &j) {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.alpha_sq = j.at("alpha_sq").get<double>();
    if (!j.at("beta_sq").is_null()) {
        c.beta_sq = j.at("beta_sq").get<double>();
    }
    c.k = j.at("k").get<unsigned>();
    c.epsilon = j.at("epsilon").get<double>();
    c.delta = j.at("delta").get<double>();
    c.significance = j.at("significance").get<double>();
    c.calibration_p = j.at("calibration_p").get<double>();
    c.block_length = j.at("block_length").get<unsigned>();
    c.measure = j.at("measure").get<std::string>();
    c.measure_table = j.at("measure_table");
    c.partition = j.at("partition").get<std::string>();
    c.partition_cells = j.at("partition_cells");
    c.layer = j.at("layer");
    c.resolution = j.at("resolution").get<std::uint64_t>();
    c.n_samples = j.at("n_samples").get<std::uint64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.trials = j.at("trials").get<unsigned>();
    c.k_max = j.at("k_max").get<unsigned>();
    c.tests = j.at("tests").get<std::string>();
    c.p_grid = j.at("p_grid").get<std::string>();
    c.rule = j.at("rule").get<std::string>();
    c.rule_b = j.at("rule_b").get<std::string>();
    c.sequences = j.at("sequences").get<bool>();
    c.mode = j.at("mode").get<std::string>();
    c.max_side = j.at("max_side").get<double>();
    c.side_lo = j.at("side_lo").get<double>();
    c.side_hi = j.at("side_hi").get<double>();
    c.format = j.at("format").get<std::string>();
    c.out = j.at("out").get<std::string>();
    return c;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const RunConfig &c) {
    json j = to_json(c);
    j.erase("out");
    return hex16(fnv1a64(j.dump()));
}

void validate(const RunConfig &c) {
    const Command *cmd = find_command(c.command);
    if (!cmd) {
        throw UsageError("command", "unknown subcommand '" + c.command + "'");
    }
    if (c.format != "json" && c.format != "csv") {
        throw UsageError("--format", "must be json or csv");
    }
    if (!c.out.empty()) {
        const auto parent = std::filesystem::path(c.out).parent_path();
        if (!parent.empty() && !std::filesystem::is_directory(parent)) {
            throw UsageError("--out", "directory '" + parent.string() + "' does not exist");
        }
    }
    const std::string &name = c.command;
    if (name == "rf-theorem") {
        check_range("--alpha-sq", c.alpha_sq, 0.0, 1.0, false);
        check_range("--epsilon", c.epsilon, 0.0, 1.0, true);
        check_range("--delta", c.delta, 0.0, 1.0, true);
        if (c.k_max < 1 || c.k_max > theorems::kMaxScanDepth) {
            throw UsageError("--k-max", "must lie in [1, 10000]");
        }
        return;
    }
    if (name == "cube-factory") {
        parse_modes(c.mode);
        if (!(c.max_side > 0.0)) {
            throw UsageError("--max-side", "must be positive");
        }
        if (!(c.side_lo >= 0.0) || c.side_lo > c.side_hi) {
            throw UsageError("--side-lo", "need 0 <= side-lo <= side-hi");
        }
        if (c.side_hi > c.max_side) {
            throw UsageError("--side-hi", "exceeds --max-side");
        }
        return;
    }
    const auto step = parse_step(c);
    if (name == "branch") {
        check_k(c, 0, kMaxLayerDepth);
    } else if (name == "measures-check" || name == "uniqueness-scan") {
        const auto layer = input_layer(c, step);
        if (name == "measures-check") {
            const auto m = parse_measure(c);
            if (const auto *g = std::get_if<measures::GrahamCount>(&m)) {
                if (layer.steps().size() != layer.depth()) {
                    throw UsageError("--measure", "Graham counting needs a layer built from step amplitudes");
                }
                for (const auto &s : layer.steps()) {
                    checked("--measure", [&] { return measures::graham_split(s, g->resolution); });
                }
            }
            if (c.trials < 1) {
                throw UsageError("--trials", "must be at least 1");
            }
        } else {
            parse_grid(c.p_grid);
        }
        parse_coarse_grainings(c, layer);
    } else if (name == "graham") {
        check_k(c, 1, theorems::kMaxScanDepth);
        check_range("--epsilon", c.epsilon, 0.0, 1.0, true);
        if (c.resolution == 0) {
            throw UsageError("--resolution", "must be positive");
        }
        checked("--resolution", [&] { return measures::graham_split(step, c.resolution); });
    } else if (name == "randomness") {
        check_k(c, 1, theorems::kMaxScanDepth);
        const auto spec = randomness_spec(c);
        check_range("--significance", c.significance, 0.0, 0.5, true);
        check_range("--calibration-p", c.calibration_p, 0.0, 1.0, false);
        if (c.block_length < 1 || c.block_length > 8) {
            throw UsageError("--block-length", "must lie in [1, 8]");
        }
        if (c.k > kMaxLayerDepth) {
            for (auto t : spec.tests) {
                if (t != theorems::RandomnessTest::monobit) {
                    throw UsageError("--tests", std::string(theorems::test_name(t)) + " needs k <= 24");
                }
            }
        }
    } else if (name == "select" || name == "compare") {
        if (c.n_samples < 1) {
            throw UsageError("--n-samples", "must be at least 1");
        }
        const auto a = parse_rule(c, "--rule", c.rule);
        check_rule(c, a, step, "--rule");
        if (name == "compare") {
            const auto b = parse_rule(c, "--rule-b", c.rule_b);
            check_rule(c, b, step, "--rule-b");
        } else if (c.sequences && c.k > selection::kMaxSequenceDepth) {
            throw UsageError("--sequences", "sequence histograms need k <= 16");
        }
    }
}

std::string execute(const RunConfig &c) {
    const Command *cmd = find_command(c.command);
    if (!cmd) {
        throw UsageError("command", "unknown subcommand '" + c.command + "'");
    }
    return cmd->exec(c);
}

json to_json(const RunRecord &r) {
    json j{{"id", r.id},
           {"command", r.config.command},
           {"config", to_json(r.config)},
           {"config_hash", r.config_hash},
           {"started", r.started},
           {"finished", r.finished},
           {"version", r.version},
           {"payload_bytes", r.payload.size()},
           {"payload_hash", r.payload_hash}};
    if (r.payload.size() <= kMaxLoggedPayload) {
        j["payload"] = r.payload;
    }
    return j;
}

std::filesystem::path default_run_dir() {
    const char *env = std::getenv(kRunDirEnv);
    return env && *env ? std::filesystem::path(env) : std::filesystem::path("branchlab-runs");
}

void append_run(const std::filesystem::path &dir, const RunRecord &r) {
    std::filesystem::create_directories(dir);
    const std::string line = to_json(r).dump() + "\n";
    const auto path = (dir / kRunLogName).string();
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw std::runtime_error("cannot open run log '" + path + "': " + std::strerror(errno));
    }
    const ssize_t n = ::write(fd, line.data(), line.size());
    const int saved = errno;
    ::close(fd);
    if (n != static_cast<ssize_t>(line.size())) {
        throw std::runtime_error("short write to run log '" + path + "': " + std::strerror(saved));
    }
}

std::optional<json> find_run(const std::filesystem::path &dir, const std::string &id) {
    std::ifstream in(dir / kRunLogName);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.value("id", "") == id) {
            return j;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Entry point

namespace {

struct Defaults {
    double alpha_sq;
    unsigned k;
};

Defaults command_defaults(const std::string &name) {
    if (name == "branch" || name == "uniqueness-scan") {
        return {0.5, 2};
    }
    if (name == "measures-check") {
        return {0.5, 4};
    }
    if (name == "graham") {
        return {0.36, 100};
    }
    if (name == "randomness") {
        return {0.5, 20};
    }
    return {0.5, 10};
}

void load_files(RunConfig &c, const std::string &layer_path) {
    if (starts_with(c.measure, "table:")) {
        c.measure_table = read_json_file("--measure", c.measure.substr(6));
    }
    const std::string part = effective_partition(c);
    std::string file;
    for (const auto &token : split(part, ',')) {
        if (is_file_token(token)) {
            if (!file.empty()) {
                throw UsageError("--partition", "at most one partition file");
            }
            file = file_part(token);
        }
    }
    for (const auto *r : {&c.rule, &c.rule_b}) {
        if (starts_with(*r, "indifference:") && is_file_token(r->substr(13))) {
            const auto f = file_part(r->substr(13));
            if (!file.empty() && f != file) {
                throw UsageError(r == &c.rule ? "--rule" : "--rule-b", "at most one partition file");
            }
            file = f;
        }
    }
    if (!file.empty()) {
        c.partition_cells = read_json_file("--partition", file);
    }
    if (!layer_path.empty()) {
        c.layer = read_json_file("--layer", layer_path);
    }
}

void write_output(const RunConfig &c, const std::string &payload, std::ostream &out) {
    if (c.out.empty()) {
        out << payload;
        out.flush();
        return;
    }
    std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
    f << payload;
    if (!f) {
        throw std::runtime_error("cannot write '" + c.out + "'");
    }
}

int do_replay(const std::string &id, bool print, Streams &io) {
    const auto entry = find_run(io.run_dir, id);
    if (!entry) {
        io.err << "error: EntryNotFound: no run '" << id << "' in " << (io.run_dir / kRunLogName).string() << "\n";
        return kUsage;
    }
    RunConfig c;
    try {
        c = config_from_json(entry->at("config"));
    } catch (const json::exception &e) {
        io.err << "error: ReplayMismatch: stored config is unreadable: " << e.what() << "\n";
        return kInternal;
    }
    const std::string stored_hash = entry->value("config_hash", "");
    if (config_hash(c) != stored_hash) {
        io.err << "error: ReplayMismatch: config hash " << stored_hash << " does not match stored config ("
               << config_hash(c) << ")\n";
        return kInternal;
    }
    if (entry->value("version", "") != kVersion) {
        io.err << "warning: run was logged by version " << entry->value("version", "?") << "\n";
    }
    validate(c);
    const std::string payload = execute(c);
    const bool same = entry->contains("payload") ? entry->at("payload").get<std::string>() == payload
                                                 : entry->value("payload_hash", "") == hex16(fnv1a64(payload));
    if (!same) {
        io.err << "error: ReplayMismatch: run " << id << " produced different output\n";
        return kInternal;
    }
    if (print) {
        io.out << payload;
    } else {
        io.out << "replay " << id << ": identical (" << payload.size() << " bytes, " << hex16(fnv1a64(payload))
               << ")\n";
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string> &args, Streams &io) {
    CLI::App app{"Everett branch trees, typicality measures and selection rules"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    RunConfig c;
    std::string layer_path;
    double beta_sq = 0.0;
    std::map<std::string, CLI::App *> subs;
    std::map<std::string, std::pair<CLI::Option *, CLI::Option *>> defaults_opts;
    CLI::Option *calibration = nullptr;

    for (const auto &cmd : kCommands) {
        CLI::App *s = app.add_subcommand(cmd.name, cmd.help);
        subs[cmd.name] = s;
        const std::string n = cmd.name;
        s->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        s->add_option("--out", c.out, "Write results here instead of stdout");
        CLI::Option *alpha = nullptr;
        CLI::Option *k = nullptr;
        if (n != "cube-factory") {
            alpha = s->add_option("--alpha-sq", c.alpha_sq, "|alpha|^2 of each measured spin");
        }
        if (n != "cube-factory" && n != "rf-theorem") {
            s->add_option("--beta-sq", beta_sq, "|beta|^2 (default 1 - alpha^2)");
        }
        if (n != "cube-factory" && n != "rf-theorem" && n != "wigner") {
            k = s->add_option("--k", c.k, "Number of measurements");
        }
        defaults_opts[n] = {alpha, k};
        if (n == "graham" || n == "rf-theorem") {
            s->add_option("--epsilon", c.epsilon, "Frequency tolerance");
        }
        if (n == "rf-theorem") {
            s->add_option("--delta", c.delta, "Allowed atypical mass");
            s->add_option("--k-max", c.k_max, "Largest k scanned");
        }
        if (n == "measures-check") {
            s->add_option("--measure", c.measure, "norm-squared, count, power:P[:raw], graham:N, table:FILE");
            s->add_option("--trials", c.trials, "Random subsets and phase draws");
            s->add_option("--seed", c.seed, "RNG seed");
        }
        if (n == "measures-check" || n == "uniqueness-scan") {
            s->add_option("--layer", layer_path, "Layer JSON file (overrides --alpha-sq/--k)");
        }
        if (n == "measures-check" || n == "uniqueness-scan" || n == "select" || n == "compare") {
            s->add_option("--partition", c.partition, "singleton, by-frequency, graham, prefix:L, whole, all or FILE");
        }
        if (n == "uniqueness-scan") {
            s->add_option("--p-grid", c.p_grid, "Comma-separated exponents");
        }
        if (n == "graham" || n == "select" || n == "compare") {
            s->add_option("--resolution", c.resolution, "Worlds per split (N)");
        }
        if (n == "randomness") {
            s->add_option("--tests", c.tests, "Comma list of monobit, runs, block-entropy");
            s->add_option("--significance", c.significance, "Test level");
            calibration = s->add_option("--calibration-p", c.calibration_p, "Bernoulli parameter the tests assume (default alpha^2)");
            s->add_option("--block-length", c.block_length, "Block length for block-entropy");
        }
        if (n == "select" || n == "compare") {
            s->add_option("--rule", c.rule, "collapse-per-step, collapse-once, self-location-mind, indifference[:P]");
            s->add_option("--n-samples", c.n_samples, "Number of samples");
            s->add_option("--seed", c.seed, "RNG seed");
        }
        if (n == "select") {
            s->add_flag("--sequences", c.sequences, "Also histogram full sequences (k <= 16)");
        }
        if (n == "compare") {
            s->add_option("--rule-b", c.rule_b, "Second rule");
        }
        if (n == "cube-factory") {
            s->add_option("--mode", c.mode, "side, paper-volume, geometric-volume or all");
            s->add_option("--max-side", c.max_side, "Largest side length");
            s->add_option("--side-lo", c.side_lo, "Event lower side length");
            s->add_option("--side-hi", c.side_hi, "Event upper side length");
        }
    }

    std::string replay_id;
    bool replay_print = false;
    CLI::App *replay = app.add_subcommand("replay", "Re-run a logged run and check its output");
    replay->add_option("--id", replay_id, "Run id")->required();
    replay->add_flag("--print", replay_print, "Print the reproduced payload");

    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp &e) {
        io.out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &e) {
        io.out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion &e) {
        io.out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError &e) {
        io.err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (replay->parsed()) {
            return do_replay(replay_id, replay_print, io);
        }
        for (const auto &[name, s] : subs) {
            if (!s->parsed()) {
                continue;
            }
            c.command = name;
            const Defaults d = command_defaults(name);
            const auto [alpha, k] = defaults_opts[name];
            if (alpha && alpha->count() == 0) {
                c.alpha_sq = d.alpha_sq;
            }
            if (k && k->count() == 0) {
                c.k = d.k;
            }
            if (name == "randomness" && calibration->count() == 0) {
                c.calibration_p = c.alpha_sq;
            }
            if (s->get_option_no_throw("--beta-sq") && s->get_option("--beta-sq")->count() > 0) {
                c.beta_sq = beta_sq;
            }
        }
        load_files(c, layer_path);
        validate(c);
    } catch (const UsageError &e) {
        io.err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error &e) {
        io.err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception &e) {
        io.err << "error: internal: " << e.what() << "\n";
        return kInternal;
    }

    RunRecord record;
    try {
        record.started = utc_now();
        record.payload = execute(c);
        record.finished = utc_now();
        write_output(c, record.payload, io.out);
    } catch (const std::exception &e) {
        io.err << "error: internal: " << e.what() << "\n";
        return kInternal;
    }

    record.config = c;
    record.config_hash = config_hash(c);
    record.version = kVersion;
    record.payload_hash = hex16(fnv1a64(record.payload));
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    record.id = c.command + "-" +
                hex16(fnv1a64(record.config_hash + std::to_string(ns) + std::to_string(::getpid()))).substr(0, 12);
    try {
        append_run(io.run_dir, record);
    } catch (const std::exception &e) {
        io.err << "error: " << e.what() << "\n";
        return kInternal;
    }
    io.err << "run " << record.id << "\n";
    return kOk;
}

}  // namespace branchlab::cli
