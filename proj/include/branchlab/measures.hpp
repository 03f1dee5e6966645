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
 * Typicality measures over the branches of a layer and the checks that
 * separate the norm-squared measure from its rivals.
 *
 * Two kinds of measure are offered. Magnitude measures assign a branch a
 * function f(|a|) of its amplitude alone: norm-squared (f = |a|^2),
 * amplitude-power (f = |a|^p) and branch-count (f = 1). When several
 * branches are regarded as one branch b* of a coarser decomposition, b* has
 * amplitude sqrt(sum |a_i|^2) and a magnitude measure evaluates f on that.
 * Record measures (Graham world counting, basis-function weights) assign
 * weight to record sequences, so a merged branch simply carries the total
 * weight of its members.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "branchlab/branching.hpp"
#include "branchlab/error.hpp"
#include "branchlab/exact.hpp"
#include "branchlab/rng.hpp"

namespace branchlab::measures {

struct NormSquared {};
struct BranchCount {};
struct AmplitudePower {
    double p = 2.0;
    bool renormalize = false;
};
/// World counting in which each measurement splits a world into
/// `resolution` worlds, N|alpha|^2 of them recording up.
struct GrahamCount {
    std::uint64_t resolution = 1;
};
/// Weight table over outcome labels; a branch weighs the product of its
/// outcomes' weights, renormalized over the layer.
struct BasisFunction {
    double up_weight = 1.0;
    double down_weight = 1.0;
};

using TypicalityMeasure = std::variant<NormSquared, BranchCount, AmplitudePower, GrahamCount, BasisFunction>;

inline std::string kind_name(const TypicalityMeasure &m) {
    struct V {
        std::string operator()(const NormSquared &) const { return "norm-squared"; }
        std::string operator()(const BranchCount &) const { return "branch-count"; }
        std::string operator()(const AmplitudePower &) const { return "amplitude-power"; }
        std::string operator()(const GrahamCount &) const { return "graham-count"; }
        std::string operator()(const BasisFunction &) const { return "basis-function"; }
    };
    return std::visit(V{}, m);
}

namespace detail {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string param_string(const TypicalityMeasure &m) {
    struct V {
        std::string operator()(const NormSquared &) const { return ""; }
        std::string operator()(const BranchCount &) const { return ""; }
        std::string operator()(const AmplitudePower &a) const {
            return detail::fmt_g(a.p) + (a.renormalize ? ";renormalized" : "");
        }
        std::string operator()(const GrahamCount &g) const { return std::to_string(g.resolution); }
        std::string operator()(const BasisFunction &b) const {
            return "up:" + detail::fmt_g(b.up_weight) + ";down:" + detail::fmt_g(b.down_weight);
        }
    };
    return std::visit(V{}, m);
}

inline bool is_magnitude_measure(const TypicalityMeasure &m) {
    return std::holds_alternative<NormSquared>(m) || std::holds_alternative<BranchCount>(m) ||
           std::holds_alternative<AmplitudePower>(m);
}

/// f(|a|) for magnitude measures, evaluated on a squared magnitude.
inline double magnitude_function(const TypicalityMeasure &m, double amplitude_sq) {
    if (amplitude_sq <= 0.0) {
        return 0.0;
    }
    if (std::holds_alternative<NormSquared>(m)) {
        return amplitude_sq;
    }
    if (std::holds_alternative<BranchCount>(m)) {
        return 1.0;
    }
    if (const auto *a = std::get_if<AmplitudePower>(&m)) {
        return std::pow(amplitude_sq, a->p / 2.0);
    }
    fail(ErrorKind::InvalidArgument, kind_name(m) + " is not a function of amplitudes");
}

/// Per-step world splits for Graham counting.
struct GrahamSplit {
    std::uint64_t up;
    std::uint64_t down;
};

inline GrahamSplit graham_split(const StepAmplitudes &step, std::uint64_t resolution) {
    if (resolution == 0) {
        fail(ErrorKind::InvalidArgument, "Graham resolution must be positive");
    }
    const double n = static_cast<double>(resolution);
    const double up = n * std::norm(step.alpha);
    const double down = n * std::norm(step.beta);
    const double up_r = std::round(up);
    const double down_r = std::round(down);
    if (std::abs(up - up_r) > kTolerance || std::abs(down - down_r) > kTolerance ||
        static_cast<std::uint64_t>(up_r) + static_cast<std::uint64_t>(down_r) != resolution) {
        fail(ErrorKind::NonIntegerSplit, "N|alpha|^2 = " + detail::fmt_g(up) + " and N|beta|^2 = " +
                                             detail::fmt_g(down) + " are not integers summing to N = " +
                                             std::to_string(resolution));
    }
    return {static_cast<std::uint64_t>(up_r), static_cast<std::uint64_t>(down_r)};
}

/// Un-normalized weight of every record code (zero for pruned branches).
inline std::vector<double> raw_branch_weights(const TypicalityMeasure &m, const BranchLayer &layer) {
    const auto amps = layer.dense();
    std::vector<double> w(amps.size(), 0.0);
    if (is_magnitude_measure(m)) {
        for (std::size_t i = 0; i < amps.size(); ++i) {
            w[i] = magnitude_function(m, std::norm(amps[i]));
        }
        return w;
    }
    if (const auto *g = std::get_if<GrahamCount>(&m)) {
        if (layer.steps().size() != layer.depth()) {
            fail(ErrorKind::InvalidArgument, "Graham counting needs a layer built from step amplitudes");
        }
        std::vector<GrahamSplit> splits;
        for (const auto &s : layer.steps()) {
            splits.push_back(graham_split(s, g->resolution));
        }
        const double n = static_cast<double>(g->resolution);
        for (std::uint32_t c = 0; c < amps.size(); ++c) {
            if (amps[c] == Amplitude{}) {
                continue;
            }
            const Record r(c, layer.depth());
            double frac = 1.0;
            for (unsigned j = 0; j < r.depth(); ++j) {
                frac *= static_cast<double>(r.at(j) == Outcome::up ? splits[j].up : splits[j].down) / n;
            }
            w[c] = frac;
        }
        return w;
    }
    const auto &b = std::get<BasisFunction>(m);
    if (!(b.up_weight >= 0.0) || !(b.down_weight >= 0.0) || !std::isfinite(b.up_weight) ||
        !std::isfinite(b.down_weight)) {
        fail(ErrorKind::InvalidArgument, "basis-function weights must be finite and non-negative");
    }
    for (std::uint32_t c = 0; c < amps.size(); ++c) {
        if (amps[c] == Amplitude{}) {
            continue;
        }
        const Record r(c, layer.depth());
        w[c] = std::pow(b.up_weight, r.up_count()) * std::pow(b.down_weight, r.down_count());
    }
    return w;
}

inline bool normalizes(const TypicalityMeasure &m) {
    if (const auto *a = std::get_if<AmplitudePower>(&m)) {
        return a->renormalize;
    }
    // Graham fractions are already normalized; the rest are rescaled below.
    return !std::holds_alternative<NormSquared>(m) && !std::holds_alternative<GrahamCount>(m);
}

/// Weight of every record code under the measure's own normalization.
inline std::vector<double> branch_weights(const TypicalityMeasure &m, const BranchLayer &layer) {
    auto w = raw_branch_weights(m, layer);
    if (normalizes(m)) {
        double total = 0;
        for (double x : w) {
            total += x;
        }
        if (!(total > 0.0)) {
            fail(ErrorKind::InvalidArgument, kind_name(m) + " assigns zero total weight to the layer");
        }
        for (double &x : w) {
            x /= total;
        }
    }
    return w;
}

inline double evaluate(const TypicalityMeasure &m, const BranchLayer &layer, std::span<const Record> subset) {
    std::vector<std::uint32_t> codes;
    codes.reserve(subset.size());
    for (const auto &r : subset) {
        if (!layer.contains(r)) {
            fail(ErrorKind::UnknownBranchInSubset, "'" + r.str() + "' is not a branch of the layer");
        }
        codes.push_back(r.code());
    }
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    const auto w = branch_weights(m, layer);
    double total = 0;
    for (auto c : codes) {
        total += w[c];
    }
    return total;
}

inline double evaluate_all(const TypicalityMeasure &m, const BranchLayer &layer) {
    const auto rs = layer.branches();
    return evaluate(m, layer, rs);
}

enum class Form { raw, normalized };

/// Weight of each cell when the cells are taken as the branches of a coarser
/// decomposition.
inline std::vector<double> cell_weights(const TypicalityMeasure &m, const BranchLayer &layer, const Partition &cells,
                                        Form form) {
    std::vector<double> out;
    out.reserve(cells.size());
    if (is_magnitude_measure(m)) {
        for (const auto &cell : cells) {
            out.push_back(magnitude_function(m, cell.combined_amplitude_sq));
        }
        const bool rescale = form == Form::normalized && normalizes(m);
        if (rescale) {
            double total = 0;
            for (double x : out) {
                total += x;
            }
            for (double &x : out) {
                x /= total;
            }
        }
        return out;
    }
    const auto w = form == Form::raw ? raw_branch_weights(m, layer) : branch_weights(m, layer);
    for (const auto &cell : cells) {
        double s = 0;
        for (const auto &r : cell.members) {
            s += w[r.code()];
        }
        out.push_back(s);
    }
    return out;
}

/// Sub-branch additivity violation of a coarse-graining in the raw form,
/// over the hierarchy branches -> cells -> whole layer: the larger of
/// max_cell |f(cell) - sum f(members)| and |f(whole) - sum f(cells)|.
inline double subbranch_violation(const TypicalityMeasure &m, const BranchLayer &layer, const Partition &cells) {
    const auto leaf = raw_branch_weights(m, layer);
    const auto coarse = cell_weights(m, layer, cells, Form::raw);
    double worst = 0;
    double coarse_total = 0;
    double cell_total_sq = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        double members = 0;
        for (const auto &r : cells[i].members) {
            members += leaf[r.code()];
        }
        worst = std::max(worst, std::abs(coarse[i] - members));
        coarse_total += coarse[i];
        cell_total_sq += cells[i].combined_amplitude_sq;
    }
    PartitionCell whole;
    whole.combined_amplitude_sq = cell_total_sq;
    for (const auto &c : cells) {
        whole.members.insert(whole.members.end(), c.members.begin(), c.members.end());
    }
    const double whole_weight = cell_weights(m, layer, Partition{whole}, Form::raw).front();
    worst = std::max(worst, std::abs(whole_weight - coarse_total));
    return worst;
}

struct ConditionResult {
    bool passed = true;
    double max_violation = 0;

    void record(double violation, double tolerance = kTolerance) {
        max_violation = std::max(max_violation, violation);
        passed = max_violation < tolerance;
    }
};

struct AxiomReport {
    std::string measure_kind;
    std::string param;
    /// m(B) = 1.
    ConditionResult condition_1;
    /// m(Q) = 1 - m(complement of Q).
    ConditionResult condition_2;
    /// Finite additivity on disjoint pairs.
    ConditionResult condition_3;
    /// Additivity along the prefix-refinement chain of the branching tree.
    ConditionResult condition_4;
    /// Phase invariance and equal weight for equal magnitudes.
    ConditionResult amplitude_only;
    ConditionResult subbranch_additivity;

    bool all_passed() const noexcept {
        return condition_1.passed && condition_2.passed && condition_3.passed && condition_4.passed &&
               amplitude_only.passed && subbranch_additivity.passed;
    }
};

inline AxiomReport check_axioms(const TypicalityMeasure &m, const BranchLayer &layer,
                                const std::vector<Partition> &partitions, unsigned trials, std::uint64_t seed) {
    if (trials < 1) {
        fail(ErrorKind::InvalidArgument, "trials must be at least 1");
    }
    AxiomReport report;
    report.measure_kind = kind_name(m);
    report.param = param_string(m);

    const auto branches = layer.branches();
    const auto w = branch_weights(m, layer);
    auto measure_of = [&](const std::vector<std::uint32_t> &codes) {
        double s = 0;
        for (auto c : codes) {
            s += w[c];
        }
        return s;
    };
    std::vector<std::uint32_t> all;
    for (const auto &r : branches) {
        all.push_back(r.code());
    }
    const double whole = measure_of(all);
    report.condition_1.record(std::abs(whole - 1.0));

    CounterRng rng(seed, 0x5eed);
    for (unsigned t = 0; t < trials; ++t) {
        std::vector<std::uint32_t> q, qbar, a, b, ab;
        for (auto c : all) {
            (rng() & 1 ? q : qbar).push_back(c);
            switch (rng.below(3)) {
                case 0: a.push_back(c); ab.push_back(c); break;
                case 1: b.push_back(c); ab.push_back(c); break;
                default: break;
            }
        }
        report.condition_2.record(std::abs(measure_of(q) - (1.0 - measure_of(qbar))));
        report.condition_3.record(std::abs(measure_of(ab) - measure_of(a) - measure_of(b)));
    }

    // Each node of the branching tree must weigh what its two children weigh;
    // every level is evaluated as a decomposition in its own right.
    {
        std::vector<double> parent;
        for (unsigned len = 0; len <= layer.depth(); ++len) {
            const auto cells = prefix_partition(layer, len);
            const auto cw = cell_weights(m, layer, cells, Form::normalized);
            std::vector<double> level(std::size_t{1} << len, 0.0);
            for (std::size_t i = 0; i < cells.size(); ++i) {
                level[cells[i].members.front().prefix(len).code()] = cw[i];
            }
            if (len == 0) {
                report.condition_4.record(std::abs(level[0] - whole));
            } else {
                for (std::size_t pcode = 0; pcode < parent.size(); ++pcode) {
                    report.condition_4.record(std::abs(parent[pcode] - level[2 * pcode] - level[2 * pcode + 1]));
                }
            }
            parent = std::move(level);
        }
    }

    {
        std::vector<double> theta(layer.dense().size());
        for (unsigned t = 0; t < trials; ++t) {
            const double global = 2.0 * std::numbers::pi * rng.uniform();
            for (double &x : theta) {
                x = global + 2.0 * std::numbers::pi * rng.uniform();
            }
            const auto rotated = branch_weights(m, layer.rotate_phases(theta));
            for (std::size_t i = 0; i < w.size(); ++i) {
                report.amplitude_only.record(std::abs(rotated[i] - w[i]));
            }
        }
        // Branches of equal magnitude must weigh the same.
        std::vector<std::pair<double, double>> by_mag;
        for (auto c : all) {
            by_mag.emplace_back(std::norm(layer.dense()[c]), w[c]);
        }
        std::sort(by_mag.begin(), by_mag.end());
        for (std::size_t i = 0; i < by_mag.size();) {
            std::size_t j = i;
            double lo = by_mag[i].second, hi = by_mag[i].second;
            while (j < by_mag.size() && by_mag[j].first - by_mag[i].first <= kPruneThreshold) {
                lo = std::min(lo, by_mag[j].second);
                hi = std::max(hi, by_mag[j].second);
                ++j;
            }
            report.amplitude_only.record(hi - lo);
            i = j;
        }
    }

    for (const auto &p : partitions) {
        report.subbranch_additivity.record(subbranch_violation(m, layer, p));
    }
    return report;
}

struct UniquenessRow {
    double p;
    double max_violation;
};

/// Raw sub-branch additivity of f = |a|^p for each p, maximized over the
/// supplied coarse-grainings.
inline std::vector<UniquenessRow> uniqueness_scan(std::span<const double> p_grid, const BranchLayer &layer,
                                                  const std::vector<Partition> &partitions) {
    if (p_grid.empty()) {
        fail(ErrorKind::InvalidArgument, "p grid is empty");
    }
    if (partitions.empty()) {
        fail(ErrorKind::InvalidArgument, "uniqueness scan needs at least one coarse-graining");
    }
    std::vector<UniquenessRow> rows;
    for (double p : p_grid) {
        if (!std::isfinite(p)) {
            fail(ErrorKind::InvalidArgument, "non-finite exponent in p grid");
        }
        const TypicalityMeasure m = AmplitudePower{p, false};
        double worst = 0;
        for (const auto &part : partitions) {
            worst = std::max(worst, subbranch_violation(m, layer, part));
        }
        rows.push_back({p, worst});
    }
    return rows;
}

/// Graham world counts for k measurements with an exact N-way split per step.
class GrahamLayer {
   public:
    GrahamLayer(Amplitude alpha, Amplitude beta, std::uint64_t resolution, unsigned depth)
        : resolution_(resolution), depth_(depth) {
        const StepAmplitudes step{alpha, beta};
        check_step(step);
        split_ = graham_split(step, resolution);
    }

    std::uint64_t resolution() const noexcept {
        return resolution_;
    }
    unsigned depth() const noexcept {
        return depth_;
    }
    std::uint64_t up_worlds() const noexcept {
        return split_.up;
    }
    std::uint64_t down_worlds() const noexcept {
        return split_.down;
    }

    exact::BigInt total_worlds() const {
        return exact::power(exact::BigInt(resolution_), depth_);
    }

    exact::BigInt world_count(const Record &r) const {
        if (r.depth() != depth_) {
            fail(ErrorKind::UnknownBranch, "record depth differs from layer depth");
        }
        return exact::power(exact::BigInt(split_.up), r.up_count()) *
               exact::power(exact::BigInt(split_.down), r.down_count());
    }

    exact::Rational count_fraction(const Record &r) const {
        return exact::Rational(world_count(r), total_worlds());
    }

    /// Records with at least one world, in code order.
    std::vector<std::pair<Record, exact::BigInt>> world_counts() const {
        if (depth_ > kMaxLayerDepth) {
            fail(ErrorKind::DepthTooLarge, "world listing limited to depth 24");
        }
        std::vector<std::pair<Record, exact::BigInt>> out;
        for (std::uint32_t c = 0; c < (std::uint32_t{1} << depth_); ++c) {
            const Record r(c, depth_);
            auto n = world_count(r);
            if (n != 0) {
                out.emplace_back(r, std::move(n));
            }
        }
        return out;
    }

   private:
    std::uint64_t resolution_;
    unsigned depth_;
    GrahamSplit split_{};
};

inline GrahamLayer build_graham_layer(Amplitude alpha, Amplitude beta, std::uint64_t resolution, unsigned k) {
    return GrahamLayer(alpha, beta, resolution, k);
}

/// Everett's individuation by relative record: one branch per sequence.
struct EverettCounting {
    unsigned depth;
};

inline void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        fail(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
    }
}

/// Fraction of all 2^k record sequences whose up-frequency is within epsilon
/// of target. Exact.
inline exact::Rational count_fraction_near_exact(const EverettCounting &counting, double epsilon, double target) {
    check_epsilon(epsilon);
    const auto w = exact::frequency_window(target, counting.depth, epsilon);
    exact::BigInt hits = 0;
    for (long j = w.lo; j <= w.hi; ++j) {
        hits += exact::binomial(counting.depth, static_cast<unsigned long>(j));
    }
    return exact::Rational(hits, exact::power(exact::BigInt(2), counting.depth));
}

/// Fraction of Graham worlds whose record has up-frequency within epsilon of
/// target: sum over the window of C(k,j) n_up^j n_down^(k-j) / N^k. Exact.
inline exact::Rational count_fraction_near_exact(const GrahamLayer &g, double epsilon, double target) {
    check_epsilon(epsilon);
    const auto w = exact::frequency_window(target, g.depth(), epsilon);
    exact::BigInt hits = 0;
    const exact::BigInt up(g.up_worlds());
    const exact::BigInt down(g.down_worlds());
    for (long j = w.lo; j <= w.hi; ++j) {
        const auto uj = static_cast<unsigned long>(j);
        hits += exact::binomial(g.depth(), uj) * exact::power(up, uj) * exact::power(down, g.depth() - uj);
    }
    return exact::Rational(hits, g.total_worlds());
}

inline double count_fraction_near(const EverettCounting &counting, double epsilon, double target) {
    return exact::to_double(count_fraction_near_exact(counting, epsilon, target));
}

inline double count_fraction_near(const GrahamLayer &g, double epsilon, double target) {
    return exact::to_double(count_fraction_near_exact(g, epsilon, target));
}

/// Counts the surviving branches of a materialized layer.
inline double count_fraction_near(const BranchLayer &layer, double epsilon, double target) {
    check_epsilon(epsilon);
    if (layer.depth() == 0) {
        fail(ErrorKind::EmptySequence, "depth-0 layer has no frequencies");
    }
    const auto w = exact::frequency_window(target, layer.depth(), epsilon);
    std::size_t hits = 0;
    for (const auto &r : layer.branches()) {
        hits += w.contains(r.up_count()) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(layer.size());
}

struct FiniteCardinality {
    std::uint64_t n;
};
/// A countably infinite branch set, probed with a candidate uniform value u
/// and a truncation length for the partial sums.
struct CountablyInfinite {
    double probe_value = 1e-6;
    std::uint64_t truncation = 10'000'000;
};
using Cardinality = std::variant<FiniteCardinality, CountablyInfinite>;

struct Feasible {
    double value;
};
struct Infeasible {
    double probe_value;
    std::uint64_t truncation;
    /// u * truncation for the probe value: already exceeds 1 when u > 0 and
    /// the truncation is long enough.
    double positive_partial_sum;
    /// Sum over any finite truncation with u = 0; countable additivity forces
    /// m(B) = 0.
    double zero_partial_sum;
    std::string positive_case;
    std::string zero_case;
};
using PriorFeasibility = std::variant<Feasible, Infeasible>;

inline PriorFeasibility uniform_prior_feasibility(const Cardinality &cardinality) {
    if (const auto *f = std::get_if<FiniteCardinality>(&cardinality)) {
        if (f->n == 0) {
            fail(ErrorKind::InvalidArgument, "an empty branch set has no prior");
        }
        return Feasible{1.0 / static_cast<double>(f->n)};
    }
    const auto &c = std::get<CountablyInfinite>(cardinality);
    if (!(c.probe_value > 0.0) || !std::isfinite(c.probe_value) || c.truncation == 0) {
        fail(ErrorKind::InvalidArgument, "probe value must be positive and truncation non-zero");
    }
    Infeasible out{c.probe_value, c.truncation, 0.0, 0.0, "", ""};
    // Exact partial sum of a constant sequence: n copies of u.
    out.positive_partial_sum = static_cast<double>(static_cast<long double>(c.probe_value) *
                                                   static_cast<long double>(c.truncation));
    out.zero_partial_sum = 0.0;
    const std::uint64_t needed = static_cast<std::uint64_t>(std::floor(1.0 / c.probe_value)) + 1;
    out.positive_case = "u = " + detail::fmt_g(c.probe_value) + " > 0: the first " + std::to_string(needed) +
                        " branches already weigh more than 1, so m(B) = 1 fails (partial sum over " +
                        std::to_string(c.truncation) + " branches = " + detail::fmt_g(out.positive_partial_sum) + ")";
    out.zero_case =
        "u = 0: every partial sum is 0, so countable additivity gives m(B) = 0, contradicting m(B) = 1";
    return out;
}

}  // namespace branchlab::measures
