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
 * Stochastic rules that pick one branch of a k-step layer, and the exact
 * laws they induce on record statistics.
 *
 *  - collapse-per-step: each measurement collapses, up with probability |alpha|^2.
 *  - collapse-once: one collapse after all k interactions, leaf i with
 *    probability |a_i|^2.
 *  - self-location-mind: a single mind walks the branching tree, moving to a
 *    child with probability m(child) / m(parent) under the norm-squared measure.
 *  - indifference: uniform over the cells of a stipulated partition, then
 *    uniform over the members of the chosen cell.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "branchlab/branching.hpp"
#include "branchlab/error.hpp"
#include "branchlab/measures.hpp"
#include "branchlab/record.hpp"
#include "branchlab/rng.hpp"

namespace branchlab::selection {

struct CollapsePerStep {};
struct CollapseOnce {};
struct SelfLocationMind {};

/// One cell per relative-record sequence.
struct SingletonCells {};
/// One cell per up-count.
struct FrequencyCells {};
/// Cells are Graham worlds; each step splits every world N ways.
struct GrahamWorlds {
    std::uint64_t resolution = 1;
};
struct ExplicitCells {
    std::vector<std::vector<Record>> cells;
};
using PartitionSpec = std::variant<SingletonCells, FrequencyCells, GrahamWorlds, ExplicitCells>;

struct Indifference {
    PartitionSpec partition;
};

using SelectionRule = std::variant<CollapsePerStep, CollapseOnce, SelfLocationMind, Indifference>;

inline std::string partition_name(const PartitionSpec &p) {
    struct V {
        std::string operator()(const SingletonCells &) const { return "singleton"; }
        std::string operator()(const FrequencyCells &) const { return "by-frequency"; }
        std::string operator()(const GrahamWorlds &g) const { return "graham:" + std::to_string(g.resolution); }
        std::string operator()(const ExplicitCells &) const { return "explicit"; }
    };
    return std::visit(V{}, p);
}

inline std::string rule_name(const SelectionRule &rule) {
    struct V {
        std::string operator()(const CollapsePerStep &) const { return "collapse-per-step"; }
        std::string operator()(const CollapseOnce &) const { return "collapse-once"; }
        std::string operator()(const SelfLocationMind &) const { return "self-location-mind"; }
        std::string operator()(const Indifference &i) const { return "indifference(" + partition_name(i.partition) + ")"; }
    };
    return std::visit(V{}, rule);
}

/// A probability vector over up-counts 0..k or over record codes 0..2^k-1.
using Distribution = std::vector<double>;

enum class Marginal { up_count, sequence };

/// Full-sequence comparisons are offered up to this depth.
inline constexpr unsigned kMaxSequenceDepth = 16;

struct TrajectorySample {
    Record records;
    SelectionRule rule;
    std::uint64_t seed;
};

struct Histogram {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    Distribution normalized() const {
        Distribution d(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) {
            d[i] = total ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
        }
        return d;
    }
};

struct SampleResult {
    Histogram up_counts;
    /// Present when sequence histograms were requested (k <= 16).
    std::optional<Histogram> sequences;
};

inline double distribution_distance(const Distribution &a, const Distribution &b) {
    if (a.size() != b.size()) {
        fail(ErrorKind::DomainMismatch, "distributions over " + std::to_string(a.size()) + " and " +
                                            std::to_string(b.size()) + " outcomes");
    }
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(a[i] - b[i]);
    }
    return 0.5 * s;
}

namespace detail {

inline bool needs_layer(const SelectionRule &rule) {
    if (std::holds_alternative<CollapseOnce>(rule) || std::holds_alternative<SelfLocationMind>(rule)) {
        return true;
    }
    if (const auto *ind = std::get_if<Indifference>(&rule)) {
        return !std::holds_alternative<GrahamWorlds>(ind->partition);
    }
    return false;
}

/// Norm-squared mass of every node of the branching tree, per level:
/// tree[l][prefix] = sum of |a|^2 over the leaves below that prefix.
inline std::vector<std::vector<double>> subtree_masses(const BranchLayer &layer) {
    std::vector<std::vector<double>> tree(layer.depth() + 1);
    auto &leaves = tree[layer.depth()];
    leaves.resize(layer.dense().size());
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        leaves[i] = std::norm(layer.dense()[i]);
    }
    for (unsigned l = layer.depth(); l-- > 0;) {
        tree[l].resize(std::size_t{1} << l);
        for (std::size_t p = 0; p < tree[l].size(); ++p) {
            tree[l][p] = tree[l + 1][2 * p] + tree[l + 1][2 * p + 1];
        }
    }
    return tree;
}

inline Partition resolve_cells(const PartitionSpec &spec, const BranchLayer &layer) {
    if (std::holds_alternative<SingletonCells>(spec)) {
        return singleton_partition(layer);
    }
    if (std::holds_alternative<FrequencyCells>(spec)) {
        return by_frequency_partition(layer);
    }
    const auto &explicit_cells = std::get<ExplicitCells>(spec);
    for (const auto &c : explicit_cells.cells) {
        if (c.empty()) {
            fail(ErrorKind::EmptyPartitionCell, "indifference partition has an empty cell");
        }
    }
    return coarse_grain(layer, explicit_cells.cells);
}

inline void check_depth(unsigned k, bool layer_based) {
    const unsigned limit = layer_based ? kMaxLayerDepth : Record::kMaxBits;
    if (k > limit) {
        fail(ErrorKind::DepthTooLarge, "depth " + std::to_string(k) + " exceeds " + std::to_string(limit));
    }
}

}  // namespace detail

/// Draws trajectories for one rule. Sample i uses CounterRng(seed, i), so
/// samples are independent of evaluation order.
class Sampler {
   public:
    Sampler(SelectionRule rule, StepAmplitudes step, unsigned k) : rule_(std::move(rule)), step_(step), k_(k) {
        check_step(step_);
        const bool layered = detail::needs_layer(rule_);
        detail::check_depth(k_, layered);
        up_probability_ = std::norm(step_.alpha);
        if (layered) {
            layer_ = build_layer(step_.alpha, step_.beta, k_);
        }
        if (std::holds_alternative<CollapseOnce>(rule_)) {
            cdf_.reserve(layer_->dense().size());
            double acc = 0;
            for (const auto &a : layer_->dense()) {
                acc += std::norm(a);
                cdf_.push_back(acc);
            }
        } else if (std::holds_alternative<SelfLocationMind>(rule_)) {
            tree_ = detail::subtree_masses(*layer_);
        } else if (const auto *ind = std::get_if<Indifference>(&rule_)) {
            if (const auto *g = std::get_if<GrahamWorlds>(&ind->partition)) {
                split_ = measures::graham_split(step_, g->resolution);
                resolution_ = g->resolution;
            } else {
                cells_ = detail::resolve_cells(ind->partition, *layer_);
            }
        }
    }

    Record draw(std::uint64_t seed, std::uint64_t index) const {
        CounterRng rng(seed, index);
        struct V {
            const Sampler &s;
            CounterRng &rng;
            Record operator()(const CollapsePerStep &) const {
                std::uint32_t code = 0;
                for (unsigned j = 0; j < s.k_; ++j) {
                    code = (code << 1) | (rng.uniform() < s.up_probability_ ? 0u : 1u);
                }
                return Record(code, s.k_);
            }
            Record operator()(const CollapseOnce &) const {
                const double u = rng.uniform() * s.cdf_.back();
                auto it = std::upper_bound(s.cdf_.begin(), s.cdf_.end(), u);
                auto idx = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - s.cdf_.begin(),
                                                                               static_cast<std::ptrdiff_t>(s.cdf_.size()) - 1));
                // Never land on a pruned leaf through rounding at the top end.
                while (s.layer_->dense()[idx] == Amplitude{} && idx > 0) {
                    --idx;
                }
                return Record(idx, s.k_);
            }
            Record operator()(const SelfLocationMind &) const {
                std::uint32_t node = 0;
                for (unsigned l = 0; l < s.k_; ++l) {
                    const double parent = s.tree_[l][node];
                    const double up_child = s.tree_[l + 1][2 * node];
                    node = 2 * node + (rng.uniform() * parent < up_child ? 0u : 1u);
                }
                return Record(node, s.k_);
            }
            Record operator()(const Indifference &) const {
                if (s.resolution_) {
                    std::uint32_t code = 0;
                    for (unsigned j = 0; j < s.k_; ++j) {
                        code = (code << 1) | (rng.below(s.resolution_) < s.split_.up ? 0u : 1u);
                    }
                    return Record(code, s.k_);
                }
                const auto &cell = s.cells_[rng.below(s.cells_.size())];
                return cell.members[rng.below(cell.members.size())];
            }
        };
        return std::visit(V{*this, rng}, rule_);
    }

    TrajectorySample sample_one(std::uint64_t seed) const {
        return {draw(seed, 0), rule_, seed};
    }

    const SelectionRule &rule() const noexcept {
        return rule_;
    }

   private:
    SelectionRule rule_;
    StepAmplitudes step_;
    unsigned k_;
    double up_probability_ = 0;
    std::optional<BranchLayer> layer_;
    std::vector<double> cdf_;
    std::vector<std::vector<double>> tree_;
    Partition cells_;
    measures::GrahamSplit split_{};
    std::uint64_t resolution_ = 0;
};

inline SampleResult sample(const SelectionRule &rule, Amplitude alpha, Amplitude beta, unsigned k,
                           std::uint64_t n_samples, std::uint64_t seed, bool with_sequences = false) {
    if (n_samples < 1) {
        fail(ErrorKind::InvalidArgument, "n_samples must be at least 1");
    }
    if (with_sequences && k > kMaxSequenceDepth) {
        fail(ErrorKind::DepthTooLarge, "sequence histograms limited to depth 16");
    }
    const Sampler sampler(rule, {alpha, beta}, k);
    SampleResult out;
    out.up_counts.counts.assign(k + 1, 0);
    if (with_sequences) {
        out.sequences = Histogram{std::vector<std::uint64_t>(std::size_t{1} << k, 0), 0};
    }
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        const Record r = sampler.draw(seed, i);
        ++out.up_counts.counts[r.up_count()];
        if (out.sequences) {
            ++out.sequences->counts[r.code()];
        }
    }
    out.up_counts.total = n_samples;
    if (out.sequences) {
        out.sequences->total = n_samples;
    }
    return out;
}

namespace detail {

inline Distribution to_marginal(const Distribution &by_code, unsigned k, Marginal marginal) {
    if (marginal == Marginal::sequence) {
        return by_code;
    }
    Distribution d(k + 1, 0.0);
    for (std::uint32_t c = 0; c < by_code.size(); ++c) {
        d[Record(c, k).up_count()] += by_code[c];
    }
    return d;
}

}  // namespace detail

/// The law a rule induces, computed without sampling. Each rule takes its own
/// route: convolution of per-step Bernoulli laws, summation of leaf weights, a
/// product of conditional probabilities down the tree, or the partition's
/// uniform law.
inline Distribution exact_rule_distribution(const SelectionRule &rule, Amplitude alpha, Amplitude beta, unsigned k,
                                            Marginal marginal = Marginal::up_count) {
    const StepAmplitudes step{alpha, beta};
    check_step(step);
    if (marginal == Marginal::sequence && k > kMaxSequenceDepth) {
        fail(ErrorKind::DepthTooLarge, "sequence distributions limited to depth 16");
    }
    const double p = std::norm(alpha);
    const double q = std::norm(beta);

    if (std::holds_alternative<CollapsePerStep>(rule)) {
        detail::check_depth(k, marginal == Marginal::sequence);
        if (marginal == Marginal::sequence) {
            Distribution d(std::size_t{1} << k);
            for (std::uint32_t c = 0; c < d.size(); ++c) {
                const Record r(c, k);
                d[c] = std::pow(p, r.up_count()) * std::pow(q, r.down_count());
            }
            return d;
        }
        // k-fold convolution of the one-step law (q, p) on up-counts.
        Distribution d{1.0};
        for (unsigned j = 0; j < k; ++j) {
            Distribution next(d.size() + 1, 0.0);
            for (std::size_t u = 0; u < d.size(); ++u) {
                next[u] += d[u] * q;
                next[u + 1] += d[u] * p;
            }
            d = std::move(next);
        }
        return d;
    }

    if (const auto *ind = std::get_if<Indifference>(&rule)) {
        if (const auto *g = std::get_if<GrahamWorlds>(&ind->partition)) {
            detail::check_depth(k, true);
            const auto split = measures::graham_split(step, g->resolution);
            const double n = static_cast<double>(g->resolution);
            Distribution by_code(std::size_t{1} << k);
            for (std::uint32_t c = 0; c < by_code.size(); ++c) {
                const Record r(c, k);
                by_code[c] = std::pow(split.up / n, r.up_count()) * std::pow(split.down / n, r.down_count());
            }
            return detail::to_marginal(by_code, k, marginal);
        }
    }

    detail::check_depth(k, true);
    const BranchLayer layer = build_layer(alpha, beta, k);
    Distribution by_code(layer.dense().size(), 0.0);

    if (std::holds_alternative<CollapseOnce>(rule)) {
        for (std::size_t c = 0; c < by_code.size(); ++c) {
            by_code[c] = std::norm(layer.dense()[c]);
        }
    } else if (std::holds_alternative<SelfLocationMind>(rule)) {
        const auto tree = detail::subtree_masses(layer);
        for (std::uint32_t c = 0; c < by_code.size(); ++c) {
            double prob = 1.0;
            for (unsigned l = 0; l < k && prob > 0.0; ++l) {
                const std::uint32_t parent = c >> (k - l);
                const std::uint32_t child = c >> (k - l - 1);
                prob *= tree[l + 1][child] / tree[l][parent];
            }
            by_code[c] = prob;
        }
    } else {
        const auto &ind = std::get<Indifference>(rule);
        const auto cells = detail::resolve_cells(ind.partition, layer);
        for (const auto &cell : cells) {
            const double w = 1.0 / (static_cast<double>(cells.size()) * static_cast<double>(cell.members.size()));
            for (const auto &r : cell.members) {
                by_code[r.code()] += w;
            }
        }
    }
    return detail::to_marginal(by_code, k, marginal);
}

struct ComparisonReport {
    std::string rule_a;
    std::string rule_b;
    double alpha_sq;
    unsigned k;
    double tv_exact;
    double tv_empirical;
    std::uint64_t n_samples;
    std::uint64_t seed;
};

/// Rule b is sampled with seed mix64(seed) so the two empirical laws use
/// unrelated streams.
inline ComparisonReport compare(const SelectionRule &a, const SelectionRule &b, Amplitude alpha, Amplitude beta,
                                unsigned k, std::uint64_t n_samples, std::uint64_t seed) {
    const auto exact_a = exact_rule_distribution(a, alpha, beta, k);
    const auto exact_b = exact_rule_distribution(b, alpha, beta, k);
    const auto emp_a = sample(a, alpha, beta, k, n_samples, seed).up_counts.normalized();
    const auto emp_b = sample(b, alpha, beta, k, n_samples, mix64(seed)).up_counts.normalized();
    return {rule_name(a),
            rule_name(b),
            std::norm(alpha),
            k,
            distribution_distance(exact_a, exact_b),
            distribution_distance(emp_a, emp_b),
            n_samples,
            seed};
}

}  // namespace branchlab::selection
