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
 * Determinate-record branch layers for k repeated spin measurements on fresh
 * systems, and coarse-grainings of a layer into partition cells.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/hilbert.hpp"
#include "branchlab/record.hpp"

namespace branchlab {

/// Largest depth for which a layer is materialized (2^24 branches).
inline constexpr unsigned kMaxLayerDepth = 24;

/// Spin amplitudes of the system measured at one step.
struct StepAmplitudes {
    Amplitude alpha;
    Amplitude beta;

    friend bool operator==(const StepAmplitudes &, const StepAmplitudes &) = default;
};

inline void check_step(const StepAmplitudes &s) {
    if (!is_finite(s.alpha) || !is_finite(s.beta)) {
        fail(ErrorKind::InvalidArgument, "non-finite step amplitude");
    }
    const double n = std::norm(s.alpha) + std::norm(s.beta);
    if (std::abs(n - 1.0) > kTolerance) {
        fail(ErrorKind::NotNormalized, "|alpha|^2 + |beta|^2 = " + std::to_string(n));
    }
}

/// The set of branches after k correlating interactions. Amplitudes are held
/// densely, indexed by Record::code(); pruned branches hold exactly zero and
/// are not members of the layer.
class BranchLayer {
   public:
    /// Layer with arbitrary amplitudes over all 2^depth records. `steps` is
    /// informational (empty when the layer is not a product of step states).
    static BranchLayer from_amplitudes(unsigned depth, std::vector<Amplitude> amplitudes,
                                       std::vector<StepAmplitudes> steps = {},
                                       std::optional<StepAmplitudes> nominal = std::nullopt) {
        if (depth > kMaxLayerDepth) {
            fail(ErrorKind::DepthTooLarge, "depth " + std::to_string(depth) + " exceeds " +
                                               std::to_string(kMaxLayerDepth));
        }
        if (amplitudes.size() != (std::size_t{1} << depth)) {
            fail(ErrorKind::ArityMismatch, "expected 2^depth amplitudes");
        }
        if (!steps.empty() && steps.size() != depth) {
            fail(ErrorKind::ArityMismatch, "step list length differs from depth");
        }
        double total = 0;
        for (auto &a : amplitudes) {
            if (!is_finite(a)) {
                fail(ErrorKind::InvalidArgument, "non-finite branch amplitude");
            }
            if (std::abs(a) < kPruneThreshold) {
                a = Amplitude{};
            }
            total += std::norm(a);
        }
        if (std::abs(total - 1.0) > kTolerance) {
            fail(ErrorKind::NotNormalized, "layer squared norm is " + std::to_string(total));
        }
        BranchLayer layer;
        layer.depth_ = depth;
        layer.amplitudes_ = std::move(amplitudes);
        layer.steps_ = std::move(steps);
        layer.nominal_ = nominal;
        if (!layer.nominal_ && layer.iid()) {
            layer.nominal_ = layer.steps_.front();
        }
        for (const auto &a : layer.amplitudes_) {
            layer.size_ += a != Amplitude{} ? 1 : 0;
        }
        return layer;
    }

    unsigned depth() const noexcept {
        return depth_;
    }

    /// Per-step amplitudes, one entry per step; empty for non-product layers.
    const std::vector<StepAmplitudes> &steps() const noexcept {
        return steps_;
    }

    /// The (alpha, beta) of an iid layer, also for depth 0.
    std::optional<StepAmplitudes> nominal_step() const noexcept {
        return nominal_;
    }

    /// True when every step uses the same (alpha, beta).
    bool iid() const noexcept {
        for (const auto &s : steps_) {
            if (!(s == steps_.front())) {
                return false;
            }
        }
        return !steps_.empty();
    }

    /// Number of surviving branches.
    std::size_t size() const noexcept {
        return size_;
    }

    bool contains(const Record &r) const noexcept {
        return r.depth() == depth_ && amplitudes_[r.code()] != Amplitude{};
    }

    Amplitude amplitude(const Record &r) const {
        if (!contains(r)) {
            fail(ErrorKind::UnknownBranch, "no branch '" + r.str() + "' in depth-" + std::to_string(depth_) + " layer");
        }
        return amplitudes_[r.code()];
    }

    /// All 2^depth amplitudes in record-code order, pruned entries zero.
    std::span<const Amplitude> dense() const noexcept {
        return amplitudes_;
    }

    std::vector<Record> branches() const {
        std::vector<Record> out;
        out.reserve(size_);
        for (std::uint32_t c = 0; c < amplitudes_.size(); ++c) {
            if (amplitudes_[c] != Amplitude{}) {
                out.emplace_back(c, depth_);
            }
        }
        return out;
    }

    /// a_i -> exp(i*theta_i) a_i with one phase per record code.
    BranchLayer rotate_phases(std::span<const double> theta) const {
        if (theta.size() != amplitudes_.size()) {
            fail(ErrorKind::ArityMismatch, "need one phase per record");
        }
        std::vector<Amplitude> rotated(amplitudes_.size());
        for (std::size_t i = 0; i < rotated.size(); ++i) {
            rotated[i] = amplitudes_[i] * std::polar(1.0, theta[i]);
        }
        // Step magnitudes are unchanged, so the step list stays valid for
        // record measures that read |alpha_j|^2.
        return from_amplitudes(depth_, std::move(rotated), steps_, nominal_);
    }

   private:
    BranchLayer() = default;

    unsigned depth_ = 0;
    std::size_t size_ = 0;
    std::vector<Amplitude> amplitudes_;
    std::vector<StepAmplitudes> steps_;
    std::optional<StepAmplitudes> nominal_;
};

/// Layer for step-dependent amplitudes: branch r gets the product over j of
/// alpha_j (r_j = ↑) or beta_j (r_j = ↓).
inline BranchLayer build_layer(std::span<const StepAmplitudes> steps) {
    if (steps.size() > kMaxLayerDepth) {
        fail(ErrorKind::DepthTooLarge, "depth " + std::to_string(steps.size()) + " exceeds " +
                                           std::to_string(kMaxLayerDepth));
    }
    std::vector<Amplitude> amps{Amplitude{1.0}};
    for (const auto &s : steps) {
        check_step(s);
        std::vector<Amplitude> next(amps.size() * 2);
        for (std::size_t i = 0; i < amps.size(); ++i) {
            next[2 * i] = amps[i] * s.alpha;
            next[2 * i + 1] = amps[i] * s.beta;
        }
        amps = std::move(next);
    }
    return BranchLayer::from_amplitudes(static_cast<unsigned>(steps.size()), std::move(amps),
                                        std::vector<StepAmplitudes>(steps.begin(), steps.end()));
}

inline BranchLayer build_layer(Amplitude alpha, Amplitude beta, unsigned k) {
    if (k > kMaxLayerDepth) {
        fail(ErrorKind::DepthTooLarge, "depth " + std::to_string(k) + " exceeds " + std::to_string(kMaxLayerDepth));
    }
    const StepAmplitudes step{alpha, beta};
    check_step(step);
    std::vector<StepAmplitudes> steps(k, step);
    BranchLayer layer = build_layer(steps);
    if (k == 0) {
        return BranchLayer::from_amplitudes(0, {Amplitude{1.0}}, {}, step);
    }
    return layer;
}

/// Real amplitudes sqrt(alpha_sq), sqrt(1 - alpha_sq).
inline StepAmplitudes real_step(double alpha_sq) {
    if (!(alpha_sq >= 0.0 && alpha_sq <= 1.0)) {
        fail(ErrorKind::InvalidArgument, "alpha^2 must lie in [0, 1]");
    }
    return {Amplitude{std::sqrt(alpha_sq)}, Amplitude{std::sqrt(1.0 - alpha_sq)}};
}

/// The record the measuring device holds relative to a branch.
inline std::vector<Outcome> relative_record(const BranchLayer &layer, const Record &branch) {
    if (!layer.contains(branch)) {
        fail(ErrorKind::UnknownBranch, "no branch '" + branch.str() + "'");
    }
    return branch.outcomes();
}

inline double frequency_of_up(const Record &r) {
    if (r.depth() == 0) {
        fail(ErrorKind::EmptySequence, "frequency of an empty record");
    }
    return static_cast<double>(r.up_count()) / r.depth();
}

struct PartitionCell {
    std::vector<Record> members;
    double combined_amplitude_sq = 0;
};

using Partition = std::vector<PartitionCell>;

/// Groups the layer's branches into cells. Every branch must appear in
/// exactly one group and no group may be empty or name a non-branch.
inline Partition coarse_grain(const BranchLayer &layer, const std::vector<std::vector<Record>> &grouping) {
    std::vector<char> seen(layer.dense().size(), 0);
    std::size_t covered = 0;
    Partition cells;
    cells.reserve(grouping.size());
    for (const auto &group : grouping) {
        if (group.empty()) {
            fail(ErrorKind::NotAPartition, "empty cell");
        }
        PartitionCell cell;
        cell.members = group;
        for (const auto &r : group) {
            if (!layer.contains(r)) {
                fail(ErrorKind::NotAPartition, "'" + r.str() + "' is not a branch of the layer");
            }
            if (seen[r.code()]) {
                fail(ErrorKind::NotAPartition, "'" + r.str() + "' appears in two cells");
            }
            seen[r.code()] = 1;
            ++covered;
            cell.combined_amplitude_sq += std::norm(layer.amplitude(r));
        }
        cells.push_back(std::move(cell));
    }
    if (covered != layer.size()) {
        fail(ErrorKind::NotAPartition, std::to_string(layer.size() - covered) + " branches not covered");
    }
    return cells;
}

inline Partition singleton_partition(const BranchLayer &layer) {
    std::vector<std::vector<Record>> g;
    for (const auto &r : layer.branches()) {
        g.push_back({r});
    }
    return coarse_grain(layer, g);
}

inline Partition whole_partition(const BranchLayer &layer) {
    return coarse_grain(layer, {layer.branches()});
}

/// Cells are the classes of equal up-count; empty classes are omitted.
inline Partition by_frequency_partition(const BranchLayer &layer) {
    std::vector<std::vector<Record>> g(layer.depth() + 1);
    for (const auto &r : layer.branches()) {
        g[r.up_count()].push_back(r);
    }
    std::erase_if(g, [](const auto &v) { return v.empty(); });
    return coarse_grain(layer, g);
}

/// Cells are the record prefixes of the given length (one cell per node of the
/// branching tree at that level).
inline Partition prefix_partition(const BranchLayer &layer, unsigned length) {
    if (length > layer.depth()) {
        fail(ErrorKind::InvalidArgument, "prefix length exceeds depth");
    }
    std::map<std::uint32_t, std::vector<Record>> g;
    for (const auto &r : layer.branches()) {
        g[r.prefix(length).code()].push_back(r);
    }
    std::vector<std::vector<Record>> groups;
    for (auto &[code, members] : g) {
        groups.push_back(std::move(members));
    }
    return coarse_grain(layer, groups);
}

}  // namespace branchlab
