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
 * Exact finite-dimensional state vectors over labeled tensor-product kets,
 * perfect correlating interactions, and the stochastic collapse rule.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

using Amplitude = std::complex<double>;

/// Comparison tolerance for norms, orthogonality and normalization.
inline constexpr double kTolerance = 1e-9;
/// Terms whose magnitude falls below this are dropped.
inline constexpr double kPruneThreshold = 1e-12;

inline bool is_finite(Amplitude a) noexcept {
    return std::isfinite(a.real()) && std::isfinite(a.imag());
}

}  // namespace branchlab

namespace branchlab::hilbert {

/// Basis-ket values. Spin values for object systems; "ready" and the quoted
/// record values for registers of devices and observers.
namespace basis {
inline const std::string up = "↑";
inline const std::string down = "↓";
inline const std::string ready = "ready";
inline const std::string record_up = "\"↑\"";
inline const std::string record_down = "\"↓\"";
}  // namespace basis

enum class SystemKind { object, device, observer };

struct SystemLabel {
    std::string name;
    SystemKind kind = SystemKind::object;

    friend bool operator==(const SystemLabel &, const SystemLabel &) = default;
};

using BasisKet = std::vector<std::string>;

class StateVector {
   public:
    /// Validates arity, finiteness, label uniqueness and unit norm.
    static StateVector from_terms(std::vector<SystemLabel> labels, std::map<BasisKet, Amplitude> terms) {
        std::set<std::string> names;
        for (const auto &l : labels) {
            if (!names.insert(l.name).second) {
                fail(ErrorKind::InvalidArgument, "duplicate system label '" + l.name + "'");
            }
        }
        for (const auto &[ket, amp] : terms) {
            if (ket.size() != labels.size()) {
                fail(ErrorKind::ArityMismatch, "ket arity " + std::to_string(ket.size()) + " does not match " +
                                                   std::to_string(labels.size()) + " labels");
            }
            if (!is_finite(amp)) {
                fail(ErrorKind::InvalidArgument, "non-finite amplitude");
            }
        }
        StateVector s(std::move(labels), std::move(terms));
        if (std::abs(s.norm_squared() - 1.0) > kTolerance) {
            fail(ErrorKind::NotNormalized, "squared norm is " + std::to_string(s.norm_squared()));
        }
        return s;
    }

    const std::vector<SystemLabel> &labels() const noexcept {
        return labels_;
    }
    const std::map<BasisKet, Amplitude> &terms() const noexcept {
        return terms_;
    }
    std::size_t arity() const noexcept {
        return labels_.size();
    }

    /// Position of the named subsystem in every ket.
    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i].name == name) {
                return i;
            }
        }
        fail(ErrorKind::UnknownLabel, "no subsystem named '" + std::string(name) + "'");
    }

    bool has_label(std::string_view name) const noexcept {
        for (const auto &l : labels_) {
            if (l.name == name) {
                return true;
            }
        }
        return false;
    }

    Amplitude amplitude(const BasisKet &ket) const {
        auto it = terms_.find(ket);
        return it == terms_.end() ? Amplitude{} : it->second;
    }

    double norm_squared() const noexcept {
        double total = 0;
        for (const auto &[ket, amp] : terms_) {
            total += std::norm(amp);
        }
        return total;
    }

   private:
    StateVector(std::vector<SystemLabel> labels, std::map<BasisKet, Amplitude> terms)
        : labels_(std::move(labels)) {
        for (auto &[ket, amp] : terms) {
            if (std::abs(amp) >= kPruneThreshold) {
                terms_.emplace(ket, amp);
            }
        }
    }

    friend StateVector unchecked_state(std::vector<SystemLabel>, std::map<BasisKet, Amplitude>);

    std::vector<SystemLabel> labels_;
    std::map<BasisKet, Amplitude> terms_;
};

/// Internal constructor for results of norm-preserving maps.
inline StateVector unchecked_state(std::vector<SystemLabel> labels, std::map<BasisKet, Amplitude> terms) {
    return StateVector(std::move(labels), std::move(terms));
}

inline StateVector make_spin_state(Amplitude alpha, Amplitude beta, const SystemLabel &label) {
    if (!is_finite(alpha) || !is_finite(beta)) {
        fail(ErrorKind::InvalidArgument, "non-finite spin amplitude");
    }
    const double n = std::norm(alpha) + std::norm(beta);
    if (std::abs(n - 1.0) > kTolerance) {
        fail(ErrorKind::NotNormalized, "|alpha|^2 + |beta|^2 = " + std::to_string(n));
    }
    return StateVector::from_terms({label}, {{{basis::up}, alpha}, {{basis::down}, beta}});
}

/// A register (device or observer memory slot) in its ready state.
inline StateVector make_ready(const SystemLabel &label) {
    return StateVector::from_terms({label}, {{{basis::ready}, Amplitude{1.0}}});
}

inline StateVector tensor_product(const StateVector &a, const StateVector &b) {
    std::vector<SystemLabel> labels = a.labels();
    for (const auto &l : b.labels()) {
        if (a.has_label(l.name)) {
            fail(ErrorKind::InvalidArgument, "subsystem '" + l.name + "' appears in both factors");
        }
        labels.push_back(l);
    }
    std::map<BasisKet, Amplitude> terms;
    for (const auto &[ka, va] : a.terms()) {
        for (const auto &[kb, vb] : b.terms()) {
            BasisKet k = ka;
            k.insert(k.end(), kb.begin(), kb.end());
            terms.emplace(std::move(k), va * vb);
        }
    }
    return unchecked_state(std::move(labels), std::move(terms));
}

/// c1*s1 + c2*s2 over identical label lists. The result must be a unit vector.
inline StateVector superpose(Amplitude c1, const StateVector &s1, Amplitude c2, const StateVector &s2) {
    if (s1.labels() != s2.labels()) {
        fail(ErrorKind::ArityMismatch, "superposed states have different subsystem labels");
    }
    std::map<BasisKet, Amplitude> terms;
    for (const auto &[k, v] : s1.terms()) {
        terms[k] += c1 * v;
    }
    for (const auto &[k, v] : s2.terms()) {
        terms[k] += c2 * v;
    }
    return StateVector::from_terms(s1.labels(), std::move(terms));
}

/// <a|b>, conjugate-linear in `a`. Kets are matched position by position.
inline Amplitude inner_product(const StateVector &a, const StateVector &b) {
    if (a.arity() != b.arity()) {
        fail(ErrorKind::ArityMismatch,
             "arity " + std::to_string(a.arity()) + " vs " + std::to_string(b.arity()));
    }
    Amplitude total{};
    const auto &small = a.terms().size() <= b.terms().size() ? a.terms() : b.terms();
    const bool a_is_small = &small == &a.terms();
    for (const auto &[ket, v] : small) {
        Amplitude other = a_is_small ? b.amplitude(ket) : a.amplitude(ket);
        total += a_is_small ? std::conj(v) * other : std::conj(other) * v;
    }
    return total;
}

/// Perfectly correlates each target register with the spin of `source`:
/// |up>|ready>... -> |up>|"up">..., |down>|ready>... -> |down>|"down">...
struct CorrelatingInteraction {
    SystemLabel source;
    std::vector<SystemLabel> targets;
};

inline StateVector apply_correlation(const StateVector &state, const CorrelatingInteraction &interaction) {
    const std::size_t src = state.index_of(interaction.source.name);
    std::vector<std::size_t> dst;
    for (const auto &t : interaction.targets) {
        std::size_t i = state.index_of(t.name);
        if (i == src) {
            fail(ErrorKind::InvalidArgument, "source '" + t.name + "' cannot also be a target");
        }
        dst.push_back(i);
    }
    std::map<BasisKet, Amplitude> out;
    for (const auto &[ket, amp] : state.terms()) {
        const std::string &spin = ket[src];
        const std::string *record;
        if (spin == basis::up) {
            record = &basis::record_up;
        } else if (spin == basis::down) {
            record = &basis::record_down;
        } else {
            fail(ErrorKind::UnknownLabel, "source '" + interaction.source.name + "' holds non-spin value " + spin);
        }
        BasisKet next = ket;
        for (std::size_t i : dst) {
            if (next[i] != basis::ready) {
                fail(ErrorKind::RegisterNotReady,
                     "register '" + state.labels()[i].name + "' holds " + next[i]);
            }
            next[i] = *record;
        }
        // Distinct input kets map to distinct output kets, so no amplitudes merge.
        out.emplace(std::move(next), amp);
    }
    return unchecked_state(state.labels(), std::move(out));
}

/// An observable given by orthonormal eigenvectors and their eigenvalues.
/// Repeated eigenvalues define a degenerate eigenspace.
class Observable {
   public:
    explicit Observable(std::vector<std::pair<StateVector, double>> eigenpairs) : eigenpairs_(std::move(eigenpairs)) {
        if (eigenpairs_.empty()) {
            fail(ErrorKind::InvalidArgument, "observable needs at least one eigenvector");
        }
        for (std::size_t i = 0; i < eigenpairs_.size(); ++i) {
            if (!std::isfinite(eigenpairs_[i].second)) {
                fail(ErrorKind::InvalidArgument, "non-finite eigenvalue");
            }
            for (std::size_t j = i + 1; j < eigenpairs_.size(); ++j) {
                Amplitude ov = inner_product(eigenpairs_[i].first, eigenpairs_[j].first);
                if (std::abs(ov) > kTolerance) {
                    fail(ErrorKind::NotOrthogonal, "eigenvectors " + std::to_string(i) + " and " + std::to_string(j) +
                                                       " overlap by " + std::to_string(std::abs(ov)));
                }
            }
        }
    }

    const std::vector<std::pair<StateVector, double>> &eigenpairs() const noexcept {
        return eigenpairs_;
    }

   private:
    std::vector<std::pair<StateVector, double>> eigenpairs_;
};

struct CollapseOutcome {
    double eigenvalue;
    StateVector state;
};

/// Outcome probabilities P(v) = sum over eigenvectors phi with eigenvalue v
/// of |<phi|psi>|^2, in first-appearance order of the eigenvalues.
inline std::vector<std::pair<double, double>> outcome_probabilities(const StateVector &state, const Observable &obs) {
    std::vector<std::pair<double, double>> probs;
    for (const auto &[phi, value] : obs.eigenpairs()) {
        const double p = std::norm(inner_product(phi, state));
        auto it = std::find_if(probs.begin(), probs.end(), [&](const auto &e) { return e.first == value; });
        if (it == probs.end()) {
            probs.emplace_back(value, p);
        } else {
            it->second += p;
        }
    }
    double total = 0;
    for (const auto &e : probs) {
        total += e.second;
    }
    if (std::abs(total - 1.0) > kTolerance) {
        fail(ErrorKind::IncompleteObservable,
             "eigenvectors capture " + std::to_string(total) + " of the state's squared norm");
    }
    return probs;
}

/// Collapse: draws eigenvalue v with probability P(v) and projects onto its
/// eigenspace. One draw from CounterRng(seed); deterministic in the seed.
inline CollapseOutcome measure_collapse(const StateVector &state, const Observable &obs, std::uint64_t rng_seed) {
    const auto probs = outcome_probabilities(state, obs);
    CounterRng rng(rng_seed);
    const double u = rng.uniform();
    double acc = 0;
    double chosen = probs.back().first;
    for (const auto &[value, p] : probs) {
        acc += p;
        if (u < acc) {
            chosen = value;
            break;
        }
    }
    // Zero-probability outcomes are unreachable; skip to the last with mass.
    if (u >= acc) {
        for (auto it = probs.rbegin(); it != probs.rend(); ++it) {
            if (it->second > 0) {
                chosen = it->first;
                break;
            }
        }
    }

    std::map<BasisKet, Amplitude> projected;
    const std::vector<SystemLabel> *labels = nullptr;
    for (const auto &[phi, value] : obs.eigenpairs()) {
        if (value != chosen) {
            continue;
        }
        labels = &phi.labels();
        const Amplitude c = inner_product(phi, state);
        for (const auto &[ket, amp] : phi.terms()) {
            projected[ket] += c * amp;
        }
    }
    double n = 0;
    for (const auto &[ket, amp] : projected) {
        n += std::norm(amp);
    }
    const double scale = 1.0 / std::sqrt(n);
    for (auto &[ket, amp] : projected) {
        amp *= scale;
    }
    return {chosen, StateVector::from_terms(*labels, std::move(projected))};
}

}  // namespace branchlab::hilbert
