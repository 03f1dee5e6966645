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

#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/hilbert.hpp"

namespace branchlab::demos {

/// Friend F and device M have measured spin S. `pure_state` is the
/// correlated superposition the linear dynamics produces; the mixture holds
/// the two collapsed record states with weights |alpha|^2 and |beta|^2.
struct InterferenceSetup {
    Amplitude alpha;
    Amplitude beta;
    hilbert::StateVector pure_state;
    std::vector<std::pair<double, hilbert::StateVector>> collapsed_mixture;
};

inline const hilbert::SystemLabel kFriend{"F", hilbert::SystemKind::observer};
inline const hilbert::SystemLabel kDevice{"M", hilbert::SystemKind::device};
inline const hilbert::SystemLabel kSpin{"S", hilbert::SystemKind::object};

inline hilbert::StateVector record_state(bool up) {
    using namespace hilbert;
    const std::string &rec = up ? basis::record_up : basis::record_down;
    return StateVector::from_terms({kFriend, kDevice, kSpin}, {{{rec, rec, up ? basis::up : basis::down}, 1.0}});
}

/// Runs the F-M-S measurement through the correlating interaction.
inline InterferenceSetup make_interference_setup(Amplitude alpha, Amplitude beta) {
    using namespace hilbert;
    const auto registers = tensor_product(make_ready(kFriend), make_ready(kDevice));
    const auto initial = tensor_product(registers, make_spin_state(alpha, beta, kSpin));
    auto pure = apply_correlation(initial, CorrelatingInteraction{kSpin, {kDevice, kFriend}});
    std::vector<std::pair<double, StateVector>> mixture;
    mixture.emplace_back(std::norm(alpha), record_state(true));
    mixture.emplace_back(std::norm(beta), record_state(false));
    return {alpha, beta, std::move(pure), std::move(mixture)};
}

/// Eigenvalue +1 on the pure post-measurement state, -1 on its orthogonal
/// complement conj(beta)|up-records> - conj(alpha)|down-records> within the
/// two-branch subspace. Other directions are never reached.
inline hilbert::Observable interference_observable(const InterferenceSetup &setup) {
    using namespace hilbert;
    const auto up = record_state(true);
    const auto down = record_state(false);
    auto minus = superpose(std::conj(setup.beta), up, -std::conj(setup.alpha), down);
    return Observable({{setup.pure_state, +1.0}, {std::move(minus), -1.0}});
}

struct OutcomeDistribution {
    double p_plus = 0;
    double p_minus = 0;
};

struct InterferenceResult {
    OutcomeDistribution pure;
    OutcomeDistribution mixture;
};

inline OutcomeDistribution outcome_distribution(const hilbert::StateVector &s, const hilbert::Observable &obs) {
    OutcomeDistribution d;
    for (const auto &[value, p] : hilbert::outcome_probabilities(s, obs)) {
        (value > 0 ? d.p_plus : d.p_minus) += p;
    }
    return d;
}

inline InterferenceResult interference_distributions(const InterferenceSetup &setup) {
    double total = 0;
    for (const auto &[w, s] : setup.collapsed_mixture) {
        if (!(w >= 0.0)) {
            fail(ErrorKind::InvalidArgument, "negative mixture weight");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > kTolerance) {
        fail(ErrorKind::NotNormalized, "mixture weights sum to " + std::to_string(total));
    }
    const auto obs = interference_observable(setup);
    InterferenceResult r;
    r.pure = outcome_distribution(setup.pure_state, obs);
    for (const auto &[w, s] : setup.collapsed_mixture) {
        const auto d = outcome_distribution(s, obs);
        r.mixture.p_plus += w * d.p_plus;
        r.mixture.p_minus += w * d.p_minus;
    }
    return r;
}

enum class CubeParameterization {
    side_length,
    /// Volumes taken to range over [0, max_side^2], the range quoted in the
    /// factory story (0 to 4 for 2 m sides).
    paper_volume,
    /// Volumes over their true range [0, max_side^3].
    geometric_volume,
};

inline std::string_view parameterization_name(CubeParameterization p) {
    switch (p) {
        case CubeParameterization::side_length: return "side";
        case CubeParameterization::paper_volume: return "paper-volume";
        case CubeParameterization::geometric_volume: return "geometric-volume";
    }
    return "?";
}

/// Cubes have side in [0, max_side]; the event is side in [side_lo, side_hi],
/// which is the event volume in [side_lo^3, side_hi^3].
struct CubeFactorySpec {
    double max_side = 2.0;
    double side_lo = 0.0;
    double side_hi = 1.0;
};

/// Indifference (a uniform law) over the chosen parameter.
inline double cube_probability(const CubeFactorySpec &spec, CubeParameterization param) {
    if (!(spec.max_side > 0.0) || !std::isfinite(spec.max_side)) {
        fail(ErrorKind::InvalidInterval, "max side must be positive");
    }
    if (!(spec.side_lo >= 0.0 && spec.side_lo <= spec.side_hi && spec.side_hi <= spec.max_side)) {
        fail(ErrorKind::InvalidInterval, "query interval must satisfy 0 <= lo <= hi <= max side");
    }
    switch (param) {
        case CubeParameterization::side_length: return (spec.side_hi - spec.side_lo) / spec.max_side;
        case CubeParameterization::paper_volume: {
            const double range = spec.max_side * spec.max_side;
            const double lo = std::min(std::pow(spec.side_lo, 3), range);
            const double hi = std::min(std::pow(spec.side_hi, 3), range);
            return (hi - lo) / range;
        }
        case CubeParameterization::geometric_volume:
            return (std::pow(spec.side_hi, 3) - std::pow(spec.side_lo, 3)) / std::pow(spec.max_side, 3);
    }
    return 0.0;
}

}  // namespace branchlab::demos
