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
 * Relative-frequency concentration of the norm-squared measure: the mass of
 * branches whose up-frequency lies near |alpha|^2, by exact binomial sums.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/exact.hpp"

namespace branchlab::theorems {

inline constexpr unsigned kMaxScanDepth = 10000;
inline constexpr unsigned kStabilizationWindow = 50;

inline void check_probability(double p, const char *what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        fail(ErrorKind::InvalidArgument, std::string(what) + " must lie in [0, 1]");
    }
}

/// Norm-squared mass of the branches with |#up/k - alpha_sq| <= epsilon:
/// sum over the window of C(k,j) alpha_sq^j (1-alpha_sq)^(k-j). Binomials are
/// exact integers; the weights are carried in 266-bit floats and rounded once.
inline double typical_mass(double alpha_sq, unsigned k, double epsilon) {
    check_probability(alpha_sq, "alpha^2");
    if (k < 1) {
        fail(ErrorKind::InvalidArgument, "k must be at least 1");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        fail(ErrorKind::InvalidArgument, "epsilon must be non-negative");
    }
    const auto w = exact::frequency_window(alpha_sq, k, epsilon);
    if (w.empty()) {
        return 0.0;
    }
    using exact::BigFloat;
    const BigFloat p(alpha_sq);
    const BigFloat q = BigFloat(1) - p;

    if (p == 0 || q == 0) {
        // Only the all-down or all-up branch carries weight.
        const long only = p == 0 ? 0 : static_cast<long>(k);
        return w.contains(only) ? 1.0 : 0.0;
    }

    exact::BigInt c = exact::binomial(k, static_cast<unsigned long>(w.lo));
    BigFloat weight = pow(p, w.lo) * pow(q, static_cast<long>(k) - w.lo);
    const BigFloat ratio = p / q;
    BigFloat total = 0;
    for (long j = w.lo; j <= w.hi; ++j) {
        total += BigFloat(c) * weight;
        if (j < w.hi) {
            c *= static_cast<unsigned long>(static_cast<long>(k) - j);
            mpz_divexact_ui(c.backend().data(), c.backend().data(), static_cast<unsigned long>(j + 1));
            weight *= ratio;
        }
    }
    return static_cast<double>(total);
}

struct RFTheoremQuery {
    double alpha_sq;
    double epsilon;
    double delta;
    unsigned k_max;
};

/// Result of the exhaustive k-scan. The tail condition is not monotone in k,
/// so both the first crossing and the point after which it never fails again
/// (within k_max) are reported.
struct MinimalK {
    /// Smallest k <= k_max with typical_mass >= 1 - delta.
    std::optional<unsigned> first_k;
    /// Smallest k such that the condition holds for every k' in [k, k_max].
    std::optional<unsigned> stable_k;
    /// Whether the condition holds on all of [first_k, window_end].
    bool holds_in_window = false;
    unsigned window_end = 0;
    /// typical_mass for k = 1..k_max (index k-1).
    std::vector<double> masses;

    bool found() const noexcept {
        return first_k.has_value();
    }
};

inline void validate(const RFTheoremQuery &query) {
    check_probability(query.alpha_sq, "alpha^2");
    if (!(query.epsilon > 0.0 && query.epsilon < 1.0)) {
        fail(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
    }
    if (!(query.delta > 0.0 && query.delta < 1.0)) {
        fail(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
    }
    if (query.k_max < 1 || query.k_max > kMaxScanDepth) {
        fail(ErrorKind::InvalidArgument, "k_max must lie in [1, 10000]");
    }
}

inline std::vector<double> mass_curve(double alpha_sq, double epsilon, unsigned k_max) {
    std::vector<double> masses;
    masses.reserve(k_max);
    for (unsigned k = 1; k <= k_max; ++k) {
        masses.push_back(typical_mass(alpha_sq, k, epsilon));
    }
    return masses;
}

inline MinimalK minimal_k(const RFTheoremQuery &query) {
    validate(query);
    MinimalK out;
    out.masses = mass_curve(query.alpha_sq, query.epsilon, query.k_max);
    const double threshold = 1.0 - query.delta;
    auto ok = [&](unsigned k) { return out.masses[k - 1] >= threshold; };

    for (unsigned k = 1; k <= query.k_max; ++k) {
        if (ok(k)) {
            out.first_k = k;
            break;
        }
    }
    if (!out.first_k) {
        return out;
    }
    out.window_end = std::min(*out.first_k + kStabilizationWindow, query.k_max);
    out.holds_in_window = true;
    for (unsigned k = *out.first_k; k <= out.window_end; ++k) {
        out.holds_in_window = out.holds_in_window && ok(k);
    }
    if (ok(query.k_max)) {
        unsigned k = query.k_max;
        while (k > 1 && ok(k - 1)) {
            --k;
        }
        out.stable_k = k;
    }
    return out;
}

/// Two-sided Hoeffding bound: k >= ln(2/delta) / (2 epsilon^2) guarantees
/// typical_mass >= 1 - delta.
inline unsigned hoeffding_envelope(double epsilon, double delta) {
    return static_cast<unsigned>(std::ceil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon)));
}

}  // namespace branchlab::theorems
