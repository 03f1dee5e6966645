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
 * Statistical randomness tests on record sequences, calibrated to a biased
 * Bernoulli(p) source, and the measure of branches that pass them.
 *
 * Every test yields a two-sided p-value; a record passes at significance s
 * when its p-value is >= s.
 *
 *  - monobit: z = (X - kp) / sqrt(kp(1-p)) for up-count X.
 *  - runs: number of runs R against its unconditional iid law,
 *    E[R] = 1 + 2(k-1)pq and
 *    Var[R] = 2(k-1)pq(1-2pq) + 2(k-2)(pq - 4p^2q^2).
 *  - block-entropy: non-overlapping m-bit blocks; G = 2 n KL(empirical ||
 *    Bernoulli(p)^m) is compared with chi-square(2^m - 1).
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "branchlab/branching.hpp"
#include "branchlab/error.hpp"
#include "branchlab/record.hpp"
#include "branchlab/theorems.hpp"

namespace branchlab::theorems {

enum class RandomnessTest { monobit, runs, block_entropy };

inline std::string_view test_name(RandomnessTest t) {
    switch (t) {
        case RandomnessTest::monobit: return "monobit";
        case RandomnessTest::runs: return "runs";
        case RandomnessTest::block_entropy: return "block-entropy";
    }
    return "?";
}

inline RandomnessTest parse_test(std::string_view name) {
    if (name == "monobit") return RandomnessTest::monobit;
    if (name == "runs") return RandomnessTest::runs;
    if (name == "block-entropy") return RandomnessTest::block_entropy;
    fail(ErrorKind::InvalidArgument, "unknown randomness test '" + std::string(name) + "'");
}

struct RandomnessTestSpec {
    std::vector<RandomnessTest> tests{RandomnessTest::monobit, RandomnessTest::runs, RandomnessTest::block_entropy};
    double significance = 0.05;
    double calibration_p = 0.5;
    unsigned block_length = 2;
};

inline void validate(const RandomnessTestSpec &spec) {
    if (spec.tests.empty()) {
        fail(ErrorKind::InvalidArgument, "no randomness tests selected");
    }
    if (!(spec.significance > 0.0 && spec.significance < 0.5)) {
        fail(ErrorKind::InvalidArgument, "significance must lie in (0, 0.5)");
    }
    if (!(spec.calibration_p >= 0.0 && spec.calibration_p <= 1.0)) {
        fail(ErrorKind::InvalidArgument, "calibration p must lie in [0, 1]");
    }
    if (spec.block_length < 1 || spec.block_length > 8) {
        fail(ErrorKind::InvalidArgument, "block length must lie in [1, 8]");
    }
}

namespace detail {

/// Two-sided normal p-value; a zero-variance statistic passes only on its mean.
inline double z_p_value(double stat, double mean, double var) {
    if (var <= 0.0) {
        return std::abs(stat - mean) < 1e-12 ? 1.0 : 0.0;
    }
    return std::erfc(std::abs(stat - mean) / std::sqrt(2.0 * var));
}

}  // namespace detail

inline double monobit_from_count(unsigned ups, unsigned k, double p) {
    return detail::z_p_value(ups, k * p, k * p * (1.0 - p));
}

inline double monobit_p_value(const Record &r, double p) {
    return monobit_from_count(r.up_count(), r.depth(), p);
}

inline unsigned run_count(const Record &r) {
    if (r.depth() == 0) {
        return 0;
    }
    const std::uint32_t c = r.code();
    // Adjacent differing bits: popcount of c ^ (c >> 1) within the k-1 pairs.
    const std::uint32_t mask = r.depth() >= 2 ? (1u << (r.depth() - 1)) - 1 : 0u;
    return 1 + static_cast<unsigned>(std::popcount((c ^ (c >> 1)) & mask));
}

inline double runs_p_value(const Record &r, double p) {
    const double k = r.depth();
    const double pq = p * (1.0 - p);
    const double mean = 1.0 + 2.0 * std::max(k - 1.0, 0.0) * pq;
    const double var = 2.0 * std::max(k - 1.0, 0.0) * pq * (1.0 - 2.0 * pq) +
                       2.0 * std::max(k - 2.0, 0.0) * (pq - 4.0 * pq * pq);
    return detail::z_p_value(run_count(r), mean, var);
}

inline double block_entropy_p_value(const Record &r, double p, unsigned m) {
    const unsigned blocks = r.depth() / m;
    if (blocks == 0) {
        return 1.0;
    }
    const unsigned cells = 1u << m;
    std::vector<unsigned> observed(cells, 0);
    for (unsigned b = 0; b < blocks; ++b) {
        unsigned pattern = 0;
        for (unsigned i = 0; i < m; ++i) {
            pattern = (pattern << 1) | (r.at(b * m + i) == Outcome::down ? 1u : 0u);
        }
        ++observed[pattern];
    }
    double g = 0;
    for (unsigned pattern = 0; pattern < cells; ++pattern) {
        if (observed[pattern] == 0) {
            continue;
        }
        const unsigned downs = static_cast<unsigned>(std::popcount(pattern));
        const double prob = std::pow(p, m - downs) * std::pow(1.0 - p, downs);
        if (prob <= 0.0) {
            return 0.0;  // pattern impossible under the calibration law
        }
        const double o = observed[pattern];
        g += 2.0 * o * std::log(o / (blocks * prob));
    }
    g = std::max(g, 0.0);
    return boost::math::gamma_q((cells - 1) / 2.0, g / 2.0);
}

inline double p_value(RandomnessTest t, const Record &r, const RandomnessTestSpec &spec) {
    switch (t) {
        case RandomnessTest::monobit: return monobit_p_value(r, spec.calibration_p);
        case RandomnessTest::runs: return runs_p_value(r, spec.calibration_p);
        case RandomnessTest::block_entropy: return block_entropy_p_value(r, spec.calibration_p, spec.block_length);
    }
    return 0.0;
}

inline bool passes(RandomnessTest t, const Record &r, const RandomnessTestSpec &spec) {
    return p_value(t, r, spec) >= spec.significance;
}

struct RandomnessRow {
    RandomnessTest test;
    /// Norm-squared mass of passing branches.
    double measure_mass = 0;
    /// Fraction of branches (by count) that pass.
    double count_fraction = 0;
};

/// Enumerates every branch of the layer.
inline std::vector<RandomnessRow> randomness_mass(const BranchLayer &layer, const RandomnessTestSpec &spec) {
    validate(spec);
    std::vector<RandomnessRow> rows;
    const auto amps = layer.dense();
    for (RandomnessTest t : spec.tests) {
        RandomnessRow row{t};
        std::size_t passing = 0;
        for (std::uint32_t code = 0; code < amps.size(); ++code) {
            if (amps[code] == Amplitude{}) {
                continue;
            }
            if (passes(t, Record(code, layer.depth()), spec)) {
                row.measure_mass += std::norm(amps[code]);
                ++passing;
            }
        }
        row.count_fraction = static_cast<double>(passing) / static_cast<double>(layer.size());
        rows.push_back(row);
    }
    return rows;
}

/// Depth-unbounded mode for count-only statistics (monobit). Sums exact
/// binomial weights over up-counts.
inline std::vector<RandomnessRow> randomness_mass_binomial(double alpha_sq, unsigned k, const RandomnessTestSpec &spec) {
    validate(spec);
    check_probability(alpha_sq, "alpha^2");
    if (k < 1 || k > kMaxScanDepth) {
        fail(ErrorKind::InvalidArgument, "k must lie in [1, 10000]");
    }
    std::vector<RandomnessRow> rows;
    for (RandomnessTest t : spec.tests) {
        if (t != RandomnessTest::monobit) {
            fail(ErrorKind::InvalidArgument,
                 std::string(test_name(t)) + " depends on record order; use enumeration (k <= 24)");
        }
        using exact::BigFloat;
        const BigFloat p(alpha_sq);
        const BigFloat q = BigFloat(1) - p;
        BigFloat mass = 0;
        exact::BigInt passing = 0;
        for (unsigned j = 0; j <= k; ++j) {
            if (monobit_from_count(j, k, spec.calibration_p) >= spec.significance) {
                const exact::BigInt c = exact::binomial(k, j);
                mass += BigFloat(c) * pow(p, static_cast<long>(j)) * pow(q, static_cast<long>(k - j));
                passing += c;
            }
        }
        RandomnessRow row{t};
        row.measure_mass = static_cast<double>(mass);
        row.count_fraction = exact::to_double(exact::Rational(passing, exact::power(exact::BigInt(2), k)));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace branchlab::theorems
