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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include "branchlab/error.hpp"

namespace branchlab::exact {

using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;
/// ~266-bit binary float with a wide exponent range (no underflow at k = 10^4).
using BigFloat =
    boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<80>, boost::multiprecision::et_off>;

inline BigInt binomial(unsigned long n, unsigned long k) {
    BigInt c;
    mpz_bin_uiui(c.backend().data(), n, k);
    return c;
}

inline BigInt power(const BigInt &base, unsigned long e) {
    return boost::multiprecision::pow(base, static_cast<unsigned>(e));
}

/// Closed up-count interval {j : |j/k - target| <= epsilon}. Bounds are
/// widened by 1e-9 counts so that decimal inputs hit their boundary points
/// (0.36 - 0.05 at k = 100 must include j = 31). Empty when lo > hi.
struct CountWindow {
    long lo;
    long hi;

    bool empty() const noexcept {
        return lo > hi;
    }
    bool contains(long j) const noexcept {
        return j >= lo && j <= hi;
    }
};

inline constexpr double kWindowSlack = 1e-9;

inline CountWindow frequency_window(double target, unsigned long k, double epsilon) {
    const double kd = static_cast<double>(k);
    long lo = static_cast<long>(std::ceil((target - epsilon) * kd - kWindowSlack));
    long hi = static_cast<long>(std::floor((target + epsilon) * kd + kWindowSlack));
    lo = std::max(lo, 0L);
    hi = std::min(hi, static_cast<long>(k));
    return {lo, hi};
}

inline double to_double(const Rational &q) {
    return static_cast<double>(BigFloat(q));
}

}  // namespace branchlab::exact
