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

#include <cstdint>
#include <limits>

namespace branchlab {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: the n-th output is mix64(key + (n + 1) * golden),
/// where key is derived from (seed, stream). Output n depends only on
/// (seed, stream, n), so independent streams can be drawn in any order and
/// every experiment is bit-reproducible from its seed.
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
   public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(mix64(seed ^ mix64(stream + kGolden))) {
    }

    static constexpr result_type min() noexcept {
        return 0;
    }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * kGolden);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection sampling, so no modulo bias.
    constexpr std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) {
            return 0;
        }
        // Values below 2^64 mod n would over-represent the low residues.
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t x = (*this)();
            if (x >= threshold) {
                return x % n;
            }
        }
    }

    constexpr std::uint64_t counter() const noexcept {
        return counter_;
    }

   private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace branchlab
