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

#include <bit>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "branchlab/error.hpp"

namespace branchlab {

enum class Outcome : std::uint8_t { up, down };

/// A sequence of k spin outcomes, packed into the low k bits of a word.
/// Step 0 is the most significant bit and a set bit means down, so codes
/// 0, 1, 2, 3 at depth 2 are ↑↑, ↑↓, ↓↑, ↓↓.
class Record {
   public:
    static constexpr unsigned kMaxBits = 32;

    constexpr Record() = default;
    Record(std::uint32_t code, unsigned depth) : depth_(depth), code_(code) {
        if (depth > kMaxBits) {
            fail(ErrorKind::DepthTooLarge, "record depth " + std::to_string(depth) + " exceeds 32");
        }
        if (depth < kMaxBits && (code >> depth) != 0) {
            fail(ErrorKind::InvalidArgument, "record code has bits beyond depth");
        }
    }

    static Record from_outcomes(const std::vector<Outcome> &outcomes) {
        if (outcomes.size() > kMaxBits) {
            fail(ErrorKind::DepthTooLarge, "record depth exceeds 32");
        }
        std::uint32_t code = 0;
        for (Outcome o : outcomes) {
            code = (code << 1) | (o == Outcome::down ? 1u : 0u);
        }
        return Record(code, static_cast<unsigned>(outcomes.size()));
    }

    /// Accepts "↑"/"↓" as well as ASCII 'u'/'d' (or 'U'/'D', '0' for up and
    /// '1' for down).
    static Record parse(std::string_view text) {
        std::vector<Outcome> out;
        std::size_t i = 0;
        while (i < text.size()) {
            if (text.substr(i, 3) == "↑") {
                out.push_back(Outcome::up);
                i += 3;
            } else if (text.substr(i, 3) == "↓") {
                out.push_back(Outcome::down);
                i += 3;
            } else {
                char c = text[i];
                if (c == 'u' || c == 'U' || c == '0') {
                    out.push_back(Outcome::up);
                } else if (c == 'd' || c == 'D' || c == '1') {
                    out.push_back(Outcome::down);
                } else {
                    fail(ErrorKind::InvalidArgument, "cannot parse record '" + std::string(text) + "'");
                }
                ++i;
            }
        }
        return from_outcomes(out);
    }

    constexpr std::uint32_t code() const noexcept {
        return code_;
    }
    constexpr unsigned depth() const noexcept {
        return depth_;
    }

    Outcome at(unsigned step) const {
        if (step >= depth_) {
            fail(ErrorKind::InvalidArgument, "step " + std::to_string(step) + " beyond record depth");
        }
        return ((code_ >> (depth_ - 1 - step)) & 1u) ? Outcome::down : Outcome::up;
    }

    unsigned down_count() const noexcept {
        return static_cast<unsigned>(std::popcount(code_));
    }
    unsigned up_count() const noexcept {
        return depth_ - down_count();
    }

    Record prefix(unsigned len) const {
        if (len > depth_) {
            fail(ErrorKind::InvalidArgument, "prefix longer than record");
        }
        return Record(len == 0 ? 0u : code_ >> (depth_ - len), len);
    }

    std::vector<Outcome> outcomes() const {
        std::vector<Outcome> out;
        out.reserve(depth_);
        for (unsigned j = 0; j < depth_; ++j) {
            out.push_back(at(j));
        }
        return out;
    }

    std::string str() const {
        std::string s;
        for (unsigned j = 0; j < depth_; ++j) {
            s += at(j) == Outcome::up ? "↑" : "↓";
        }
        return s;
    }

    friend constexpr auto operator<=>(const Record &, const Record &) = default;

   private:
    unsigned depth_ = 0;
    std::uint32_t code_ = 0;
};

}  // namespace branchlab
