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

#include <stdexcept>
#include <string>
#include <string_view>

namespace branchlab {

enum class ErrorKind {
    NotNormalized,
    RegisterNotReady,
    UnknownLabel,
    IncompleteObservable,
    NotOrthogonal,
    ArityMismatch,
    DepthTooLarge,
    UnknownBranch,
    NotAPartition,
    EmptySequence,
    UnknownBranchInSubset,
    NonIntegerSplit,
    EmptyPartitionCell,
    DomainMismatch,
    InvalidInterval,
    InvalidArgument,
};

inline std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotNormalized: return "NotNormalized";
        case ErrorKind::RegisterNotReady: return "RegisterNotReady";
        case ErrorKind::UnknownLabel: return "UnknownLabel";
        case ErrorKind::IncompleteObservable: return "IncompleteObservable";
        case ErrorKind::NotOrthogonal: return "NotOrthogonal";
        case ErrorKind::ArityMismatch: return "ArityMismatch";
        case ErrorKind::DepthTooLarge: return "DepthTooLarge";
        case ErrorKind::UnknownBranch: return "UnknownBranch";
        case ErrorKind::NotAPartition: return "NotAPartition";
        case ErrorKind::EmptySequence: return "EmptySequence";
        case ErrorKind::UnknownBranchInSubset: return "UnknownBranchInSubset";
        case ErrorKind::NonIntegerSplit: return "NonIntegerSplit";
        case ErrorKind::EmptyPartitionCell: return "EmptyPartitionCell";
        case ErrorKind::DomainMismatch: return "DomainMismatch";
        case ErrorKind::InvalidInterval: return "InvalidInterval";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every precondition failure in the library is reported as an `Error`
/// carrying a machine-checkable kind.
class Error : public std::invalid_argument {
   public:
    Error(ErrorKind kind, const std::string &message)
        : std::invalid_argument(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {
    }

    ErrorKind kind() const noexcept {
        return kind_;
    }

   private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
    throw Error(kind, message);
}

}  // namespace branchlab
