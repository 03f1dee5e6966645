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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace branchlab::cli {

inline constexpr const char *kVersion = "0.1.0";
inline constexpr const char *kRunDirEnv = "BRANCHLAB_RUN_DIR";
inline constexpr const char *kRunLogName = "runs.ndjson";

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2 };

/// Bad flag value or combination; `flag` names the offender.
class UsageError : public std::runtime_error {
   public:
    UsageError(std::string flag, const std::string &msg)
        : std::runtime_error(flag + ": " + msg), flag_(std::move(flag)) {}

    const std::string &flag() const noexcept {
        return flag_;
    }

   private:
    std::string flag_;
};

class ReplayMismatch : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every input a command reads. Files named on the command line are loaded
/// at parse time and stored inline, so a config replays without them.
struct RunConfig {
    std::string command;
    double alpha_sq = 0.5;
    std::optional<double> beta_sq;
    unsigned k = 10;
    double epsilon = 0.05;
    double delta = 0.05;
    double significance = 0.05;
    double calibration_p = 0.5;
    unsigned block_length = 2;
    std::string measure = "norm-squared";
    nlohmann::json measure_table;
    /// Empty selects the command default.
    std::string partition;
    nlohmann::json partition_cells;
    nlohmann::json layer;
    std::uint64_t resolution = 25;
    std::uint64_t n_samples = 100000;
    std::uint64_t seed = 0;
    unsigned trials = 100;
    unsigned k_max = 1000;
    std::string tests = "monobit,runs,block-entropy";
    std::string p_grid = "0.5,1,1.5,2,3,4";
    std::string rule = "collapse-per-step";
    std::string rule_b = "indifference";
    bool sequences = false;
    std::string mode = "all";
    double max_side = 2.0;
    double side_lo = 0.0;
    double side_hi = 1.0;
    std::string format = "json";
    std::string out;
};

nlohmann::json to_json(const RunConfig &c);
RunConfig config_from_json(const nlohmann::json &j);

/// FNV-1a 64 of the config's compact JSON, as 16 hex digits. The output
/// path is not part of the hash.
std::string config_hash(const RunConfig &c);

std::uint64_t fnv1a64(std::string_view bytes);

/// Checks every flag of c; throws UsageError.
void validate(const RunConfig &c);

/// Runs a validated config and returns the results payload. Deterministic.
std::string execute(const RunConfig &c);

struct RunRecord {
    std::string id;
    RunConfig config;
    std::string config_hash;
    std::string started;
    std::string finished;
    std::string version;
    std::string payload;
    std::string payload_hash;
};

nlohmann::json to_json(const RunRecord &r);

std::filesystem::path default_run_dir();

/// Appends one line to <dir>/runs.ndjson with a single write.
void append_run(const std::filesystem::path &dir, const RunRecord &r);

/// The raw log line for id, or nullopt.
std::optional<nlohmann::json> find_run(const std::filesystem::path &dir, const std::string &id);

struct Streams {
    std::ostream &out;
    std::ostream &err;
    std::filesystem::path run_dir;
};

/// Full command line, argv[0] included.
int run(const std::vector<std::string> &args, Streams &io);

}  // namespace branchlab::cli
