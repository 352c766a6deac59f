// SPDX-License-Identifier: Apache-2.0
//
// simcascade: multi-port S-parameter simulator for stacked active metasurfaces
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#pragma once

#include "simcascade/config.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace simcascade::cli {

enum ExitCode : int { success = 0, verification_failed = 1, usage_error = 2, runtime_error = 3 };

/// Runs `body`, printing any exception to `err` and mapping it to an exit
/// code: configuration and input errors give 2, everything else 3.
int guarded(const std::function<int()>& body, std::ostream& err);

/// One optimization and the metrics of the resulting physical channel.
struct PointResult {
    OptimizationRun run;
    double wall_ms = 0.0;
    /// H_SR H2 with identity excitations, without beta.
    CMatrix<double> channel;
    std::optional<double> diagonality_db;
};

PointResult run_point(const Scenario& scenario);

/// JSON report of one optimization.
int cmd_optimize(const ScenarioConfig& config, std::ostream& out);

enum class SweepAxis { bandwidth, gain, spacing };

SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRequest {
    SweepAxis axis = SweepAxis::bandwidth;
    /// Hz, dB or wavelengths depending on the axis; empty selects the default grid.
    std::vector<double> values;
    int jobs = 1;
};

inline constexpr const char* kSweepHeader =
    "axis,value,K,Q,gain_db,spacing_lambda,bandwidth_hz,sum_se_bits_per_hz,diagonality_db,iterations,wall_ms,seed";

/// CSV with one row per value, in input order. Returns 3 if any point failed.
int cmd_sweep(const ScenarioConfig& config, const SweepRequest& request, std::ostream& out);

struct VerifyRequest {
    /// Either a config or a random instance {Q, K, L, M}.
    std::optional<ScenarioConfig> config;
    std::array<int, 4> random{};
    std::uint64_t seed = 0;
    /// Linear amplitude for random instances.
    double gain = 1.0;
};

int cmd_verify(const VerifyRequest& request, std::ostream& out);

struct BenchRequest {
    int max_q = 16;
    int max_k = 16;
    int repetitions = 3;
    int ports = 1;
    /// Oracle solves above this many SIM ports are skipped.
    int oracle_max_n = 2048;
    std::uint64_t seed = 0;
};

inline constexpr const char* kBenchHeader = "q,k,path,flops,wall_us,rep";

int cmd_bench(const BenchRequest& request, std::ostream& out);

/// Layered blocks with entries uniform in the unit disk scaled by 1/sqrt(K),
/// optionally with reflections and a direct path.
ScatteringBlocksd random_layered_blocks(const SimTopology& topo, std::uint64_t seed, bool with_extras);

}  // namespace simcascade::cli
