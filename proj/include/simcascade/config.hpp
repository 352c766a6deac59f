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

#include "simcascade/coupling.hpp"
#include "simcascade/evaluation.hpp"
#include "simcascade/optimizer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace simcascade {

/// Everything a run needs, as read from a JSON config file.
///
/// Exactly one of `geometry` and `block_file` is set. Relative block and
/// training paths are resolved against the directory holding the config.
struct ScenarioConfig {
    std::optional<ScenarioGeometry> geometry;
    std::optional<std::filesystem::path> block_file;
    SimTopology topology;
    double gain_db = 0.0;
    bool gain_db_is_amplitude = false;
    std::optional<std::filesystem::path> training_file;
    OptimizerConfig optimizer;
    LinkBudget budget;
    std::vector<double> bandwidth_grid_hz = bandwidth_grid();
    std::uint64_t seed = 0;

    /// Linear amplitude applied to every unit cell.
    double gain_amplitude() const;
};

ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Blocks, training set and initial phases ready for the optimizer.
struct Scenario {
    ScenarioConfig config;
    /// Empty when an ingested matrix is not layered.
    std::optional<ScatteringBlocksd> blocks;
    GlobalScatteringd global;
    TrainingSet training;
};

Scenario make_scenario(const ScenarioConfig& config);

/// Training set stored as {"excitations": [[re, im], ...] rows, "target": ...}.
TrainingSet load_training_json(std::string_view text);

}  // namespace simcascade
