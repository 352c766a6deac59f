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

// Sources of scattering blocks: an analytical free-space surrogate of the
// stacked geometry, and ingestion of externally computed matrices (JSON block
// files and a single-frequency Touchstone v1 subset).

#include "simcascade/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace simcascade {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Uniform stack of planar arrays. Layer q (1-based) lies in the plane
/// x = q * layer_spacing_m; the transmit array sits tx_distance_m before
/// layer 1 and the receive array rx_distance_m after layer Q. Planar arrays
/// are centred on the x axis; the linear tx/rx arrays run along y.
struct ScenarioGeometry {
    double wavelength_m = kSpeedOfLight / 28e9;
    double layer_spacing_m = 1.5 * (kSpeedOfLight / 28e9);
    int elements_y = 16;
    int elements_z = 4;
    double element_spacing_y_m = 0.5 * (kSpeedOfLight / 28e9);
    double element_spacing_z_m = 0.75 * (kSpeedOfLight / 28e9);
    double tx_distance_m = 10.0 * (kSpeedOfLight / 28e9);
    double rx_distance_m = 5.0 * (kSpeedOfLight / 28e9);
    int tx_count = 4;
    int rx_count = 4;
    double tx_spacing_m = kSpeedOfLight / 28e9;
    double rx_spacing_m = kSpeedOfLight / 28e9;
    /// Multiplies every coupling by cos(theta) w.r.t. the array normal.
    bool broadside_pattern = false;

    int cells() const { return elements_y * elements_z; }
    void validate() const;
};

/// 28 GHz reference layout in units of the wavelength at `frequency_hz`.
ScenarioGeometry reference_geometry(double frequency_hz = 28e9);

/// (lambda / (4 pi d)) exp(-j 2 pi d / lambda).
std::complex<double> free_space_coefficient(double distance_m, double wavelength_m);

using Positions = Eigen::Matrix<double, 3, Eigen::Dynamic>;

Positions layer_positions(const ScenarioGeometry& geom, int layer);
Positions tx_positions(const ScenarioGeometry& geom);
Positions rx_positions(const ScenarioGeometry& geom, int layers);

/// Coupling from every source element (columns) to every destination element (rows).
CMatrix<double> coupling_block(const Positions& from, const Positions& to, double wavelength_m,
                               bool broadside_pattern = false);

/// Surrogate blocks for `topo`; reflections and the direct path are zero.
ScatteringBlocksd build_scenario(const ScenarioGeometry& geom, const SimTopology& topo);

// ---------------------------------------------------------------- Touchstone

struct TouchstoneData {
    CMatrix<double> s;
    double frequency_hz = 0.0;
    double reference_impedance_ohm = 50.0;
};

/// Parses one frequency point in RI format. `ports`, when known (e.g. from a
/// .sNp extension), must agree with the entry count.
TouchstoneData parse_touchstone(std::istream& in, std::optional<int> ports = std::nullopt);
TouchstoneData parse_touchstone(std::string_view text, std::optional<int> ports = std::nullopt);

/// Writes the subset accepted by parse_touchstone; values round-trip exactly.
std::string write_touchstone(const TouchstoneData& data);

/// Gain and phase of a matched unilateral two-port [[0, 0], [G e^{j eta}, 0]].
struct UnitCellResponse {
    double gain = 0.0;
    double phase_rad = 0.0;
};

UnitCellResponse characterize_unit_cell(const CMatrix<double>& s, double tolerance = 1e-9);

// ----------------------------------------------------------------- JSON blocks

struct BlockFile {
    ScatteringBlocksd blocks;
    double wavelength_m = 0.0;
};

BlockFile load_blocks_json(std::string_view text);
std::string save_blocks_json(const ScatteringBlocksd& blocks, double wavelength_m);

// ------------------------------------------------------------------ ingestion

enum class BlockFormat { json, touchstone };

struct IngestedBlockSet {
    /// Empty when the ingested matrix has coupling outside the layered pattern.
    std::optional<ScatteringBlocksd> blocks;
    GlobalScatteringd global;
    std::filesystem::path source;
    BlockFormat format = BlockFormat::json;
    double reference_impedance_ohm = 50.0;
    double frequency_hz = 0.0;
    double structure_violation = 0.0;
};

/// Loads a .json block file or a full-network .sNp file (port order [T, S, R]).
/// Touchstone input needs `topo` to partition the ports.
IngestedBlockSet ingest_block_file(const std::filesystem::path& path,
                                   const std::optional<SimTopology>& topo = std::nullopt);

}  // namespace simcascade
