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


#include "simcascade/coupling.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

namespace simcascade {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string("geometry: ") + name + " must be positive");
}

double centered(int index, int count, double spacing) {
    return (static_cast<double>(index) - 0.5 * static_cast<double>(count + 1)) * spacing;
}

Positions linear_array(double x, int count, double spacing) {
    Positions p(3, count);
    for (int i = 0; i < count; ++i) p.col(i) << x, centered(i + 1, count, spacing), 0.0;
    return p;
}

}  // namespace

void ScenarioGeometry::validate() const {
    require_positive(wavelength_m, "wavelength_m");
    require_positive(layer_spacing_m, "layer_spacing_m");
    require_positive(element_spacing_y_m, "element_spacing_y_m");
    require_positive(element_spacing_z_m, "element_spacing_z_m");
    require_positive(tx_distance_m, "tx_distance_m");
    require_positive(rx_distance_m, "rx_distance_m");
    require_positive(tx_spacing_m, "tx_spacing_m");
    require_positive(rx_spacing_m, "rx_spacing_m");
    if (elements_y < 1 || elements_z < 1) throw ArgumentError("geometry: each layer needs at least one element per axis");
    if (tx_count < 1 || rx_count < 1) throw ArgumentError("geometry: tx_count and rx_count must be positive");
}

ScenarioGeometry reference_geometry(double frequency_hz) {
    require_positive(frequency_hz, "frequency_hz");
    const double lambda = kSpeedOfLight / frequency_hz;
    ScenarioGeometry g;
    g.wavelength_m = lambda;
    g.layer_spacing_m = 1.5 * lambda;
    g.element_spacing_y_m = 0.5 * lambda;
    g.element_spacing_z_m = 0.75 * lambda;
    g.tx_distance_m = 10.0 * lambda;
    g.rx_distance_m = 5.0 * lambda;
    g.tx_spacing_m = lambda;
    g.rx_spacing_m = lambda;
    return g;
}

std::complex<double> free_space_coefficient(double distance_m, double wavelength_m) {
    if (!(distance_m > 0.0) || !std::isfinite(distance_m))
        throw ArgumentError("free-space coupling: distance must be positive (coincident elements are unsupported)");
    if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m))
        throw ArgumentError("free-space coupling: wavelength must be positive");
    const double amplitude = wavelength_m / (4.0 * std::numbers::pi * distance_m);
    return std::polar(amplitude, -2.0 * std::numbers::pi * distance_m / wavelength_m);
}

// Cell k of a layer (0-based) sits at column k; y runs fastest.
Positions layer_positions(const ScenarioGeometry& geom, int layer) {
    const int ny = geom.elements_y, nz = geom.elements_z;
    Positions p(3, ny * nz);
    const double x = layer * geom.layer_spacing_m;
    for (int iz = 1; iz <= nz; ++iz)
        for (int iy = 1; iy <= ny; ++iy)
            p.col((iz - 1) * ny + (iy - 1)) << x, centered(iy, ny, geom.element_spacing_y_m),
                centered(iz, nz, geom.element_spacing_z_m);
    return p;
}

Positions tx_positions(const ScenarioGeometry& geom) {
    return linear_array(geom.layer_spacing_m - geom.tx_distance_m, geom.tx_count, geom.tx_spacing_m);
}

Positions rx_positions(const ScenarioGeometry& geom, int layers) {
    return linear_array(layers * geom.layer_spacing_m + geom.rx_distance_m, geom.rx_count, geom.rx_spacing_m);
}

CMatrix<double> coupling_block(const Positions& from, const Positions& to, double wavelength_m,
                               bool broadside_pattern) {
    CMatrix<double> block(to.cols(), from.cols());
    for (Eigen::Index j = 0; j < from.cols(); ++j)
        for (Eigen::Index i = 0; i < to.cols(); ++i) {
            const Eigen::Vector3d delta = to.col(i) - from.col(j);
            const double d = delta.norm();
            auto c = free_space_coefficient(d, wavelength_m);
            if (broadside_pattern) c *= std::abs(delta.x()) / d;
            block(i, j) = c;
        }
    return block;
}

ScatteringBlocksd build_scenario(const ScenarioGeometry& geom, const SimTopology& topo) {
    geom.validate();
    topo.validate();
    if (geom.cells() != topo.cells)
        throw ArgumentError("scenario: topology has K = " + std::to_string(topo.cells) + " but the geometry has " +
                            std::to_string(geom.cells()) + " elements per layer");
    if (geom.tx_count != topo.tx_ports || geom.rx_count != topo.rx_ports)
        throw ArgumentError("scenario: transmitter/receiver element counts disagree with the topology");

    auto blocks = ScatteringBlocksd::zeros(topo);
    const double lambda = geom.wavelength_m;
    const bool pattern = geom.broadside_pattern;
    Positions previous = layer_positions(geom, 1);
    blocks.h_ts = coupling_block(tx_positions(geom), previous, lambda, pattern);
    for (int q = 2; q <= topo.layers; ++q) {
        Positions current = layer_positions(geom, q);
        blocks.inter_layer[static_cast<std::size_t>(q - 2)] = coupling_block(previous, current, lambda, pattern);
        previous = std::move(current);
    }
    blocks.h_sr = coupling_block(previous, rx_positions(geom, topo.layers), lambda, pattern);
    return blocks;
}

// ---------------------------------------------------------------- Touchstone

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double to_number(const std::string& tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) throw ParseError("non-numeric token '" + tok + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + tok + "'", line);
    return v;
}

std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double frequency_scale(const std::string& unit) {
    if (unit == "HZ") return 1.0;
    if (unit == "KHZ") return 1e3;
    if (unit == "MHZ") return 1e6;
    if (unit == "GHZ") return 1e9;
    return 0.0;
}

}  // namespace

TouchstoneData parse_touchstone(std::istream& in, std::optional<int> ports) {
    TouchstoneData out;
    std::optional<double> scale;
    std::vector<double> values;
    std::size_t records = 0;
    std::size_t line_no = 0;
    std::size_t last_line = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto bang = line.find('!'); bang != std::string::npos) line.erase(bang);
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        last_line = line_no;
        if (tokens.front().front() == '#') {
            if (scale) throw ParseError("malformed option line: more than one option line", line_no);
            if (tokens.front() == "#") tokens.erase(tokens.begin());
            else tokens.front().erase(0, 1);
            for (auto& t : tokens) t = upper(t);
            if (tokens.size() != 5 || frequency_scale(tokens[0]) == 0.0 || tokens[1] != "S" || tokens[2] != "RI" ||
                tokens[3] != "R")
                throw ParseError("malformed option line: expected '# <HZ|KHZ|MHZ|GHZ> S RI R <Z0>'", line_no);
            scale = frequency_scale(tokens[0]);
            out.reference_impedance_ohm = to_number(tokens[4], line_no);
            if (!(out.reference_impedance_ohm > 0.0))
                throw ParseError("malformed option line: reference impedance must be positive", line_no);
            continue;
        }
        if (!scale) throw ParseError("data before the option line", line_no);
        // A frequency record opens with an odd token count (frequency + pairs);
        // continuation lines carry whole real/imaginary pairs.
        if (tokens.size() % 2 == 1) {
            if (++records > 1) throw ParseError("multiple frequency points", line_no);
        } else if (records == 0) {
            throw ParseError("inconsistent entry count: record does not start with a frequency", line_no);
        }
        for (const auto& t : tokens) values.push_back(to_number(t, line_no));
    }
    if (!scale) throw ParseError("malformed option line: missing", line_no);
    if (records == 0) throw ParseError("no data record", line_no);

    const std::size_t pairs = (values.size() - 1) / 2;
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(pairs))));
    if (n < 1 || static_cast<std::size_t>(n * n) != pairs)
        throw ParseError("inconsistent entry count: " + std::to_string(values.size()) +
                             " fields is not 1 + 2n^2 for any port count n",
                         last_line);
    if (ports && *ports != n)
        throw ParseError("inconsistent entry count: expected " + std::to_string(*ports) + " ports, found " +
                             std::to_string(n),
                         last_line);

    out.frequency_hz = values[0] * *scale;
    out.s.resize(n, n);
    for (Eigen::Index idx = 0; idx < n * n; ++idx) {
        // Two-port files list S11 S21 S12 S22; larger files are row-major.
        const Eigen::Index row = n == 2 ? idx % 2 : idx / n;
        const Eigen::Index col = n == 2 ? idx / 2 : idx % n;
        const auto base = static_cast<std::size_t>(1 + 2 * idx);
        out.s(row, col) = {values[base], values[base + 1]};
    }
    return out;
}

TouchstoneData parse_touchstone(std::string_view text, std::optional<int> ports) {
    std::istringstream in{std::string(text)};
    return parse_touchstone(in, ports);
}

std::string write_touchstone(const TouchstoneData& data) {
    const Eigen::Index n = data.s.rows();
    if (n < 1 || data.s.cols() != n) throw ArgumentError("touchstone: S matrix must be square and non-empty");
    if (!detail::all_finite(data.s)) throw ArgumentError("touchstone: S matrix has non-finite entries");
    if (!(data.frequency_hz >= 0.0) || !std::isfinite(data.frequency_hz))
        throw ArgumentError("touchstone: frequency must be finite and non-negative");
    if (!(data.reference_impedance_ohm > 0.0)) throw ArgumentError("touchstone: reference impedance must be positive");

    std::string out = "! " + std::to_string(n) + "-port S-parameters, one frequency point\n";
    out += "# HZ S RI R " + shortest(data.reference_impedance_ohm) + "\n";
    auto pair = [&](Eigen::Index r, Eigen::Index c) {
        return " " + shortest(data.s(r, c).real()) + " " + shortest(data.s(r, c).imag());
    };
    if (n <= 2) {
        out += shortest(data.frequency_hz);
        if (n == 1) out += pair(0, 0);
        else out += pair(0, 0) + pair(1, 0) + pair(0, 1) + pair(1, 1);
        out += "\n";
        return out;
    }
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; c += 4) {
            out += (r == 0 && c == 0) ? shortest(data.frequency_hz) : std::string();
            for (Eigen::Index k = c; k < std::min(c + 4, n); ++k) out += pair(r, k);
            out += "\n";
        }
    return out;
}

UnitCellResponse characterize_unit_cell(const CMatrix<double>& s, double tolerance) {
    if (s.rows() != 2 || s.cols() != 2) throw ArgumentError("unit cell: expected a 2x2 scattering matrix");
    const double through = std::abs(s(1, 0));
    const double limit = tolerance * std::max(1.0, through);
    if (std::abs(s(0, 0)) > limit || std::abs(s(0, 1)) > limit || std::abs(s(1, 1)) > limit)
        throw ArgumentError("unit cell: not a matched unilateral two-port");
    return {through, std::arg(s(1, 0))};
}

// ----------------------------------------------------------------- JSON blocks

namespace {

using nlohmann::json;

CMatrix<double> matrix_from_json(const json& j, const std::string& field, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array()) throw SchemaError(field, "expected an array of rows");
    if (static_cast<Eigen::Index>(j.size()) != rows)
        throw SchemaError(field, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
    CMatrix<double> m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw SchemaError(field, "row " + std::to_string(r) + " must hold " + std::to_string(cols) + " entries");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw SchemaError(field, "entry (" + std::to_string(r) + "," + std::to_string(c) +
                                             ") must be a [re, im] pair");
            m(r, c) = {e[0].get<double>(), e[1].get<double>()};
        }
    }
    if (!detail::all_finite(m)) throw SchemaError(field, "non-finite entry");
    return m;
}

json matrix_to_json(const CMatrix<double>& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

int positive_int(const json& obj, const char* key) {
    const std::string field = std::string("topology.") + key;
    if (!obj.contains(key)) throw SchemaError(field, "missing");
    const auto& v = obj[key];
    if (!v.is_number_integer() || v.get<long long>() < 1) throw SchemaError(field, "must be a positive integer");
    return static_cast<int>(v.get<long long>());
}

std::size_t line_of(std::string_view text, std::size_t byte) {
    const auto end = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

}  // namespace

BlockFile load_blocks_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), line_of(text, e.byte));
    } catch (const json::exception& e) {
        // e.g. a numeric literal outside the double range; no position is reported
        throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
    }
    if (!doc.is_object()) throw SchemaError("$", "top level must be an object");
    if (!doc.contains("topology") || !doc["topology"].is_object()) throw SchemaError("topology", "missing");
    const auto& t = doc["topology"];
    SimTopology topo{positive_int(t, "Q"), positive_int(t, "K"), positive_int(t, "L"), positive_int(t, "M")};

    BlockFile file;
    if (!doc.contains("wavelength_m") || !doc["wavelength_m"].is_number() || !(doc["wavelength_m"].get<double>() > 0.0))
        throw SchemaError("wavelength_m", "missing or not a positive number");
    file.wavelength_m = doc["wavelength_m"].get<double>();

    const Eigen::Index K = topo.cells, L = topo.tx_ports, M = topo.rx_ports;
    auto& b = file.blocks;
    b = ScatteringBlocksd::zeros(topo);
    for (const char* key : {"h_ts", "h_sr", "inter_layer"})
        if (!doc.contains(key)) throw SchemaError(key, "missing mandatory block");
    b.h_ts = matrix_from_json(doc["h_ts"], "h_ts", K, L);
    b.h_sr = matrix_from_json(doc["h_sr"], "h_sr", M, K);
    if (doc.contains("s_rt")) b.s_rt = matrix_from_json(doc["s_rt"], "s_rt", M, L);

    const auto& inter = doc["inter_layer"];
    if (!inter.is_array() || inter.size() != static_cast<std::size_t>(topo.layers - 1))
        throw SchemaError("inter_layer", "expected an array of Q-1 = " + std::to_string(topo.layers - 1) + " matrices");
    for (std::size_t q = 0; q < inter.size(); ++q)
        b.inter_layer[q] = matrix_from_json(inter[q], "inter_layer[" + std::to_string(q) + "]", K, K);

    if (doc.contains("reflections") && !doc["reflections"].is_null()) {
        const auto& refl = doc["reflections"];
        if (!refl.is_array() || refl.size() != static_cast<std::size_t>(topo.layers + 1))
            throw SchemaError("reflections", "expected an array of Q+1 = " + std::to_string(topo.layers + 1) + " regions");
        b.reflections.resize(refl.size());
        for (std::size_t u = 0; u < refl.size(); ++u) {
            const std::string base = "reflections[" + std::to_string(u) + "]";
            if (!refl[u].is_object()) throw SchemaError(base, "must be an object");
            auto& r = b.reflections[u];
            for (auto [dst, key] : {std::pair{&r.s11, "s11"}, std::pair{&r.s22, "s22"}, std::pair{&r.s12, "s12"}})
                if (refl[u].contains(key)) *dst = matrix_from_json(refl[u][key], base + "." + key, K, K);
        }
    }
    try {
        b.validate();
    } catch (const ArgumentError& e) {
        throw SchemaError("reflections", e.what());
    }
    return file;
}

std::string save_blocks_json(const ScatteringBlocksd& blocks, double wavelength_m) {
    blocks.validate();
    const auto& topo = blocks.topology;
    json doc;
    doc["topology"] = {{"Q", topo.layers}, {"K", topo.cells}, {"L", topo.tx_ports}, {"M", topo.rx_ports}};
    doc["wavelength_m"] = wavelength_m;
    doc["h_ts"] = matrix_to_json(blocks.h_ts);
    doc["h_sr"] = matrix_to_json(blocks.h_sr);
    doc["s_rt"] = matrix_to_json(blocks.s_rt);
    json inter = json::array();
    for (const auto& m : blocks.inter_layer) inter.push_back(matrix_to_json(m));
    doc["inter_layer"] = std::move(inter);
    if (blocks.has_reflections()) {
        json refl = json::array();
        for (const auto& r : blocks.reflections) {
            json region = json::object();
            if (r.s11.size() != 0) region["s11"] = matrix_to_json(r.s11);
            if (r.s22.size() != 0) region["s22"] = matrix_to_json(r.s22);
            if (r.s12.size() != 0) region["s12"] = matrix_to_json(r.s12);
            refl.push_back(std::move(region));
        }
        doc["reflections"] = std::move(refl);
    }
    return doc.dump(1);
}

// ------------------------------------------------------------------ ingestion

IngestedBlockSet ingest_block_file(const std::filesystem::path& path, const std::optional<SimTopology>& topo) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("block_file", "cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    IngestedBlockSet set;
    set.source = path;
    const std::string ext = upper(path.extension().string());
    static const std::regex touchstone_ext(R"(\.S([0-9]+)P)");
    std::smatch match;
    if (ext == ".JSON") {
        auto file = load_blocks_json(text);
        if (topo && !(*topo == file.blocks.topology))
            throw SchemaError("topology", "block file topology disagrees with the configuration");
        set.format = BlockFormat::json;
        set.frequency_hz = kSpeedOfLight / file.wavelength_m;
        set.global = assemble_global(file.blocks);
        set.blocks = std::move(file.blocks);
        return set;
    }
    if (std::regex_match(ext, match, touchstone_ext)) {
        if (!topo) throw SchemaError("topology", "required to partition a Touchstone network");
        auto data = parse_touchstone(text, std::stoi(match[1].str()));
        set.format = BlockFormat::touchstone;
        set.frequency_hz = data.frequency_hz;
        set.reference_impedance_ohm = data.reference_impedance_ohm;
        try {
            set.global = partition_global(data.s, *topo);
        } catch (const ArgumentError& e) {
            throw SchemaError("block_file", e.what());
        }
        set.structure_violation = layered_structure_violation(set.global);
        if (set.structure_violation == 0.0) set.blocks = extract_blocks(set.global);
        return set;
    }
    throw SchemaError("block_file", "unsupported extension '" + path.extension().string() + "' (use .json or .sNp)");
}

}  // namespace simcascade
