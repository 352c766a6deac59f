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


#include "simcascade/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace simcascade {

namespace {

using nlohmann::json;

std::string join(const std::string& parent, const std::string& key) { return parent.empty() ? key : parent + "." + key; }

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) throw SchemaError(join(path, item.key()), "unknown field");
}

const json& object_at(const json& parent, const std::string& key, const std::string& path) {
    const auto& v = parent[key];
    if (!v.is_object()) throw SchemaError(join(path, key), "must be an object");
    return v;
}

double number(const json& v, const std::string& field) {
    if (!v.is_number()) throw SchemaError(field, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw SchemaError(field, "must be finite");
    return x;
}

double positive(const json& v, const std::string& field) {
    const double x = number(v, field);
    if (!(x > 0.0)) throw SchemaError(field, "must be positive");
    return x;
}

int positive_integer(const json& v, const std::string& field) {
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000)
        throw SchemaError(field, "must be a positive integer");
    return static_cast<int>(v.get<long long>());
}

bool boolean(const json& v, const std::string& field) {
    if (!v.is_boolean()) throw SchemaError(field, "must be true or false");
    return v.get<bool>();
}

// Reads `<name>_m` or `<name>_lambda`, but not both.
void read_length(const json& obj, const std::string& path, const std::string& name, double wavelength, double& out) {
    const std::string m = name + "_m", l = name + "_lambda";
    if (obj.contains(m) && obj.contains(l)) throw SchemaError(join(path, name), "give either _m or _lambda, not both");
    if (obj.contains(m)) out = positive(obj[m], join(path, m));
    if (obj.contains(l)) out = positive(obj[l], join(path, l)) * wavelength;
}

ScenarioGeometry read_geometry(const json& g) {
    const std::string path = "geometry";
    reject_unknown(g, path,
                   {"frequency_hz", "elements_y", "elements_z", "tx_count", "rx_count", "broadside_pattern",
                    "layer_spacing_m", "layer_spacing_lambda", "element_spacing_y_m", "element_spacing_y_lambda",
                    "element_spacing_z_m", "element_spacing_z_lambda", "tx_distance_m", "tx_distance_lambda",
                    "rx_distance_m", "rx_distance_lambda", "tx_spacing_m", "tx_spacing_lambda", "rx_spacing_m",
                    "rx_spacing_lambda"});
    const double f = g.contains("frequency_hz") ? positive(g["frequency_hz"], "geometry.frequency_hz") : 28e9;
    ScenarioGeometry geom = reference_geometry(f);
    const double lambda = geom.wavelength_m;
    read_length(g, path, "layer_spacing", lambda, geom.layer_spacing_m);
    read_length(g, path, "element_spacing_y", lambda, geom.element_spacing_y_m);
    read_length(g, path, "element_spacing_z", lambda, geom.element_spacing_z_m);
    read_length(g, path, "tx_distance", lambda, geom.tx_distance_m);
    read_length(g, path, "rx_distance", lambda, geom.rx_distance_m);
    read_length(g, path, "tx_spacing", lambda, geom.tx_spacing_m);
    read_length(g, path, "rx_spacing", lambda, geom.rx_spacing_m);
    if (g.contains("elements_y")) geom.elements_y = positive_integer(g["elements_y"], "geometry.elements_y");
    if (g.contains("elements_z")) geom.elements_z = positive_integer(g["elements_z"], "geometry.elements_z");
    if (g.contains("tx_count")) geom.tx_count = positive_integer(g["tx_count"], "geometry.tx_count");
    if (g.contains("rx_count")) geom.rx_count = positive_integer(g["rx_count"], "geometry.rx_count");
    if (g.contains("broadside_pattern")) geom.broadside_pattern = boolean(g["broadside_pattern"], "geometry.broadside_pattern");
    return geom;
}

OptimizerConfig read_optimizer(const json& o) {
    const std::string path = "optimizer";
    reject_unknown(o, path,
                   {"max_iterations", "initial_step", "backtrack_factor", "min_step", "gradient_tolerance",
                    "diagonality_stop_db", "max_backtracks"});
    OptimizerConfig c;
    if (o.contains("max_iterations")) {
        if (!o["max_iterations"].is_number_integer() || o["max_iterations"].get<long long>() < 0)
            throw SchemaError("optimizer.max_iterations", "must be a non-negative integer");
        c.max_iterations = static_cast<int>(o["max_iterations"].get<long long>());
    }
    if (o.contains("initial_step")) c.initial_step = positive(o["initial_step"], "optimizer.initial_step");
    if (o.contains("backtrack_factor")) c.backtrack_factor = number(o["backtrack_factor"], "optimizer.backtrack_factor");
    if (o.contains("min_step")) c.min_step = positive(o["min_step"], "optimizer.min_step");
    if (o.contains("gradient_tolerance"))
        c.gradient_tolerance = number(o["gradient_tolerance"], "optimizer.gradient_tolerance");
    if (o.contains("diagonality_stop_db"))
        c.diagonality_stop_db = number(o["diagonality_stop_db"], "optimizer.diagonality_stop_db");
    if (o.contains("max_backtracks")) c.max_backtracks = positive_integer(o["max_backtracks"], "optimizer.max_backtracks");
    try {
        c.validate();
    } catch (const ArgumentError& e) {
        throw SchemaError("optimizer", e.what());
    }
    return c;
}

LinkBudget read_budget(const json& b) {
    reject_unknown(b, "budget", {"per_antenna_tx_power_w", "noise_figure_db", "temperature_k", "bandwidth_hz"});
    LinkBudget budget;
    if (b.contains("per_antenna_tx_power_w"))
        budget.per_antenna_tx_power_w = positive(b["per_antenna_tx_power_w"], "budget.per_antenna_tx_power_w");
    if (b.contains("noise_figure_db")) {
        const double db = number(b["noise_figure_db"], "budget.noise_figure_db");
        if (db < 0.0) throw SchemaError("budget.noise_figure_db", "must be at least 0 dB");
        budget.noise_figure = db_to_power_ratio(db);
    }
    if (b.contains("temperature_k")) budget.temperature_k = positive(b["temperature_k"], "budget.temperature_k");
    if (b.contains("bandwidth_hz")) budget.bandwidth_hz = positive(b["bandwidth_hz"], "budget.bandwidth_hz");
    return budget;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_file(const std::filesystem::path& path, const std::string& field) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(field, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CMatrix<double> any_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
        throw SchemaError(field, "expected a non-empty array of rows of [re, im] pairs");
    const auto rows = static_cast<Eigen::Index>(j.size()), cols = static_cast<Eigen::Index>(j[0].size());
    CMatrix<double> m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw SchemaError(field, "rows must all hold " + std::to_string(cols) + " entries");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw SchemaError(field, "entries must be [re, im] pairs");
            m(r, c) = {e[0].get<double>(), e[1].get<double>()};
        }
    }
    if (!detail::all_finite(m)) throw SchemaError(field, "non-finite entry");
    return m;
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto end = std::min<std::size_t>(e.byte, text.size());
        throw ParseError(std::string("invalid JSON: ") + e.what(),
                         1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n')));
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
    }
}

}  // namespace

double ScenarioConfig::gain_amplitude() const {
    return gain_db_is_amplitude ? db_to_power_ratio(gain_db) : db_to_amplitude_ratio(gain_db);
}

ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    const json doc = parse_json(text);
    if (!doc.is_object()) throw SchemaError("$", "top level must be an object");
    reject_unknown(doc, "",
                   {"topology", "geometry", "block_file", "gain_db_power", "gain_db_is_amplitude", "training",
                    "optimizer", "budget", "bandwidth_grid_hz", "seed"});

    ScenarioConfig c;
    if (doc.contains("geometry") == doc.contains("block_file"))
        throw SchemaError("geometry", "exactly one of geometry and block_file must be given");
    if (doc.contains("geometry")) c.geometry = read_geometry(object_at(doc, "geometry", ""));
    if (doc.contains("block_file")) {
        if (!doc["block_file"].is_string()) throw SchemaError("block_file", "must be a path string");
        c.block_file = resolve(base_dir, doc["block_file"].get<std::string>());
    }

    // Topology: Q is always needed; K, L, M follow from the geometry or the
    // block file and, when also given here, must agree.
    if (!doc.contains("topology")) throw SchemaError("topology", "missing");
    const json& t = object_at(doc, "topology", "");
    reject_unknown(t, "topology", {"Q", "K", "L", "M"});
    if (!t.contains("Q")) throw SchemaError("topology.Q", "missing");
    c.topology.layers = positive_integer(t["Q"], "topology.Q");
    auto explicit_dim = [&](const char* key) -> std::optional<int> {
        if (!t.contains(key)) return std::nullopt;
        return positive_integer(t[key], std::string("topology.") + key);
    };
    const auto k = explicit_dim("K"), l = explicit_dim("L"), m = explicit_dim("M");
    if (c.geometry) {
        c.topology.cells = c.geometry->cells();
        c.topology.tx_ports = c.geometry->tx_count;
        c.topology.rx_ports = c.geometry->rx_count;
        if (k && *k != c.topology.cells) throw SchemaError("topology.K", "must equal elements_y * elements_z");
        if (l && *l != c.topology.tx_ports) throw SchemaError("topology.L", "must equal geometry.tx_count");
        if (m && *m != c.topology.rx_ports) throw SchemaError("topology.M", "must equal geometry.rx_count");
        try {
            c.geometry->validate();
        } catch (const ArgumentError& e) {
            throw SchemaError("geometry", e.what());
        }
    } else {
        c.topology.cells = k.value_or(0);
        c.topology.tx_ports = l.value_or(0);
        c.topology.rx_ports = m.value_or(0);
    }

    if (doc.contains("gain_db_power")) c.gain_db = number(doc["gain_db_power"], "gain_db_power");
    if (doc.contains("gain_db_is_amplitude"))
        c.gain_db_is_amplitude = boolean(doc["gain_db_is_amplitude"], "gain_db_is_amplitude");

    if (doc.contains("training")) {
        const auto& tr = doc["training"];
        if (tr.is_string()) {
            if (tr.get<std::string>() != "diagonal") throw SchemaError("training", "string form must be \"diagonal\"");
        } else if (tr.is_object()) {
            reject_unknown(tr, "training", {"kind", "file"});
            const std::string kind = tr.contains("kind") && tr["kind"].is_string() ? tr["kind"].get<std::string>() : "";
            if (kind == "custom") {
                if (!tr.contains("file") || !tr["file"].is_string()) throw SchemaError("training.file", "missing");
                c.training_file = resolve(base_dir, tr["file"].get<std::string>());
            } else if (kind != "diagonal") {
                throw SchemaError("training.kind", "must be \"diagonal\" or \"custom\"");
            }
        } else {
            throw SchemaError("training", "must be \"diagonal\" or an object");
        }
    }

    if (doc.contains("optimizer")) c.optimizer = read_optimizer(object_at(doc, "optimizer", ""));
    if (doc.contains("budget")) c.budget = read_budget(object_at(doc, "budget", ""));
    if (doc.contains("bandwidth_grid_hz")) {
        const auto& grid = doc["bandwidth_grid_hz"];
        if (!grid.is_array() || grid.empty()) throw SchemaError("bandwidth_grid_hz", "must be a non-empty array");
        c.bandwidth_grid_hz.clear();
        for (std::size_t i = 0; i < grid.size(); ++i)
            c.bandwidth_grid_hz.push_back(positive(grid[i], "bandwidth_grid_hz[" + std::to_string(i) + "]"));
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
            throw SchemaError("seed", "must be a non-negative integer");
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path, "config"), path.parent_path());
}

TrainingSet load_training_json(std::string_view text) {
    const json doc = parse_json(text);
    if (!doc.is_object()) throw SchemaError("$", "top level must be an object");
    reject_unknown(doc, "", {"excitations", "target"});
    for (const char* key : {"excitations", "target"})
        if (!doc.contains(key)) throw SchemaError(key, "missing");
    return {any_matrix(doc["excitations"], "excitations"), any_matrix(doc["target"], "target")};
}

Scenario make_scenario(const ScenarioConfig& config) {
    Scenario s;
    s.config = config;
    if (config.geometry) {
        s.blocks = build_scenario(*config.geometry, config.topology);
        s.global = assemble_global(*s.blocks);
    } else {
        const auto& path = *config.block_file;
        if (!std::filesystem::exists(path)) throw SchemaError("block_file", "no such file: " + path.string());
        const SimTopology& t = config.topology;
        std::optional<SimTopology> topo;
        if (t.cells > 0 && t.tx_ports > 0 && t.rx_ports > 0) topo = t;
        auto ingested = ingest_block_file(path, topo);
        const SimTopology& found = ingested.blocks ? ingested.blocks->topology : *topo;
        if (found.layers != t.layers) throw SchemaError("topology.Q", "does not match the block file");
        for (auto [mine, theirs, key] : {std::tuple{t.cells, found.cells, "topology.K"},
                                         std::tuple{t.tx_ports, found.tx_ports, "topology.L"},
                                         std::tuple{t.rx_ports, found.rx_ports, "topology.M"}})
            if (mine > 0 && mine != theirs) throw SchemaError(key, "does not match the block file");
        s.config.topology = found;
        s.blocks = std::move(ingested.blocks);
        s.global = std::move(ingested.global);
    }

    const SimTopology& topo = s.config.topology;
    if (config.training_file) {
        s.training = load_training_json(read_file(*config.training_file, "training.file"));
        try {
            s.training.validate(topo);
        } catch (const ArgumentError& e) {
            throw SchemaError("training.file", e.what());
        }
    } else {
        if (topo.tx_ports != topo.rx_ports) throw SchemaError("training", "diagonal target needs L = M");
        s.training = TrainingSet::diagonalization(topo);
    }
    return s;
}

}  // namespace simcascade
