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


#include "simcascade/commands.hpp"

#include "simcascade/cascade.hpp"
#include "simcascade/network.hpp"

#include "json.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <new>
#include <numbers>
#include <random>
#include <thread>

namespace simcascade::cli {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string shortest(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed3(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + "\"";
}

const ScatteringBlocksd& layered_blocks(const Scenario& s) {
    if (!s.blocks)
        throw SchemaError("block_file", "the network has coupling outside the layered pattern; "
                                        "optimization needs the layered structure");
    return *s.blocks;
}

std::optional<double> channel_diagonality(const CMatrix<double>& h) {
    if (h.rows() != h.cols() || h.isZero(0.0)) return std::nullopt;
    return diagonality_db(h);
}

}  // namespace

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const SchemaError& e) {
        err << "error: " << e.field() << ": " << e.what() << "\n";
        return usage_error;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const OptimizationAborted& e) {
        err << "numerical error: " << e.what() << " (after " << e.partial().iterations_used << " iterations)\n";
        return runtime_error;
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return runtime_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return runtime_error;
    }
}

PointResult run_point(const Scenario& scenario) {
    const auto& blocks = layered_blocks(scenario);
    const auto& cfg = scenario.config;
    PointResult p;
    const auto start = Clock::now();
    p.run = optimize(blocks, scenario.training, cfg.optimizer,
                     random_controls(cfg.topology, cfg.gain_amplitude(), cfg.seed));
    p.wall_ms = elapsed_ms(start);
    p.channel = output_matrix(blocks, p.run.final_phases,
                              CMatrix<double>(CMatrix<double>::Identity(cfg.topology.tx_ports, cfg.topology.tx_ports)));
    p.diagonality_db = channel_diagonality(p.channel);
    return p;
}

// ------------------------------------------------------------------ optimize

int cmd_optimize(const ScenarioConfig& config, std::ostream& out) {
    const Scenario scenario = make_scenario(config);
    const PointResult p = run_point(scenario);
    const auto& topo = scenario.config.topology;
    const bool paired = p.channel.rows() == p.channel.cols();

    nlohmann::ordered_json report;
    report["topology"] = {{"Q", topo.layers}, {"K", topo.cells}, {"L", topo.tx_ports}, {"M", topo.rx_ports}};
    report["seed"] = config.seed;
    report["gain_db"] = config.gain_db;
    report["gain_amplitude"] = config.gain_amplitude();
    report["bandwidth_hz"] = config.budget.bandwidth_hz;
    report["termination"] = to_string(p.run.termination);
    report["iterations"] = p.run.iterations_used;
    report["wall_ms"] = p.wall_ms;
    report["final_loss"] = p.run.loss_trace.back();
    report["diagonality_db"] = p.diagonality_db ? nlohmann::ordered_json(*p.diagonality_db) : nullptr;
    if (paired) {
        report["sum_se_bits_per_hz"] = sum_spectral_efficiency(p.channel, config.budget);
        report["logdet_capacity_bits_per_hz"] = logdet_capacity(p.channel, config.budget);
    } else {
        report["sum_se_bits_per_hz"] = nullptr;
        report["logdet_capacity_bits_per_hz"] = nullptr;
    }
    report["beta"] = {p.run.beta.real(), p.run.beta.imag()};
    report["loss_trace"] = p.run.loss_trace;
    report["diagonality_trace"] = p.run.diagonality_trace;
    report["final_phases"] = std::vector<double>(p.run.final_phases.phases.begin(), p.run.final_phases.phases.end());
    out << report.dump(2) << "\n";
    return success;
}

// --------------------------------------------------------------------- sweep

SweepAxis parse_axis(const std::string& name) {
    if (name == "bandwidth") return SweepAxis::bandwidth;
    if (name == "gain") return SweepAxis::gain;
    if (name == "spacing") return SweepAxis::spacing;
    throw ArgumentError("unknown sweep axis '" + name + "' (expected bandwidth, gain or spacing)");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::bandwidth: return "bandwidth";
        case SweepAxis::gain: return "gain";
        case SweepAxis::spacing: return "spacing";
    }
    return "unknown";
}

namespace {

struct SweepRow {
    double value = 0.0;
    double gain_db = 0.0;
    std::optional<double> spacing_lambda;
    double bandwidth_hz = 0.0;
    std::optional<double> sum_se;
    std::optional<double> diagonality_db;
    int iterations = 0;
    double wall_ms = 0.0;
    std::string status = "ok";
};

std::optional<double> spacing_of(const ScenarioConfig& c) {
    if (!c.geometry) return std::nullopt;
    return c.geometry->layer_spacing_m / c.geometry->wavelength_m;
}

// Runs work(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& work) {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) work(i);
        });
}

std::string error_status(const std::exception& e) {
    if (const auto* s = dynamic_cast<const SchemaError*>(&e)) return std::string("error: ") + s->field() + ": " + e.what();
    return std::string("error: ") + e.what();
}

}  // namespace

int cmd_sweep(const ScenarioConfig& config, const SweepRequest& request, std::ostream& out) {
    if (config.topology.tx_ports != config.topology.rx_ports && config.geometry)
        throw SchemaError("topology", "sweeps score paired streams and need L = M");
    if (request.axis == SweepAxis::spacing && !config.geometry)
        throw SchemaError("geometry", "a spacing sweep needs a surrogate geometry, not a block file");

    std::vector<double> values = request.values;
    if (values.empty()) {
        switch (request.axis) {
            case SweepAxis::bandwidth: values = config.bandwidth_grid_hz; break;
            case SweepAxis::gain: values = {0.0, 3.0, 6.0}; break;
            case SweepAxis::spacing: values = {1.5, 2.5, 4.0}; break;
        }
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw ArgumentError("sweep values must be finite");
        if (request.axis != SweepAxis::gain && !(v > 0.0)) throw ArgumentError("sweep values must be positive");
    }
    make_scenario(config);  // surfaces configuration errors before any work starts

    std::vector<SweepRow> rows(values.size());
    auto fill_metrics = [](SweepRow& row, const PointResult& p, const LinkBudget& budget) {
        row.diagonality_db = p.diagonality_db;
        if (p.channel.rows() == p.channel.cols()) row.sum_se = sum_spectral_efficiency(p.channel, budget);
        row.iterations = p.run.iterations_used;
        row.wall_ms = p.wall_ms;
    };

    if (request.axis == SweepAxis::bandwidth) {
        // The channel does not depend on the noise, so one optimization serves every point.
        std::optional<PointResult> shared;
        std::string failure;
        try {
            shared = run_point(make_scenario(config));
        } catch (const std::exception& e) {
            failure = error_status(e);
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            auto& row = rows[i];
            row.value = row.bandwidth_hz = values[i];
            row.gain_db = config.gain_db;
            row.spacing_lambda = spacing_of(config);
            if (!shared) {
                row.status = failure;
                continue;
            }
            LinkBudget budget = config.budget;
            budget.bandwidth_hz = values[i];
            fill_metrics(row, *shared, budget);
        }
    } else {
        parallel_for(values.size(), request.jobs, [&](std::size_t i) {
            ScenarioConfig c = config;
            auto& row = rows[i];
            row.value = values[i];
            if (request.axis == SweepAxis::gain) c.gain_db = values[i];
            if (request.axis == SweepAxis::spacing) c.geometry->layer_spacing_m = values[i] * c.geometry->wavelength_m;
            row.gain_db = c.gain_db;
            row.spacing_lambda = request.axis == SweepAxis::spacing ? std::optional(values[i]) : spacing_of(c);
            row.bandwidth_hz = c.budget.bandwidth_hz;
            try {
                fill_metrics(row, run_point(make_scenario(c)), c.budget);
            } catch (const std::exception& e) {
                row.status = error_status(e);
            }
        });
    }

    const bool any_failed = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != "ok"; });
    const std::string axis = to_string(request.axis);
    const auto& topo = config.topology;
    out << kSweepHeader << (any_failed ? ",status" : "") << "\n";
    for (const auto& r : rows) {
        const bool ok = r.status == "ok";
        out << axis << ',' << shortest(r.value) << ',' << topo.cells << ',' << topo.layers << ',' << shortest(r.gain_db)
            << ',' << (r.spacing_lambda ? shortest(*r.spacing_lambda) : "") << ',' << shortest(r.bandwidth_hz) << ','
            << (r.sum_se ? shortest(*r.sum_se) : "") << ',' << (r.diagonality_db ? shortest(*r.diagonality_db) : "")
            << ',' << (ok ? std::to_string(r.iterations) : "") << ',' << (ok ? fixed3(r.wall_ms) : "") << ','
            << config.seed;
        if (any_failed) out << ',' << csv_field(r.status);
        out << "\n";
    }
    return any_failed ? runtime_error : success;
}

// -------------------------------------------------------------------- verify

namespace {

constexpr double kOracleTolerance = 1e-10;
constexpr double kNilpotencyTolerance = 1e-12;
constexpr double kClosureTolerance = 1e-10;
constexpr double kGradientTolerance = 1e-6;
constexpr double kFiniteDifferenceStep = 1e-6;

enum class Outcome { pass, fail, inapplicable };

struct CheckLine {
    CheckLine(std::string n, std::string tol) : name(std::move(n)), tolerance(std::move(tol)) {}

    std::string name;
    std::string tolerance;
    std::optional<double> value;
    Outcome outcome = Outcome::inapplicable;
    std::string note;
};

void print_check(std::ostream& out, const CheckLine& c) {
    const char* verdict = c.outcome == Outcome::pass ? "PASS" : c.outcome == Outcome::fail ? "FAIL" : "INAPPLICABLE";
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %-24s %-12s %s", c.name.c_str(),
                  c.value ? shortest(*c.value).c_str() : "-", c.tolerance.c_str(), verdict);
    out << line;
    if (!c.note.empty()) out << "  " << c.note;
    out << "\n";
}

double relative_or_absolute(double diff, double reference) { return reference > 0.0 ? diff / reference : diff; }

// Largest componentwise relative error between the analytic gradient and
// central differences at fixed beta; components below 1e-3 of the largest
// analytic entry are compared on that scale.
double finite_difference_error(const ScatteringBlocksd& blocks, const ControlVectord& ctrl, const TrainingSet& training,
                               std::complex<double> beta) {
    const RVector<double> g = gradient(blocks, ctrl, training, beta);
    const double floor = 1e-3 * g.cwiseAbs().maxCoeff();
    ControlVectord probe = ctrl;
    double worst = 0.0;
    for (Eigen::Index p = 0; p < g.size(); ++p) {
        const double x = ctrl.phases(p);
        probe.phases(p) = x + kFiniteDifferenceStep;
        const double up = loss(blocks, probe, training, beta);
        probe.phases(p) = x - kFiniteDifferenceStep;
        const double down = loss(blocks, probe, training, beta);
        probe.phases(p) = x;
        const double fd = (up - down) / (2.0 * kFiniteDifferenceStep);
        const double scale = std::max({std::abs(fd), std::abs(g(p)), floor});
        if (scale > 0.0) worst = std::max(worst, std::abs(g(p) - fd) / scale);
    }
    return worst;
}

}  // namespace

ScatteringBlocksd random_layered_blocks(const SimTopology& topo, std::uint64_t seed, bool with_extras) {
    topo.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> radius(0.0, 1.0), angle(0.0, 2.0 * std::numbers::pi);
    const double s = 1.0 / std::sqrt(static_cast<double>(topo.cells));
    auto fill = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
        CMatrix<double> m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double r = std::sqrt(radius(rng));
                m(i, j) = std::polar(scale * r, angle(rng));
            }
        return m;
    };
    auto b = ScatteringBlocksd::zeros(topo);
    const Eigen::Index K = topo.cells;
    for (auto& m : b.inter_layer) m = fill(K, K, s);
    b.h_ts = fill(K, topo.tx_ports, s);
    b.h_sr = fill(topo.rx_ports, K, s);
    if (with_extras) {
        b.s_rt = fill(topo.rx_ports, topo.tx_ports, 0.1);
        b.reflections.resize(static_cast<std::size_t>(topo.layers + 1));
        for (std::size_t u = 0; u < b.reflections.size(); ++u) {
            auto& r = b.reflections[u];
            if (u > 0) r.s11 = fill(K, K, 0.3 * s);
            if (u + 1 < b.reflections.size()) r.s22 = fill(K, K, 0.3 * s);
            if (u > 0 && u + 1 < b.reflections.size()) r.s12 = fill(K, K, 0.3 * s);
        }
    }
    return b;
}

int cmd_verify(const VerifyRequest& request, std::ostream& out) {
    std::optional<ScatteringBlocksd> blocks;
    GlobalScatteringd global;
    TrainingSet training;
    SimTopology topo;
    double gain = request.gain;
    std::uint64_t seed = request.seed;

    if (request.config) {
        Scenario s = make_scenario(*request.config);
        blocks = std::move(s.blocks);
        global = std::move(s.global);
        training = std::move(s.training);
        topo = s.config.topology;
        gain = s.config.gain_amplitude();
        seed = s.config.seed;
        out << "instance: config, Q=" << topo.layers << " K=" << topo.cells << " L=" << topo.tx_ports
            << " M=" << topo.rx_ports << " seed=" << seed << "\n";
    } else {
        topo = SimTopology{request.random[0], request.random[1], request.random[2], request.random[3]};
        topo.validate();
        if (!(gain >= 0.0) || !std::isfinite(gain)) throw ArgumentError("gain must be finite and non-negative");
        blocks = random_layered_blocks(topo, seed, true);
        global = assemble_global(*blocks);
        training.excitations = CMatrix<double>::Identity(topo.tx_ports, topo.tx_ports);
        training.target = CMatrix<double>::Identity(topo.rx_ports, topo.tx_ports);
        out << "instance: random, Q=" << topo.layers << " K=" << topo.cells << " L=" << topo.tx_ports
            << " M=" << topo.rx_ports << " seed=" << seed << " gain=" << shortest(gain) << "\n";
    }

    const ControlVectord ctrl = random_controls(topo, gain, seed);
    const CMatrix<double> gamma = assemble_gamma(ctrl, topo);
    std::vector<CheckLine> checks;

    // Oracle against the cascade. The cascade leaves out the direct path, so it is added back here.
    const CMatrix<double> oracle = e2e_global(global, gamma);
    {
        CheckLine c{"oracle_equivalence", shortest(kOracleTolerance)};
        if (blocks) {
            const CMatrix<double> cascade = e2e_structured(*blocks, ctrl) + blocks->s_rt;
            c.value = relative_or_absolute((cascade - oracle).norm(), oracle.norm());
            c.outcome = *c.value <= kOracleTolerance ? Outcome::pass : Outcome::fail;
            if (gain == 0.0) c.note = "gamma = 0, e2e = S_RT";
        } else {
            c.note = "structured path not applicable: coupling outside the layered pattern";
        }
        checks.push_back(c);
    }
    {
        CheckLine c{"nilpotency", shortest(kNilpotencyTolerance)};
        CMatrix<double> power = CMatrix<double>::Identity(global.s_ss.rows(), global.s_ss.cols());
        const CMatrix<double> step = global.s_ss * gamma;
        for (int i = 0; i <= topo.layers; ++i) power = power * step;
        c.value = power.size() ? power.cwiseAbs().maxCoeff() : 0.0;
        c.outcome = *c.value <= kNilpotencyTolerance ? Outcome::pass : Outcome::fail;
        if (c.outcome == Outcome::fail) c.note = "not nilpotent";
        checks.push_back(c);
    }
    {
        CheckLine c{"closure_residual", shortest(kClosureTolerance)};
        const CMatrix<double> a_t = CMatrix<double>::Identity(topo.tx_ports, topo.tx_ports);
        double worst = 0.0;
        for (Eigen::Index col = 0; col < a_t.cols(); ++col) {
            const CVector<double> a = a_t.col(col);
            const CVector<double> waves = solve_sim_waves(global, gamma, a);
            worst = std::max(worst, relative_or_absolute(closure_residual(global, gamma, a, waves), waves.norm()));
        }
        c.value = worst;
        c.outcome = worst <= kClosureTolerance ? Outcome::pass : Outcome::fail;
        checks.push_back(c);
    }

    const CMatrix<double> output =
        blocks ? output_matrix(*blocks, ctrl, training.excitations) : CMatrix<double>((oracle - global.s_rt) * training.excitations);
    const bool degenerate = output.isZero(0.0);
    {
        CheckLine c{"gradient_fd", shortest(kGradientTolerance)};
        if (!blocks) {
            c.note = "structured path not applicable";
        } else {
            // Away from the closed-form beta the fixed-beta gradient is not identically zero.
            const std::complex<double> beta =
                degenerate ? std::complex<double>(1.0)
                           : beta_star(output, training.target) * std::polar(1.25, 0.5);
            c.value = finite_difference_error(*blocks, ctrl, training, beta);
            c.outcome = *c.value <= kGradientTolerance ? Outcome::pass : Outcome::fail;
        }
        checks.push_back(c);
    }
    {
        CheckLine c{"beta_optimality", ">= 0"};
        if (degenerate) {
            c.note = "output is zero, beta undefined";
        } else {
            const std::complex<double> beta = beta_star(output, training.target);
            const double at_best = (beta * output - training.target).squaredNorm();
            const double delta = 1e-4 * std::abs(beta);
            double least = std::numeric_limits<double>::infinity();
            for (std::complex<double> dir : {std::complex<double>(1, 0), std::complex<double>(-1, 0),
                                             std::complex<double>(0, 1), std::complex<double>(0, -1)})
                least = std::min(least, ((beta + delta * dir) * output - training.target).squaredNorm() - at_best);
            c.value = least;
            c.outcome = least >= 0.0 ? Outcome::pass : Outcome::fail;
        }
        checks.push_back(c);
    }

    bool failed = false;
    for (const auto& c : checks) {
        print_check(out, c);
        failed = failed || c.outcome == Outcome::fail;
    }
    out << "verdict: " << (failed ? "FAIL" : "PASS") << "\n";
    return failed ? verification_failed : success;
}

// --------------------------------------------------------------------- bench

int cmd_bench(const BenchRequest& r, std::ostream& out) {
    if (r.max_q < 1 || r.max_k < 1 || r.repetitions < 1 || r.ports < 1 || r.oracle_max_n < 1)
        throw ArgumentError("bench sizes and repetitions must be positive");
    out << kBenchHeader << "\n";
    for (int q = 1; q <= r.max_q; q *= 2) {
        for (int k = 1; k <= r.max_k; k *= 2) {
            const SimTopology topo{q, k, r.ports, r.ports};
            const auto blocks = random_layered_blocks(topo, r.seed, false);
            const auto ctrl = random_controls(topo, 1.0, r.seed);
            const auto training = TrainingSet::diagonalization(topo);
            for (int rep = 0; rep < r.repetitions; ++rep) {
                OpCounter ops;
                const auto start = Clock::now();
                const auto state = evaluate_iteration(blocks, ctrl, training, std::nullopt, &ops);
                const double us = 1e3 * elapsed_ms(start);
                if (!std::isfinite(state.loss)) throw NumericalError("bench: non-finite loss");
                out << q << ',' << k << ",structured," << ops.macs << ',' << fixed3(us) << ',' << rep << "\n";
            }
            if (topo.sim_ports() > r.oracle_max_n) continue;
            const auto global = assemble_global(blocks);
            const auto gamma = assemble_gamma(ctrl, topo);
            for (int rep = 0; rep < r.repetitions; ++rep) {
                OpCounter ops;
                const auto start = Clock::now();
                const auto h = e2e_global(global, gamma, &ops);
                const double us = 1e3 * elapsed_ms(start);
                if (!detail::all_finite(h)) throw NumericalError("bench: non-finite oracle result");
                out << q << ',' << k << ",oracle," << ops.macs << ',' << fixed3(us) << ',' << rep << "\n";
            }
        }
    }
    return success;
}

}  // namespace simcascade::cli
