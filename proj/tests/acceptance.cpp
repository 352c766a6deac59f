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


// Acceptance suite. Prints one line per criterion and exits non-zero if any
// criterion fails.

#include "simcascade/cascade.hpp"
#include "simcascade/commands.hpp"
#include "simcascade/network.hpp"
#include "support.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <map>
#include <sstream>

using namespace simcascade;
using simcascade::testing::Mat;
using simcascade::testing::Rng;
using C = std::complex<double>;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Instance {
    ScatteringBlocksd blocks;
    ControlVectord ctrl;
};

// Shared by criteria 1 and 2.
std::vector<Instance> structured_instances() {
    Rng rng(2024);
    std::vector<Instance> out;
    for (int i = 0; i < 50; ++i) {
        const int io = rng.integer(1, 8);
        const SimTopology topo{rng.integer(1, 5), rng.integer(1, 16), io, io};
        auto blocks = testing::random_blocks(topo, rng, i % 2 == 1);
        auto ctrl = testing::random_control(topo, rng, rng.pick({0.5, 1.0, 2.0}));
        out.push_back({std::move(blocks), std::move(ctrl)});
    }
    return out;
}

double nilpotency_residual(const Mat& sss, const Mat& gamma, int layers) {
    const Mat step = sss * gamma;
    Mat power = Mat::Identity(sss.rows(), sss.cols());
    for (int i = 0; i <= layers; ++i) power = power * step;
    return power.cwiseAbs().maxCoeff();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Verdict oracle_equivalence(const std::vector<Instance>& instances) {
    double worst = 0.0;
    for (const auto& in : instances) {
        const Mat global = e2e_global(assemble_global(in.blocks), assemble_gamma(in.ctrl, in.blocks.topology));
        worst = std::max(worst, testing::relative_frobenius(e2e_structured(in.blocks, in.ctrl), global));
    }
    return {worst <= 1e-10, "max relative error " + sci(worst) + " over 50 instances (tol 1e-10)"};
}

Verdict nilpotency(const std::vector<Instance>& instances) {
    double worst = 0.0;
    for (const auto& in : instances) {
        const auto& topo = in.blocks.topology;
        worst = std::max(worst, nilpotency_residual(assemble_global(in.blocks).s_ss, assemble_gamma(in.ctrl, topo),
                                                    topo.layers));
    }
    // A dense S_SS couples every port to every other and must fail.
    Rng rng(77);
    const SimTopology topo{3, 4, 2, 2};
    const auto ctrl = testing::random_control(topo, rng, 1.0);
    const Mat dense = rng.matrix(topo.sim_ports(), topo.sim_ports(), 0.2);
    const double dense_residual = nilpotency_residual(dense, assemble_gamma(ctrl, topo), topo.layers);
    return {worst <= 1e-12 && dense_residual > 1e-12,
            "max |(S_SS Gamma)^(Q+1)| " + sci(worst) + " (tol 1e-12); densified S_SS gives " + sci(dense_residual)};
}

Verdict gradient_fidelity() {
    Rng rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int io = rng.integer(1, 4);
        const SimTopology topo{rng.integer(1, 4), rng.integer(1, 8), io, io};
        const auto blocks = testing::random_blocks(topo, rng);
        const auto ctrl = testing::random_control(topo, rng, 1.0);
        const TrainingSet training{rng.matrix(io, io), rng.matrix(io, io)};
        const C beta = rng.unit_disk() + C(0.5, 0.0);
        const RVector<double> g = gradient(blocks, ctrl, training, beta);
        auto f = [&](const RVector<double>& phases) {
            ControlVectord probe = ctrl;
            probe.phases = phases;
            return loss(blocks, probe, training, beta);
        };
        const double floor = 1e-3 * g.cwiseAbs().maxCoeff();
        for (Eigen::Index p = 0; p < g.size(); ++p) {
            const double fd = testing::central_difference(f, ctrl.phases, p, 1e-6);
            const double scale = std::max({std::abs(fd), std::abs(g(p)), floor});
            if (scale > 0.0) worst = std::max(worst, std::abs(g(p) - fd) / scale);
        }
    }
    return {worst <= 1e-6, "max componentwise relative error " + sci(worst) + " over 20 instances (tol 1e-6)"};
}

Verdict beta_closed_form() {
    Rng rng(41);
    double least_increase = std::numeric_limits<double>::infinity();
    double proportional_loss = 0.0;
    auto l = [](const Mat& x, const Mat& d, C b) { return (b * x - d).squaredNorm(); };
    for (int trial = 0; trial < 20; ++trial) {
        const int m = rng.integer(1, 4), n = rng.integer(1, 4);
        const Mat x = rng.matrix(m, n), d = rng.matrix(m, n);
        const C best = beta_star(x, d);
        const double at_best = l(x, d, best);
        for (C dir : {C(1, 0), C(-1, 0), C(0, 1), C(0, -1)})
            least_increase = std::min(least_increase, l(x, d, best + 1e-4 * std::abs(best) * dir) - at_best);
        const Mat target = rng.unit_disk() * x;
        proportional_loss = std::max(proportional_loss, l(x, target, beta_star(x, target)));
    }
    return {least_increase >= 0.0 && proportional_loss <= 1e-20,
            "smallest loss change under perturbation " + sci(least_increase) + " (must be >= 0); loss for X_hat ~ X_d " +
                sci(proportional_loss) + " (tol 1e-20)"};
}

std::vector<std::vector<double>> recorded_traces;

OptimizationRun recorded(OptimizationRun run) {
    recorded_traces.push_back(run.loss_trace);
    return run;
}

Verdict armijo_monotonicity() {
    auto b = ScatteringBlocksd::zeros(SimTopology{1, 1, 1, 1});
    b.h_ts(0, 0) = 1.0;
    b.h_sr(0, 0) = 1.0;
    OptimizerConfig cfg;
    cfg.max_iterations = 100;
    cfg.fixed_beta = C(1.0);
    cfg.gradient_tolerance = 1e-12;
    const auto scalar = recorded(optimize(b, TrainingSet{Mat::Identity(1, 1), Mat::Identity(1, 1)}, cfg,
                                          ControlVectord{Eigen::VectorXd::Constant(1, 2.0), 1.0}));

    Rng rng(51);
    for (int trial = 0; trial < 10; ++trial) {
        const int io = rng.integer(2, 4);
        const SimTopology topo{rng.integer(1, 4), rng.integer(2, 8), io, io};
        OptimizerConfig c;
        c.max_iterations = 100;
        recorded(optimize(testing::random_blocks(topo, rng), TrainingSet{rng.matrix(io, io), rng.matrix(io, io)}, c,
                          testing::random_control(topo, rng, 1.0)));
    }

    std::size_t violations = 0;
    for (const auto& trace : recorded_traces)
        for (std::size_t t = 1; t < trace.size(); ++t)
            if (trace[t] > trace[t - 1]) ++violations;
    const double final_loss = scalar.loss_trace.back();
    return {violations == 0 && final_loss < 1e-10 && scalar.iterations_used <= 100,
            std::to_string(recorded_traces.size()) + " traces, " + std::to_string(violations) +
                " increases; 1-D case loss " + sci(final_loss) + " after " + std::to_string(scalar.iterations_used) +
                " iterations (tol 1e-10 within 100)"};
}

Verdict complexity_scaling() {
    cli::BenchRequest req;
    req.max_q = 16;
    req.max_k = 16;
    req.repetitions = 1;
    std::ostringstream out;
    cli::cmd_bench(req, out);
    std::map<std::tuple<int, int, std::string>, double> flops;
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string q, k, path, f;
        std::getline(row, q, ',');
        std::getline(row, k, ',');
        std::getline(row, path, ',');
        std::getline(row, f, ',');
        flops[{std::stoi(q), std::stoi(k), path}] = std::stod(f);
    }
    const double k_ratio = flops.at({4, 16, "structured"}) / flops.at({4, 8, "structured"});
    const double q_ratio = flops.at({16, 16, "structured"}) / flops.at({8, 16, "structured"});
    const double n_ratio = flops.at({4, 16, "oracle"}) / flops.at({4, 8, "oracle"});
    const bool ok = k_ratio >= 3.5 && k_ratio <= 4.5 && q_ratio >= 1.8 && q_ratio <= 2.2 && n_ratio >= 7.0 && n_ratio <= 9.0;
    return {ok, "structured K 8->16 at Q=4: " + sci(k_ratio) + " [3.5, 4.5]; structured Q 8->16 at K=16: " +
                    sci(q_ratio) + " [1.8, 2.2]; oracle N 64->128: " + sci(n_ratio) + " [7, 9]"};
}

ScenarioConfig reference_config(double gain_db) {
    ScenarioConfig c;
    c.geometry = reference_geometry(28e9);
    c.geometry->elements_y = 16;
    c.geometry->elements_z = 4;
    c.topology = SimTopology{3, c.geometry->cells(), 4, 4};
    c.gain_db = gain_db;
    c.seed = 0;
    return c;
}

Verdict reference_diagonalization() {
    const auto c = reference_config(6.0);
    const auto p = cli::run_point(make_scenario(c));
    recorded_traces.push_back(p.run.loss_trace);
    const auto& trace = p.run.diagonality_trace;
    const double best = *std::max_element(trace.begin(), trace.end());
    const bool soft = best >= 35.0;
    return {best >= 25.0 && p.run.iterations_used <= 2000,
            "seed " + std::to_string(c.seed) + ": best diagonality " + sci(best) + " dB after " +
                std::to_string(p.run.iterations_used) + " iterations, " + to_string(p.run.termination) +
                " (hard >= 25 dB; 35 dB " + (soft ? "reached" : "not reached") + ")"};
}

Verdict trend_checks() {
    std::vector<double> se_by_gain;
    bool bandwidth_ok = true;
    for (double g : {0.0, 3.0, 6.0}) {
        const auto c = reference_config(g);
        const auto p = cli::run_point(make_scenario(c));
        recorded_traces.push_back(p.run.loss_trace);
        se_by_gain.push_back(sum_spectral_efficiency(p.channel, c.budget));
        double previous = std::numeric_limits<double>::infinity();
        for (double bw : c.bandwidth_grid_hz) {
            LinkBudget budget = c.budget;
            budget.bandwidth_hz = bw;
            const double se = sum_spectral_efficiency(p.channel, budget);
            bandwidth_ok = bandwidth_ok && se <= previous;
            previous = se;
        }
    }
    const bool gain_ok = se_by_gain[1] >= se_by_gain[0] && se_by_gain[2] >= se_by_gain[1];
    return {gain_ok && bandwidth_ok, "sum SE at G = 0/3/6 dB: " + sci(se_by_gain[0]) + " / " + sci(se_by_gain[1]) +
                                         " / " + sci(se_by_gain[2]) + " bits/s/Hz; bandwidth trend " +
                                         (bandwidth_ok ? "non-increasing" : "violated")};
}

bool bit_identical(const Mat& a, const Mat& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(C) * static_cast<std::size_t>(a.size())) == 0;
}

// Returns "structured" for ParseError/SchemaError, "accepted" when parsing
// succeeds and the exception text otherwise.
template <typename F>
std::string classify(F&& parse) {
    try {
        parse();
        return "accepted";
    } catch (const ParseError&) {
        return "structured";
    } catch (const SchemaError&) {
        return "structured";
    } catch (const std::exception& e) {
        return std::string("unexpected: ") + e.what();
    }
}

Verdict parser_round_trip() {
    Rng rng(91);
    bool round_trip = true;
    for (int n : {1, 2, 3, 10}) {
        Mat s = rng.matrix(n, n);
        s(0, 0) = C(1e-300, -7.25e200);
        const auto back = parse_touchstone(write_touchstone(TouchstoneData{s, 28e9, 50.0}), n);
        round_trip = round_trip && bit_identical(back.s, s);
    }
    const auto blocks = testing::random_blocks(SimTopology{3, 5, 2, 3}, rng, true);
    const auto file = load_blocks_json(save_blocks_json(blocks, 0.0107));
    round_trip = round_trip && bit_identical(file.blocks.h_ts, blocks.h_ts) && bit_identical(file.blocks.h_sr, blocks.h_sr) &&
                 bit_identical(file.blocks.s_rt, blocks.s_rt);
    for (std::size_t q = 0; q < blocks.inter_layer.size(); ++q)
        round_trip = round_trip && bit_identical(file.blocks.inter_layer[q], blocks.inter_layer[q]);
    for (std::size_t u = 0; u < blocks.reflections.size(); ++u) {
        const auto &a = blocks.reflections[u], &b = file.blocks.reflections[u];
        round_trip = round_trip && bit_identical(a.s11, b.s11) && bit_identical(a.s22, b.s22) && bit_identical(a.s12, b.s12);
    }

    const std::string ts = "! two-port\n# GHZ S RI R 50\n28 0 0 1 0 0 0 0 0\n";
    const std::string js = save_blocks_json(testing::random_blocks(SimTopology{2, 2, 1, 1}, rng), 0.01);
    auto edited = [&js](const std::function<void(nlohmann::json&)>& edit) {
        auto doc = nlohmann::json::parse(js);
        edit(doc);
        return doc.dump(1);
    };
    const std::vector<std::pair<bool, std::string>> malformed = {
        {true, "28 0 0 1 0 0 0 0 0\n"},
        {true, "# GHZ S MA R 50\n28 0 0 1 0 0 0 0 0\n"},
        {true, "# GHZ S RI R 50\n28 0 0 1 x 0 0 0 0\n"},
        {true, "# GHZ S RI R 50\n28 0 0 1 0 0 0 0\n"},
        {true, "# GHZ S RI R 50\n28 0 0 1 0 0 0 0 0\n29 0 0 1 0 0 0 0 0\n"},
        {true, "# GHZ S RI R 50\n# GHZ S RI R 50\n28 0 0 1 0 0 0 0 0\n"},
        {false, js.substr(0, js.size() / 2)},
        {false, edited([](auto& d) { d.erase("h_ts"); })},
        {false, edited([](auto& d) { d["inter_layer"].push_back(d["inter_layer"][0]); })},
        {false, edited([](auto& d) { d["topology"]["Q"] = "two"; })},
    };
    std::size_t structured = 0;
    std::string unexpected;
    for (const auto& [touchstone, text] : malformed) {
        const std::string r = touchstone ? classify([&] { parse_touchstone(text, 2); })
                                         : classify([&] { load_blocks_json(text); });
        if (r == "structured") ++structured;
        else if (unexpected.empty()) unexpected = r + " for: " + text.substr(0, 40);
    }
    // Random single-character corruptions must never escape as anything but a structured error.
    std::size_t random_unexpected = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::string t = trial % 2 ? ts : js;
        const auto pos = static_cast<std::size_t>(rng.integer(0, static_cast<int>(t.size()) - 1));
        t[pos] = static_cast<char>(rng.integer(32, 126));
        const std::string r = trial % 2 ? classify([&] { parse_touchstone(t, 2); }) : classify([&] { load_blocks_json(t); });
        if (r != "structured" && r != "accepted") {
            ++random_unexpected;
            if (unexpected.empty()) unexpected = r + " for corrupted input at byte " + std::to_string(pos);
        }
    }
    return {round_trip && structured == malformed.size() && random_unexpected == 0,
            std::string("round trips ") + (round_trip ? "bit-identical" : "differ") + "; " + std::to_string(structured) +
                "/10 malformed files gave structured errors; " + std::to_string(random_unexpected) +
                " unexpected outcomes in 200 random corruptions" + (unexpected.empty() ? "" : " (" + unexpected + ")")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Verdict()> run;
    };
    const auto instances = structured_instances();
    // Criterion 5 also inspects the traces recorded by 7 and 8, so it runs last.
    const std::vector<Criterion> criteria = {
        {1, "oracle equivalence", 10, [&] { return oracle_equivalence(instances); }},
        {2, "nilpotency", 5, [&] { return nilpotency(instances); }},
        {3, "gradient fidelity", 30, gradient_fidelity},
        {4, "closed-form beta", 30, beta_closed_form},
        {6, "complexity scaling", 60, complexity_scaling},
        {7, "reference-scenario diagonalization", 300, reference_diagonalization},
        {8, "trend checks", 600, trend_checks},
        {9, "parser round trip", 30, parser_round_trip},
        {5, "Armijo monotonicity", 60, armijo_monotonicity},
    };
    std::map<int, std::string> lines;
    bool all = true;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = v.pass && in_time;
        all = all && pass;
        char timing[64];
        std::snprintf(timing, sizeof timing, " [%.2f s, limit %.0f s]", secs, c.limit_s);
        lines[c.id] = std::string("criterion ") + std::to_string(c.id) + " " + c.name + ": " + (pass ? "PASS" : "FAIL") +
                      " : " + v.detail + timing + (in_time ? "" : " over time limit");
    }
    for (const auto& [id, line] : lines) std::cout << line << "\n";
    return all ? 0 : 1;
}
