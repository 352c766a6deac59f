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


#include "simcascade/optimizer.hpp"

#include "simcascade/evaluation.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace simcascade {

void TrainingSet::validate(const SimTopology& topo) const {
    if (excitations.rows() != topo.tx_ports) throw ArgumentError("training: excitations must have L rows");
    if (target.rows() != topo.rx_ports) throw ArgumentError("training: target must have M rows");
    if (excitations.cols() < 1 || excitations.cols() != target.cols())
        throw ArgumentError("training: excitations and target need the same positive column count");
    if (!detail::all_finite(excitations) || !detail::all_finite(target))
        throw ArgumentError("training: non-finite entry");
}

TrainingSet TrainingSet::diagonalization(const SimTopology& topo) {
    TrainingSet t;
    t.excitations = CMatrix<double>::Identity(topo.tx_ports, topo.tx_ports);
    t.target = CMatrix<double>::Identity(topo.rx_ports, topo.tx_ports);
    t.target /= t.target.norm();
    return t;
}

bool TrainingSet::target_is_diagonal() const {
    if (target.rows() != target.cols() || target.rows() < 2) return false;
    for (Eigen::Index j = 0; j < target.cols(); ++j)
        for (Eigen::Index i = 0; i < target.rows(); ++i)
            if (i != j && target(i, j) != std::complex<double>(0.0)) return false;
    return true;
}

void OptimizerConfig::validate() const {
    if (max_iterations < 0) throw ArgumentError("optimizer: max_iterations must be non-negative");
    if (!(initial_step > 0.0)) throw ArgumentError("optimizer: initial_step must be positive");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
        throw ArgumentError("optimizer: backtrack_factor must lie in (0, 1)");
    if (!(min_step > 0.0)) throw ArgumentError("optimizer: min_step must be positive");
    if (gradient_tolerance && !(*gradient_tolerance >= 0.0))
        throw ArgumentError("optimizer: gradient_tolerance must be non-negative");
    if (max_backtracks < 1) throw ArgumentError("optimizer: max_backtracks must be positive");
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::gradient_tol: return "gradient_tol";
        case Termination::diagonality_reached: return "diagonality_reached";
        case Termination::max_iter: return "max_iter";
        case Termination::step_underflow: return "step_underflow";
    }
    return "unknown";
}

namespace {

struct ForwardPass {
    std::vector<CVector<double>> gains;
    std::vector<CMatrix<double>> tc;
    CMatrix<double> output;
};

ForwardPass forward_pass(const ScatteringBlocksd& blocks, const ControlVectord& ctrl, const CMatrix<double>& a_t,
                         OpCounter* ops) {
    ForwardPass pass;
    pass.gains = detail::all_layer_gains(blocks, ctrl);
    pass.tc = detail::forward_unchecked(blocks, pass.gains, ops);
    const CMatrix<double> h2 = pass.gains.back().asDiagonal() * pass.tc.back();
    const auto M = blocks.h_sr.rows(), K = blocks.h_sr.cols(), L = h2.cols(), I = a_t.cols();
    pass.output = (blocks.h_sr * h2) * a_t;
    detail::count_product(ops, M, K, L);
    detail::count_product(ops, M, L, I);
    return pass;
}

// dL/d eta_{q,k} = 2 Re{ beta * j g_{q,k} * sum_i (r_i^H A_q)_k (B_q)_{k,i} }
// with A_q = H_SR Tr(q) and B_q = Tc(q) A_T.
RVector<double> gradient_from(const ScatteringBlocksd& blocks, const ForwardPass& pass, const CMatrix<double>& a_t,
                              const CMatrix<double>& residual, std::complex<double> beta, OpCounter* ops) {
    const SimTopology& topo = blocks.topology;
    const Eigen::Index K = topo.cells;
    const auto a_q = detail::projected_backward_unchecked(blocks, pass.gains, blocks.h_sr, ops);
    const std::complex<double> j_beta = std::complex<double>(0.0, 1.0) * beta;
    RVector<double> grad(topo.controls());
    for (int q = 1; q <= topo.layers; ++q) {
        const auto idx = static_cast<std::size_t>(q - 1);
        const CMatrix<double> b_q = pass.tc[idx] * a_t;
        detail::count_product(ops, K, a_t.rows(), a_t.cols());
        const CMatrix<double> c_q = residual.adjoint() * a_q[idx];
        detail::count_product(ops, residual.cols(), residual.rows(), K);
        const CVector<double>& g = pass.gains[idx];
        for (Eigen::Index k = 0; k < K; ++k) {
            const std::complex<double> s = c_q.col(k).transpose() * b_q.row(k).transpose();
            grad(control_index(q, static_cast<int>(k) + 1, topo)) = 2.0 * std::real(j_beta * g(k) * s);
        }
    }
    return grad;
}

double frobenius_loss(const CMatrix<double>& output, const CMatrix<double>& target, std::complex<double> beta) {
    return (beta * output - target).squaredNorm();
}

void check_training(const ScatteringBlocksd& blocks, const ControlVectord& ctrl, const TrainingSet& training) {
    detail::check_instance(blocks, ctrl);
    training.validate(blocks.topology);
}

}  // namespace

CMatrix<double> output_matrix(const ScatteringBlocksd& blocks, const ControlVectord& ctrl,
                              const CMatrix<double>& excitations, OpCounter* ops) {
    detail::check_instance(blocks, ctrl);
    if (excitations.rows() != blocks.topology.tx_ports) throw ArgumentError("output matrix: excitations must have L rows");
    return forward_pass(blocks, ctrl, excitations, ops).output;
}

std::complex<double> beta_star(const CMatrix<double>& output, const CMatrix<double>& target) {
    if (output.rows() != target.rows() || output.cols() != target.cols())
        throw ArgumentError("beta*: output and target dimensions differ");
    const double energy = output.squaredNorm();
    if (energy == 0.0) throw DegenerateError("beta*: output matrix is zero");
    // trace(X_d X_hat^H); the conjugate ordering would not minimize the loss
    const std::complex<double> cross = (target.array() * output.array().conjugate()).sum();
    return cross / energy;
}

double loss(const ScatteringBlocksd& blocks, const ControlVectord& ctrl, const TrainingSet& training,
            std::complex<double> beta) {
    check_training(blocks, ctrl, training);
    return frobenius_loss(forward_pass(blocks, ctrl, training.excitations, nullptr).output, training.target, beta);
}

RVector<double> gradient(const ScatteringBlocksd& blocks, const ControlVectord& ctrl, const TrainingSet& training,
                         std::complex<double> beta, OpCounter* ops) {
    check_training(blocks, ctrl, training);
    const auto pass = forward_pass(blocks, ctrl, training.excitations, ops);
    const CMatrix<double> residual = beta * pass.output - training.target;
    return gradient_from(blocks, pass, training.excitations, residual, beta, ops);
}

IterationState evaluate_iteration(const ScatteringBlocksd& blocks, const ControlVectord& ctrl,
                                  const TrainingSet& training, std::optional<std::complex<double>> fixed_beta,
                                  OpCounter* ops) {
    check_training(blocks, ctrl, training);
    const auto pass = forward_pass(blocks, ctrl, training.excitations, ops);
    IterationState state;
    state.beta = fixed_beta ? *fixed_beta : beta_star(pass.output, training.target);
    const CMatrix<double> residual = state.beta * pass.output - training.target;
    state.loss = residual.squaredNorm();
    state.gradient = gradient_from(blocks, pass, training.excitations, residual, state.beta, ops);
    state.output = pass.output;
    return state;
}

OptimizationRun optimize(const ScatteringBlocksd& blocks, const TrainingSet& training, const OptimizerConfig& config,
                         const ControlVectord& initial) {
    config.validate();
    check_training(blocks, initial, training);
    const bool track_diagonality = training.target_is_diagonal();
    const auto& a_t = training.excitations;
    const auto& x_d = training.target;

    auto scale_for = [&](const CMatrix<double>& output) {
        return config.fixed_beta ? *config.fixed_beta : beta_star(output, x_d);
    };

    OptimizationRun run;
    run.final_phases = initial;
    ControlVectord current = initial;
    ForwardPass pass = forward_pass(blocks, current, a_t, nullptr);

    for (int t = 0;; ++t) {
        run.beta = scale_for(pass.output);
        const CMatrix<double> residual = run.beta * pass.output - x_d;
        const double current_loss = residual.squaredNorm();
        run.loss_trace.push_back(current_loss);
        if (track_diagonality) run.diagonality_trace.push_back(diagonality_db(pass.output));
        run.final_phases = current;
        run.iterations_used = t;
        if (!std::isfinite(current_loss)) throw OptimizationAborted("optimizer: non-finite loss", run);

        const RVector<double> grad = gradient_from(blocks, pass, a_t, residual, run.beta, nullptr);
        if (!detail::all_finite(grad)) throw OptimizationAborted("optimizer: non-finite gradient", run);
        const double grad_sq = grad.squaredNorm();
        const double tolerance = config.gradient_tolerance.value_or(1e-9 * (1.0 + current_loss));

        if (std::sqrt(grad_sq) <= tolerance) {
            run.termination = Termination::gradient_tol;
            return run;
        }
        if (track_diagonality && run.diagonality_trace.back() >= config.diagonality_stop_db) {
            run.termination = Termination::diagonality_reached;
            return run;
        }
        if (t >= config.max_iterations) {
            run.termination = Termination::max_iter;
            return run;
        }

        double step = config.initial_step;
        bool accepted = false;
        ControlVectord candidate = current;
        for (int probe = 0; probe < config.max_backtracks && step >= config.min_step; ++probe) {
            candidate.phases = current.phases - step * grad;
            ForwardPass trial = forward_pass(blocks, candidate, a_t, nullptr);
            const double trial_loss = frobenius_loss(trial.output, x_d, scale_for(trial.output));
            if (trial_loss <= current_loss - 0.5 * step * grad_sq) {
                current = std::move(candidate);
                pass = std::move(trial);
                accepted = true;
                break;
            }
            step *= config.backtrack_factor;
        }
        if (!accepted) {
            run.termination = Termination::step_underflow;
            return run;
        }
    }
}

ControlVectord random_controls(const SimTopology& topo, double gain, std::uint64_t seed) {
    topo.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    ControlVectord ctrl;
    ctrl.gain = gain;
    ctrl.phases.resize(topo.controls());
    for (Eigen::Index p = 0; p < ctrl.phases.size(); ++p) ctrl.phases(p) = phase(rng);
    return ctrl;
}

}  // namespace simcascade
