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

// Phase optimization of the layered SIM: Frobenius loss with a closed-form
// complex scale, factorized structured gradient, and gradient descent with
// Armijo backtracking.

#include "simcascade/cascade.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace simcascade {

/// Excitations A_T (L x I, one column per training input) and desired
/// outputs X_d (M x I).
struct TrainingSet {
    CMatrix<double> excitations;
    CMatrix<double> target;

    void validate(const SimTopology& topo) const;

    /// A_T = I_L and X_d = I / ||I||_F: channel diagonalization.
    static TrainingSet diagonalization(const SimTopology& topo);

    /// True when X_d is square, at least 2x2 and has no off-diagonal entries.
    bool target_is_diagonal() const;
};

struct OptimizerConfig {
    int max_iterations = 2000;
    double initial_step = 1.0;
    double backtrack_factor = 0.5;
    double min_step = 1e-12;
    /// Stop when ||grad|| falls to this; unset means 1e-9 * (1 + loss).
    std::optional<double> gradient_tolerance;
    /// Applies only to diagonal targets.
    double diagonality_stop_db = 35.0;
    int max_backtracks = 60;
    /// Holds the scale at this value instead of re-solving it every iteration.
    std::optional<std::complex<double>> fixed_beta;

    void validate() const;
};

enum class Termination { gradient_tol, diagonality_reached, max_iter, step_underflow };

std::string to_string(Termination t);

struct OptimizationRun {
    ControlVectord final_phases;
    std::complex<double> beta;
    std::vector<double> loss_trace;         // one entry per visited iterate
    std::vector<double> diagonality_trace;  // dB, empty unless the target is diagonal
    int iterations_used = 0;                // accepted steps
    Termination termination = Termination::max_iter;
};

/// Non-finite loss or gradient. Carries the trace recorded up to the failure.
class OptimizationAborted : public NumericalError {
public:
    OptimizationAborted(const std::string& what, OptimizationRun partial)
        : NumericalError(what), partial_(std::move(partial)) {}

    const OptimizationRun& partial() const noexcept { return partial_; }

private:
    OptimizationRun partial_;
};

/// X_hat = H_SR H2 A_T.
CMatrix<double> output_matrix(const ScatteringBlocksd& blocks, const ControlVectord& ctrl,
                              const CMatrix<double>& excitations, OpCounter* ops = nullptr);

/// trace(X_hat X_d^H) / trace(X_hat X_hat^H).
std::complex<double> beta_star(const CMatrix<double>& output, const CMatrix<double>& target);

/// ||beta X_hat - X_d||_F^2.
double loss(const ScatteringBlocksd& blocks, const ControlVectord& ctrl, const TrainingSet& training,
            std::complex<double> beta);

/// dL/d eta at fixed beta, flat index (q - 1) K + (k - 1).
RVector<double> gradient(const ScatteringBlocksd& blocks, const ControlVectord& ctrl, const TrainingSet& training,
                         std::complex<double> beta, OpCounter* ops = nullptr);

/// Everything one descent iteration needs at a given point.
struct IterationState {
    CMatrix<double> output;
    std::complex<double> beta;
    double loss = 0.0;
    RVector<double> gradient;
};

/// Transfers, closed-form beta (or `fixed_beta`), loss and gradient, with a
/// single forward and a single projected backward pass.
IterationState evaluate_iteration(const ScatteringBlocksd& blocks, const ControlVectord& ctrl,
                                  const TrainingSet& training,
                                  std::optional<std::complex<double>> fixed_beta = std::nullopt,
                                  OpCounter* ops = nullptr);

OptimizationRun optimize(const ScatteringBlocksd& blocks, const TrainingSet& training, const OptimizerConfig& config,
                         const ControlVectord& initial);

/// Phases i.i.d. uniform on [0, 2 pi), deterministic in `seed`.
ControlVectord random_controls(const SimTopology& topo, double gain, std::uint64_t seed);

}  // namespace simcascade
