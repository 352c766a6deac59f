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


#include "simcascade/evaluation.hpp"

#include "simcascade/errors.hpp"

#include <cmath>
#include <limits>

namespace simcascade {

void LinkBudget::validate() const {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(per_antenna_tx_power_w)) throw ArgumentError("link budget: transmit power must be positive");
    if (!(noise_figure >= 1.0) || !std::isfinite(noise_figure))
        throw ArgumentError("link budget: noise figure (linear) must be at least 1");
    if (!positive(temperature_k)) throw ArgumentError("link budget: temperature must be positive");
    if (!positive(bandwidth_hz)) throw ArgumentError("link budget: bandwidth must be positive");
    if (!positive(boltzmann)) throw ArgumentError("link budget: Boltzmann constant must be positive");
}

double db_to_power_ratio(double db) { return std::pow(10.0, db / 10.0); }
double db_to_amplitude_ratio(double db) { return std::pow(10.0, db / 20.0); }

double diagonality_db(const CMatrix<double>& h) {
    if (h.rows() != h.cols() || h.size() == 0) throw ArgumentError("diagonality: matrix must be square");
    const double diag = h.diagonal().squaredNorm();
    double off = 0.0;
    for (Eigen::Index j = 0; j < h.cols(); ++j)
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            if (i != j) off += std::norm(h(i, j));
    if (diag == 0.0 && off == 0.0) throw DegenerateError("diagonality: undefined for the zero matrix");
    if (off == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(diag / off);
}

double noise_power(const LinkBudget& budget) {
    budget.validate();
    return (budget.noise_figure - 1.0) * budget.boltzmann * budget.temperature_k * budget.bandwidth_hz;
}

double sum_spectral_efficiency(const CMatrix<double>& h, const LinkBudget& budget) {
    if (h.rows() != h.cols()) throw ArgumentError("spectral efficiency: needs as many receive as transmit streams");
    const double p = budget.per_antenna_tx_power_w;
    const double sigma2 = noise_power(budget);
    double total = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const double signal = std::norm(h(i, i)) * p;
        double leakage = 0.0;
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            if (j != i) leakage += std::norm(h(i, j)) * p;
        const double denom = leakage + sigma2;
        if (signal == 0.0) continue;
        if (denom == 0.0) return std::numeric_limits<double>::infinity();
        total += std::log2(1.0 + signal / denom);
    }
    return total;
}

double logdet_capacity(const CMatrix<double>& h, const LinkBudget& budget) {
    const double snr = budget.per_antenna_tx_power_w / noise_power(budget);
    const Eigen::Index m = h.rows();
    const CMatrix<double> gram = CMatrix<double>::Identity(m, m) + snr * h * h.adjoint();
    Eigen::LLT<CMatrix<double>> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("log-det capacity: Gram matrix is not positive definite");
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) logdet += 2.0 * std::log2(llt.matrixL()(i, i).real());
    return logdet;
}

std::vector<double> bandwidth_grid(double lo_hz, double hi_hz, int n) {
    if (!(lo_hz > 0.0) || !(hi_hz >= lo_hz) || n < 1) throw ArgumentError("bandwidth grid: need 0 < lo <= hi and n >= 1");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n));
    if (n == 1) return {lo_hz};
    const double step = std::log10(hi_hz / lo_hz) / (n - 1);
    for (int i = 0; i < n; ++i) grid.push_back(i + 1 == n ? hi_hz : lo_hz * std::pow(10.0, step * i));
    return grid;
}

}  // namespace simcascade
