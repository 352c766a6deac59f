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

// Figures of merit for an end-to-end channel: diagonality, thermal noise and
// sum spectral efficiency under independent per-stream decoding.

#include "simcascade/types.hpp"

#include <vector>

namespace simcascade {

inline constexpr double kBoltzmann = 1.380649e-23;

/// Per-antenna transmit power and receiver noise. noise_figure is linear.
struct LinkBudget {
    double per_antenna_tx_power_w = 0.05;
    double noise_figure = 10.0;  // 10 dB
    double temperature_k = 290.0;
    double bandwidth_hz = 100e6;
    double boltzmann = kBoltzmann;

    void validate() const;
};

double db_to_power_ratio(double db);
double db_to_amplitude_ratio(double db);

/// 10 log10(diagonal energy / off-diagonal energy); +inf when the off-diagonal
/// part vanishes exactly.
double diagonality_db(const CMatrix<double>& h);

/// (F - 1) k_B T0 B.
double noise_power(const LinkBudget& budget);

/// Sum over streams of log2(1 + SINR_i), with off-diagonal leakage of row i
/// counted as interference on stream i.
double sum_spectral_efficiency(const CMatrix<double>& h, const LinkBudget& budget);

/// log2 det(I + (P / sigma^2) H H^H): joint-decoding capacity, reported for
/// comparison only.
double logdet_capacity(const CMatrix<double>& h, const LinkBudget& budget);

/// n log-spaced bandwidths from lo to hi inclusive.
std::vector<double> bandwidth_grid(double lo_hz = 10e6, double hi_hz = 2e9, int n = 8);

}  // namespace simcascade
