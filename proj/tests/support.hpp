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

// Random instance generators and independent numerical oracles shared by the
// test suites. Nothing here calls into the cascade or optimizer code paths.

#include "simcascade/model.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>

namespace simcascade::testing {

using Mat = CMatrix<double>;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    std::complex<double> unit_disk() {
        return std::polar(std::sqrt(uniform()), uniform(0.0, 2.0 * std::numbers::pi));
    }

    Mat matrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
        Mat m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * unit_disk();
        return m;
    }

    RVector<double> phases(Eigen::Index n) {
        RVector<double> p(n);
        for (Eigen::Index i = 0; i < n; ++i) p(i) = uniform(0.0, 2.0 * std::numbers::pi);
        return p;
    }

    template <typename T>
    T pick(std::initializer_list<T> values) {
        auto it = values.begin();
        std::advance(it, integer(0, static_cast<int>(values.size()) - 1));
        return *it;
    }

private:
    std::mt19937_64 engine_;
};

/// Random layered blocks. Coupling entries are scaled by 1/sqrt(K) so that
/// products through many layers stay O(1).
inline ScatteringBlocksd random_blocks(const SimTopology& topo, Rng& rng, bool with_reflections = false) {
    auto b = ScatteringBlocksd::zeros(topo);
    const Eigen::Index K = topo.cells;
    const double s = 1.0 / std::sqrt(static_cast<double>(K));
    for (auto& m : b.inter_layer) m = rng.matrix(K, K, s);
    b.h_ts = rng.matrix(K, topo.tx_ports, s);
    b.h_sr = rng.matrix(topo.rx_ports, K, s);
    if (with_reflections) {
        b.reflections.resize(static_cast<std::size_t>(topo.layers + 1));
        for (std::size_t u = 0; u < b.reflections.size(); ++u) {
            auto& r = b.reflections[u];
            if (u > 0) r.s11 = rng.matrix(K, K, 0.3 * s);
            if (u + 1 < b.reflections.size()) r.s22 = rng.matrix(K, K, 0.3 * s);
            if (u > 0 && u + 1 < b.reflections.size()) r.s12 = rng.matrix(K, K, 0.3 * s);
        }
    }
    return b;
}

inline ControlVectord random_control(const SimTopology& topo, Rng& rng, double gain) {
    ControlVectord c;
    c.phases = rng.phases(topo.controls());
    c.gain = gain;
    return c;
}

/// Central difference of f along coordinate p.
inline double central_difference(const std::function<double(const RVector<double>&)>& f, const RVector<double>& x,
                                 Eigen::Index p, double h) {
    RVector<double> plus = x, minus = x;
    plus(p) += h;
    minus(p) -= h;
    return (f(plus) - f(minus)) / (2.0 * h);
}

/// Sum_{n=0}^{terms-1} (S_SS Gamma)^n S_ST a_T by repeated multiplication.
inline CVector<double> neumann_waves(const Mat& sss, const Mat& gamma, const CVector<double>& rhs, int terms) {
    CVector<double> term = rhs;
    CVector<double> sum = rhs;
    for (int n = 1; n < terms; ++n) {
        term = sss * (gamma * term);
        sum += term;
    }
    return sum;
}

inline double relative_frobenius(const Mat& a, const Mat& reference) {
    const double denom = reference.norm();
    return denom == 0.0 ? (a - reference).norm() : (a - reference).norm() / denom;
}

}  // namespace simcascade::testing
