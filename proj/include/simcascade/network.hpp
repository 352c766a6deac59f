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

// Global multi-port closure of the SIM. This path ignores all structure: it
// factorizes I - S_SS * Gamma densely and serves as the correctness oracle and
// as the cubic-cost baseline for benchmarks.

#include "simcascade/model.hpp"

#include <optional>

namespace simcascade {

/// Systems whose reciprocal condition estimate falls below this are rejected.
inline constexpr double kMinReciprocalCondition = 1e-12;

namespace detail {

template <typename Real>
Eigen::PartialPivLU<CMatrix<Real>> factorize_checked(const CMatrix<Real>& system, OpCounter* ops) {
    if (!all_finite(system)) throw NumericalError("closure system has non-finite entries");
    Eigen::PartialPivLU<CMatrix<Real>> lu(system);
    const Eigen::Index n = system.rows();
    if (ops != nullptr) ops->add(static_cast<std::uint64_t>(n) * n * n / 3);
    const Real rcond = lu.rcond();
    if (!(rcond >= Real(kMinReciprocalCondition)))
        throw NumericalError("closure system is singular or ill-conditioned (rcond = " +
                             std::to_string(static_cast<double>(rcond)) + ")");
    return lu;
}

template <typename Real>
void check_square(const CMatrix<Real>& sss, const CMatrix<Real>& gamma) {
    if (sss.rows() != sss.cols() || gamma.rows() != gamma.cols() || sss.rows() != gamma.rows())
        throw ArgumentError("S_SS and Gamma must be square matrices of equal size");
}

}  // namespace detail

/// b_S solving b_S = S_ST a_T + S_SS Gamma b_S.
template <typename Real>
CVector<Real> solve_sim_waves(const GlobalScattering<Real>& s, const CMatrix<Real>& gamma, const CVector<Real>& a_t) {
    s.validate();
    detail::check_square(s.s_ss, gamma);
    if (a_t.size() != s.topology.tx_ports) throw ArgumentError("excitation length must equal L");
    const Eigen::Index N = s.s_ss.rows();
    const CMatrix<Real> system = CMatrix<Real>::Identity(N, N) - s.s_ss * gamma;
    const auto lu = detail::factorize_checked<Real>(system, nullptr);
    return lu.solve(s.s_st * a_t);
}

/// T_S = Gamma [I - S_SS Gamma]^-1, evaluated as the solution of
/// [I - Gamma S_SS] T_S = Gamma (push-through identity, no explicit inverse).
template <typename Real>
CMatrix<Real> internal_operator(const CMatrix<Real>& sss, const CMatrix<Real>& gamma) {
    detail::check_square(sss, gamma);
    const Eigen::Index N = sss.rows();
    const CMatrix<Real> system = CMatrix<Real>::Identity(N, N) - gamma * sss;
    const auto lu = detail::factorize_checked<Real>(system, nullptr);
    return lu.solve(gamma);
}

/// S_RT + S_RS T_S S_ST through one dense LU of I - S_SS Gamma.
template <typename Real>
CMatrix<Real> e2e_global(const GlobalScattering<Real>& s, const CMatrix<Real>& gamma, OpCounter* ops = nullptr) {
    s.validate();
    detail::check_square(s.s_ss, gamma);
    const Eigen::Index N = s.s_ss.rows();
    const Eigen::Index L = s.topology.tx_ports;
    const Eigen::Index M = s.topology.rx_ports;

    const CMatrix<Real> system = CMatrix<Real>::Identity(N, N) - s.s_ss * gamma;
    detail::count_product(ops, N, N, N);
    const auto lu = detail::factorize_checked<Real>(system, ops);
    const CMatrix<Real> waves = lu.solve(s.s_st);  // b_S for every transmit port
    detail::count_product(ops, N, N, L);
    const CMatrix<Real> incident = gamma * waves;
    detail::count_product(ops, N, N, L);
    CMatrix<Real> e2e = s.s_rt + s.s_rs * incident;
    detail::count_product(ops, M, N, L);
    return e2e;
}

/// Max-abs residual of b_S against its defining fixed point.
template <typename Real>
Real closure_residual(const GlobalScattering<Real>& s, const CMatrix<Real>& gamma, const CVector<Real>& a_t,
                      const CVector<Real>& b_s) {
    return (b_s - s.s_st * a_t - s.s_ss * (gamma * b_s)).norm();
}

/// Smallest m with (S_SS Gamma)^m == 0 entrywise within `tol`, or nullopt when
/// no power up to N vanishes.
template <typename Real>
std::optional<int> nilpotency_index(const CMatrix<Real>& sss, const CMatrix<Real>& gamma, Real tol = Real(1e-12)) {
    detail::check_square(sss, gamma);
    const Eigen::Index N = sss.rows();
    const CMatrix<Real> step = sss * gamma;
    CMatrix<Real> power = step;
    for (Eigen::Index m = 1; m <= N; ++m) {
        if (power.cwiseAbs().maxCoeff() <= tol) return static_cast<int>(m);
        if (m < N) power = power * step;
    }
    return std::nullopt;
}

}  // namespace simcascade
