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

// Feed-forward evaluation of the layered SIM. Unilateral cells make
// S_SS * Gamma nilpotent, so the global closure collapses into a chain of
// diagonal gains G(q) and nearest-neighbour couplings S21(q):
//
//   Tc(1) = H_TS,            Tc(q) = S21(q-1) G(q-1) Tc(q-1)
//   Tr(Q) = I,               Tr(q) = Tr(q+1) G(q+1) S21(q)
//   H2    = G(Q) Tc(Q),      H_e2e = H_SR H2
//
// Every product is evaluated right to left so that a step costs K*K*(width of
// the thin operand), never K^3 unless the full K x K backward factors are
// explicitly requested.

#include "simcascade/model.hpp"

#include <vector>

namespace simcascade {

template <typename Real>
struct TransferSet {
    std::vector<CMatrix<Real>> forward;   // Tc(1..Q), K x L
    std::vector<CMatrix<Real>> backward;  // Tr(1..Q), K x K
    CMatrix<Real> h2;                     // K x L
    CMatrix<Real> e2e;                    // M x L
};

namespace detail {

template <typename Real>
void check_instance(const ScatteringBlocks<Real>& blocks, const ControlVector<Real>& ctrl) {
    blocks.validate();
    ctrl.validate(blocks.topology);
}

template <typename Real>
std::vector<CVector<Real>> all_layer_gains(const ScatteringBlocks<Real>& blocks, const ControlVector<Real>& ctrl) {
    std::vector<CVector<Real>> gains;
    gains.reserve(static_cast<std::size_t>(blocks.topology.layers));
    for (int q = 1; q <= blocks.topology.layers; ++q)
        gains.push_back(layer_gain_diagonal(ctrl, q, blocks.topology));
    return gains;
}

template <typename Real>
std::vector<CMatrix<Real>> forward_unchecked(const ScatteringBlocks<Real>& blocks,
                                             const std::vector<CVector<Real>>& gains, OpCounter* ops) {
    const int Q = blocks.topology.layers;
    std::vector<CMatrix<Real>> tc;
    tc.reserve(static_cast<std::size_t>(Q));
    tc.push_back(blocks.h_ts);
    for (int q = 2; q <= Q; ++q) {
        const auto& s21 = blocks.inter_layer[static_cast<std::size_t>(q - 2)];
        const auto& prev = tc.back();
        tc.push_back(s21 * (gains[static_cast<std::size_t>(q - 2)].asDiagonal() * prev));
        count_product(ops, s21.rows(), s21.cols(), prev.cols());
    }
    return tc;
}

// left * Tr(q) for q = 1..Q without forming Tr(q).
template <typename Real>
std::vector<CMatrix<Real>> projected_backward_unchecked(const ScatteringBlocks<Real>& blocks,
                                                        const std::vector<CVector<Real>>& gains,
                                                        const CMatrix<Real>& left, OpCounter* ops) {
    const int Q = blocks.topology.layers;
    std::vector<CMatrix<Real>> ar(static_cast<std::size_t>(Q));
    ar[static_cast<std::size_t>(Q - 1)] = left;
    for (int q = Q - 1; q >= 1; --q) {
        const auto& next = ar[static_cast<std::size_t>(q)];
        const auto& s21 = blocks.inter_layer[static_cast<std::size_t>(q - 1)];
        ar[static_cast<std::size_t>(q - 1)] = (next * gains[static_cast<std::size_t>(q)].asDiagonal()) * s21;
        count_product(ops, next.rows(), s21.rows(), s21.cols());
    }
    return ar;
}

}  // namespace detail

/// Tc(1..Q): transmitter to the receive ports of each layer.
template <typename Real>
std::vector<CMatrix<Real>> forward_transfers(const ScatteringBlocks<Real>& blocks, const ControlVector<Real>& ctrl,
                                             OpCounter* ops = nullptr) {
    detail::check_instance(blocks, ctrl);
    return detail::forward_unchecked(blocks, detail::all_layer_gains(blocks, ctrl), ops);
}

/// Tr(1..Q): transmit ports of each layer to the transmit ports of layer Q.
/// These are K x K; the gradient path uses projected_backward_transfers instead.
template <typename Real>
std::vector<CMatrix<Real>> backward_transfers(const ScatteringBlocks<Real>& blocks, const ControlVector<Real>& ctrl) {
    detail::check_instance(blocks, ctrl);
    const Eigen::Index K = blocks.topology.cells;
    return detail::projected_backward_unchecked(blocks, detail::all_layer_gains(blocks, ctrl),
                                                CMatrix<Real>(CMatrix<Real>::Identity(K, K)), nullptr);
}

/// left * Tr(q) for every layer, at (rows of left) * K * K per step.
template <typename Real>
std::vector<CMatrix<Real>> projected_backward_transfers(const ScatteringBlocks<Real>& blocks,
                                                        const ControlVector<Real>& ctrl, const CMatrix<Real>& left,
                                                        OpCounter* ops = nullptr) {
    detail::check_instance(blocks, ctrl);
    if (left.cols() != blocks.topology.cells) throw ArgumentError("projected backward transfers: left must have K columns");
    return detail::projected_backward_unchecked(blocks, detail::all_layer_gains(blocks, ctrl), left, ops);
}

/// H2 = G(Q) Tc(Q).
template <typename Real>
CMatrix<Real> h2(const ScatteringBlocks<Real>& blocks, const ControlVector<Real>& ctrl) {
    detail::check_instance(blocks, ctrl);
    const auto gains = detail::all_layer_gains(blocks, ctrl);
    const auto tc = detail::forward_unchecked(blocks, gains, nullptr);
    return gains.back().asDiagonal() * tc.back();
}

/// H_SR H2. The direct path S_RT is neglected, as the layered model assumes.
template <typename Real>
CMatrix<Real> e2e_structured(const ScatteringBlocks<Real>& blocks, const ControlVector<Real>& ctrl) {
    return blocks.h_sr * h2(blocks, ctrl);
}

template <typename Real>
TransferSet<Real> make_transfer_set(const ScatteringBlocks<Real>& blocks, const ControlVector<Real>& ctrl) {
    detail::check_instance(blocks, ctrl);
    const auto gains = detail::all_layer_gains(blocks, ctrl);
    const Eigen::Index K = blocks.topology.cells;
    TransferSet<Real> set;
    set.forward = detail::forward_unchecked(blocks, gains, nullptr);
    set.backward = detail::projected_backward_unchecked(blocks, gains, CMatrix<Real>(CMatrix<Real>::Identity(K, K)), nullptr);
    set.h2 = gains.back().asDiagonal() * set.forward.back();
    set.e2e = blocks.h_sr * set.h2;
    return set;
}

}  // namespace simcascade
