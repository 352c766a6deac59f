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

// Core domain types of a stacked metasurface with unilateral unit cells, the
// layer-wise port numbering, and assembly of the interconnection matrix and
// of the block-structured internal scattering matrix.
//
// Port numbering: the N = 2QK SIM ports are stored layer by layer,
//   [r(1), t(1), r(2), t(2), ..., r(Q), t(Q)]
// where r(q) and t(q) are the K receive and K transmit ports of layer q.
// Layer and cell numbers in the public index functions are 1-based; storage
// offsets and containers are 0-based (inter_layer[q - 1] couples layer q to
// layer q + 1).

#include "simcascade/errors.hpp"
#include "simcascade/types.hpp"

#include <string>
#include <vector>

namespace simcascade {

enum class PortSide { receive, transmit };

struct SimTopology {
    int layers = 1;    // Q
    int cells = 1;     // K, unit cells per layer
    int tx_ports = 1;  // L
    int rx_ports = 1;  // M

    Eigen::Index sim_ports() const { return Eigen::Index{2} * layers * cells; }
    Eigen::Index controls() const { return Eigen::Index{layers} * cells; }

    void validate() const {
        if (layers < 1 || cells < 1 || tx_ports < 1 || rx_ports < 1)
            throw ArgumentError("topology: Q, K, L and M must all be positive");
    }

    friend bool operator==(const SimTopology&, const SimTopology&) = default;
};

/// 1-based global port index of cell k of layer q.
inline Eigen::Index port_index(int q, int k, PortSide side, const SimTopology& topo) {
    if (q < 1 || q > topo.layers)
        throw IndexError("layer " + std::to_string(q) + " outside 1.." + std::to_string(topo.layers));
    if (k < 1 || k > topo.cells)
        throw IndexError("cell " + std::to_string(k) + " outside 1.." + std::to_string(topo.cells));
    const Eigen::Index K = topo.cells;
    const Eigen::Index base = 2 * K * (q - 1);
    return side == PortSide::receive ? base + k : base + K + k;
}

/// 0-based storage offset of the first port of one array of layer q.
inline Eigen::Index array_offset(int q, PortSide side, const SimTopology& topo) {
    return port_index(q, 1, side, topo) - 1;
}

/// Flat 0-based index of the phase of cell k in layer q (both 1-based).
inline Eigen::Index control_index(int q, int k, const SimTopology& topo) {
    return Eigen::Index{q - 1} * topo.cells + (k - 1);
}

/// Tunable phases of all QK cells plus the gain shared by every cell.
template <typename Real>
struct ControlVector {
    RVector<Real> phases;
    Real gain = Real(1);

    auto layer_phases(int q, const SimTopology& topo) const {
        return phases.segment(Eigen::Index{q - 1} * topo.cells, topo.cells);
    }

    void validate(const SimTopology& topo) const {
        if (phases.size() != topo.controls())
            throw ArgumentError("control vector: expected " + std::to_string(topo.controls()) +
                                " phases, got " + std::to_string(phases.size()));
        if (!(gain >= Real(0)) || !std::isfinite(gain))
            throw ArgumentError("control vector: gain must be finite and non-negative");
        if (!detail::all_finite(phases)) throw ArgumentError("control vector: non-finite phase");
    }
};

/// Coupling blocks of one region between consecutive arrays. Empty matrices
/// stand for zero blocks.
template <typename Real>
struct RegionReflections {
    CMatrix<Real> s11;  // transmit array of layer u back onto itself
    CMatrix<Real> s22;  // receive array of layer u + 1 back onto itself
    CMatrix<Real> s12;  // receive array of layer u + 1 -> transmit array of layer u
};

template <typename Real>
struct ScatteringBlocks {
    SimTopology topology;
    /// inter_layer[q - 1]: transmit array of layer q -> receive array of layer q + 1.
    std::vector<CMatrix<Real>> inter_layer;
    /// Either empty (all zero) or Q + 1 regions indexed u = 0..Q. Region 0 may
    /// only carry s22 and region Q only s11.
    std::vector<RegionReflections<Real>> reflections;
    CMatrix<Real> h_ts;  // K x L
    CMatrix<Real> h_sr;  // M x K
    CMatrix<Real> s_rt;  // M x L

    static ScatteringBlocks zeros(const SimTopology& topo) {
        topo.validate();
        ScatteringBlocks b;
        b.topology = topo;
        const Eigen::Index K = topo.cells;
        b.inter_layer.assign(static_cast<std::size_t>(topo.layers - 1), CMatrix<Real>::Zero(K, K));
        b.h_ts = CMatrix<Real>::Zero(K, topo.tx_ports);
        b.h_sr = CMatrix<Real>::Zero(topo.rx_ports, K);
        b.s_rt = CMatrix<Real>::Zero(topo.rx_ports, topo.tx_ports);
        return b;
    }

    bool has_reflections() const { return !reflections.empty(); }

    void validate() const {
        topology.validate();
        const Eigen::Index K = topology.cells;
        const Eigen::Index L = topology.tx_ports;
        const Eigen::Index M = topology.rx_ports;
        auto check = [](const CMatrix<Real>& m, Eigen::Index r, Eigen::Index c, const std::string& name) {
            if (m.rows() != r || m.cols() != c)
                throw ArgumentError(name + ": expected " + std::to_string(r) + "x" + std::to_string(c) +
                                    ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
            if (!detail::all_finite(m)) throw ArgumentError(name + ": non-finite entry");
        };
        if (inter_layer.size() != static_cast<std::size_t>(topology.layers - 1))
            throw ArgumentError("inter_layer: expected " + std::to_string(topology.layers - 1) +
                                " blocks, got " + std::to_string(inter_layer.size()));
        for (std::size_t q = 0; q < inter_layer.size(); ++q)
            check(inter_layer[q], K, K, "inter_layer[" + std::to_string(q) + "]");
        check(h_ts, K, L, "h_ts");
        check(h_sr, M, K, "h_sr");
        check(s_rt, M, L, "s_rt");
        if (reflections.empty()) return;
        if (reflections.size() != static_cast<std::size_t>(topology.layers + 1))
            throw ArgumentError("reflections: expected " + std::to_string(topology.layers + 1) +
                                " regions, got " + std::to_string(reflections.size()));
        for (std::size_t u = 0; u < reflections.size(); ++u) {
            const auto& r = reflections[u];
            const std::string tag = "reflections[" + std::to_string(u) + "].";
            const bool first = u == 0;
            const bool last = u + 1 == reflections.size();
            for (auto [m, name, allowed] : {std::tuple{&r.s11, "s11", !first}, std::tuple{&r.s22, "s22", !last},
                                            std::tuple{&r.s12, "s12", !first && !last}}) {
                if (m->size() == 0) continue;
                if (!allowed) throw ArgumentError(tag + name + ": block does not exist in this region");
                check(*m, K, K, tag + name);
            }
        }
    }
};

/// Partition of the full (L + N + M)-port scattering matrix, port order [T, S, R].
template <typename Real>
struct GlobalScattering {
    SimTopology topology;
    CMatrix<Real> s_tt, s_ts, s_tr;
    CMatrix<Real> s_st, s_ss, s_sr;
    CMatrix<Real> s_rt, s_rs, s_rr;

    void validate() const {
        topology.validate();
        const Eigen::Index L = topology.tx_ports, N = topology.sim_ports(), M = topology.rx_ports;
        const Eigen::Index dims[3] = {L, N, M};
        const CMatrix<Real>* blocks[3][3] = {{&s_tt, &s_ts, &s_tr}, {&s_st, &s_ss, &s_sr}, {&s_rt, &s_rs, &s_rr}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (blocks[i][j]->rows() != dims[i] || blocks[i][j]->cols() != dims[j])
                    throw ArgumentError("global scattering: block (" + std::to_string(i) + "," +
                                        std::to_string(j) + ") has inconsistent dimensions");
    }
};

/// G * diag(exp(j * phases)) as a dense K x K matrix.
template <typename Derived>
CMatrix<typename Derived::Scalar> assemble_layer_gain(const Eigen::MatrixBase<Derived>& phases,
                                                     typename Derived::Scalar gain) {
    using Real = typename Derived::Scalar;
    if (!detail::all_finite(phases)) throw ArgumentError("layer gain: non-finite phase");
    if (!(gain >= Real(0)) || !std::isfinite(gain)) throw ArgumentError("layer gain: gain must be non-negative");
    const Eigen::Index K = phases.size();
    CMatrix<Real> g = CMatrix<Real>::Zero(K, K);
    for (Eigen::Index k = 0; k < K; ++k) g(k, k) = std::polar(gain, phases(k));
    return g;
}

/// Diagonal of G^(q) as a vector; what the recursions actually multiply with.
template <typename Real>
CVector<Real> layer_gain_diagonal(const ControlVector<Real>& ctrl, int q, const SimTopology& topo) {
    const auto phases = ctrl.layer_phases(q, topo);
    CVector<Real> g(topo.cells);
    for (Eigen::Index k = 0; k < topo.cells; ++k) g(k) = std::polar(ctrl.gain, phases(k));
    return g;
}

/// N x N interconnection matrix Gamma(eta): maps reflected waves at the receive
/// ports of layer q to incident waves at the transmit ports of the same layer.
template <typename Real>
CMatrix<Real> assemble_gamma(const ControlVector<Real>& ctrl, const SimTopology& topo) {
    topo.validate();
    ctrl.validate(topo);
    const Eigen::Index N = topo.sim_ports();
    const Eigen::Index K = topo.cells;
    CMatrix<Real> gamma = CMatrix<Real>::Zero(N, N);
    for (int q = 1; q <= topo.layers; ++q) {
        const Eigen::Index rows = array_offset(q, PortSide::transmit, topo);
        const Eigen::Index cols = array_offset(q, PortSide::receive, topo);
        gamma.block(rows, cols, K, K) = assemble_layer_gain(ctrl.layer_phases(q, topo), ctrl.gain);
    }
    return gamma;
}

/// N x N internal coupling matrix with the nearest-neighbour block pattern.
template <typename Real>
CMatrix<Real> assemble_sss(const ScatteringBlocks<Real>& blocks) {
    blocks.validate();
    const SimTopology& topo = blocks.topology;
    const Eigen::Index N = topo.sim_ports();
    const Eigen::Index K = topo.cells;
    const int Q = topo.layers;
    CMatrix<Real> sss = CMatrix<Real>::Zero(N, N);
    auto place = [&](const CMatrix<Real>& m, Eigen::Index row, Eigen::Index col) {
        if (m.size() != 0) sss.block(row, col, K, K) = m;
    };
    for (int q = 1; q < Q; ++q) {
        const Eigen::Index tq = array_offset(q, PortSide::transmit, topo);
        const Eigen::Index rn = array_offset(q + 1, PortSide::receive, topo);
        place(blocks.inter_layer[static_cast<std::size_t>(q - 1)], rn, tq);
    }
    if (!blocks.has_reflections()) return sss;
    const auto& refl = blocks.reflections;
    place(refl.front().s22, array_offset(1, PortSide::receive, topo), array_offset(1, PortSide::receive, topo));
    place(refl.back().s11, array_offset(Q, PortSide::transmit, topo), array_offset(Q, PortSide::transmit, topo));
    for (int q = 1; q < Q; ++q) {
        const auto& r = refl[static_cast<std::size_t>(q)];
        const Eigen::Index tq = array_offset(q, PortSide::transmit, topo);
        const Eigen::Index rn = array_offset(q + 1, PortSide::receive, topo);
        place(r.s11, tq, tq);
        place(r.s22, rn, rn);
        place(r.s12, tq, rn);
    }
    return sss;
}

/// Full partitioned scattering description of a layered instance. Blocks the
/// layered model does not constrain (S_TT, S_TS, S_TR, S_SR, S_RR) are zero.
template <typename Real>
GlobalScattering<Real> assemble_global(const ScatteringBlocks<Real>& blocks) {
    const SimTopology& topo = blocks.topology;
    GlobalScattering<Real> g;
    g.topology = topo;
    const Eigen::Index L = topo.tx_ports, N = topo.sim_ports(), M = topo.rx_ports, K = topo.cells;
    g.s_ss = assemble_sss(blocks);
    g.s_tt = CMatrix<Real>::Zero(L, L);
    g.s_ts = CMatrix<Real>::Zero(L, N);
    g.s_tr = CMatrix<Real>::Zero(L, M);
    g.s_st = CMatrix<Real>::Zero(N, L);
    g.s_st.block(array_offset(1, PortSide::receive, topo), 0, K, L) = blocks.h_ts;
    g.s_sr = CMatrix<Real>::Zero(N, M);
    g.s_rt = blocks.s_rt;
    g.s_rs = CMatrix<Real>::Zero(M, N);
    g.s_rs.block(0, array_offset(topo.layers, PortSide::transmit, topo), M, K) = blocks.h_sr;
    g.s_rr = CMatrix<Real>::Zero(M, M);
    return g;
}

/// Splits an (L + N + M)-port matrix ordered [T, S, R] into its nine blocks.
template <typename Real>
GlobalScattering<Real> partition_global(const CMatrix<Real>& full, const SimTopology& topo) {
    topo.validate();
    const Eigen::Index L = topo.tx_ports, N = topo.sim_ports(), M = topo.rx_ports;
    const Eigen::Index total = L + N + M;
    if (full.rows() != total || full.cols() != total)
        throw ArgumentError("full scattering matrix must be " + std::to_string(total) + "x" +
                            std::to_string(total) + " for this topology");
    GlobalScattering<Real> g;
    g.topology = topo;
    const Eigen::Index off[3] = {0, L, L + N};
    const Eigen::Index dim[3] = {L, N, M};
    CMatrix<Real>* blocks[3][3] = {{&g.s_tt, &g.s_ts, &g.s_tr}, {&g.s_st, &g.s_ss, &g.s_sr}, {&g.s_rt, &g.s_rs, &g.s_rr}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) *blocks[i][j] = full.block(off[i], off[j], dim[i], dim[j]);
    return g;
}

template <typename Real>
CMatrix<Real> to_full_matrix(const GlobalScattering<Real>& g) {
    g.validate();
    const SimTopology& topo = g.topology;
    const Eigen::Index L = topo.tx_ports, N = topo.sim_ports(), M = topo.rx_ports;
    CMatrix<Real> full(L + N + M, L + N + M);
    full << g.s_tt, g.s_ts, g.s_tr, g.s_st, g.s_ss, g.s_sr, g.s_rt, g.s_rs, g.s_rr;
    return full;
}

/// Largest |entry| of S_SS, S_ST or S_RS lying outside the layered sparsity
/// pattern. Zero means the instance is admissible for the cascade path.
template <typename Real>
Real layered_structure_violation(const GlobalScattering<Real>& g) {
    g.validate();
    const SimTopology& topo = g.topology;
    const Eigen::Index K = topo.cells;
    const Eigen::Index N = topo.sim_ports();
    const int Q = topo.layers;

    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(N, N, false);
    auto allow = [&](Eigen::Index r, Eigen::Index c) { allowed.block(r, c, K, K).setConstant(true); };
    allow(array_offset(1, PortSide::receive, topo), array_offset(1, PortSide::receive, topo));
    allow(array_offset(Q, PortSide::transmit, topo), array_offset(Q, PortSide::transmit, topo));
    for (int q = 1; q < Q; ++q) {
        const Eigen::Index tq = array_offset(q, PortSide::transmit, topo);
        const Eigen::Index rn = array_offset(q + 1, PortSide::receive, topo);
        allow(tq, tq);
        allow(rn, rn);
        allow(rn, tq);
        allow(tq, rn);
    }
    Real worst(0);
    for (Eigen::Index j = 0; j < N; ++j)
        for (Eigen::Index i = 0; i < N; ++i)
            if (!allowed(i, j)) worst = std::max(worst, std::abs(g.s_ss(i, j)));

    const Eigen::Index r1 = array_offset(1, PortSide::receive, topo);
    const Eigen::Index tQ = array_offset(Q, PortSide::transmit, topo);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (i < r1 || i >= r1 + K) worst = std::max(worst, g.s_st.row(i).cwiseAbs().maxCoeff());
        if (i < tQ || i >= tQ + K) worst = std::max(worst, g.s_rs.col(i).cwiseAbs().maxCoeff());
    }
    return worst;
}

/// Recovers the layered blocks from a global description. Fails when the
/// instance has coupling outside the nearest-neighbour pattern.
template <typename Real>
ScatteringBlocks<Real> extract_blocks(const GlobalScattering<Real>& g) {
    const Real violation = layered_structure_violation(g);
    if (violation != Real(0))
        throw ArgumentError("scattering matrix is not layered: coupling of magnitude " +
                            std::to_string(static_cast<double>(violation)) + " outside the nearest-neighbour pattern");
    const SimTopology& topo = g.topology;
    const Eigen::Index K = topo.cells;
    const int Q = topo.layers;
    auto blocks = ScatteringBlocks<Real>::zeros(topo);
    auto slice = [&](Eigen::Index r, Eigen::Index c) -> CMatrix<Real> { return g.s_ss.block(r, c, K, K); };
    for (int q = 1; q < Q; ++q)
        blocks.inter_layer[static_cast<std::size_t>(q - 1)] =
            slice(array_offset(q + 1, PortSide::receive, topo), array_offset(q, PortSide::transmit, topo));
    blocks.h_ts = g.s_st.block(array_offset(1, PortSide::receive, topo), 0, K, topo.tx_ports);
    blocks.h_sr = g.s_rs.block(0, array_offset(Q, PortSide::transmit, topo), topo.rx_ports, K);
    blocks.s_rt = g.s_rt;

    std::vector<RegionReflections<Real>> refl(static_cast<std::size_t>(Q + 1));
    bool any = false;
    auto keep = [&](CMatrix<Real>& dst, Eigen::Index r, Eigen::Index c) {
        CMatrix<Real> m = slice(r, c);
        if (!m.isZero(0)) {
            dst = std::move(m);
            any = true;
        }
    };
    keep(refl.front().s22, array_offset(1, PortSide::receive, topo), array_offset(1, PortSide::receive, topo));
    keep(refl.back().s11, array_offset(Q, PortSide::transmit, topo), array_offset(Q, PortSide::transmit, topo));
    for (int q = 1; q < Q; ++q) {
        auto& r = refl[static_cast<std::size_t>(q)];
        const Eigen::Index tq = array_offset(q, PortSide::transmit, topo);
        const Eigen::Index rn = array_offset(q + 1, PortSide::receive, topo);
        keep(r.s11, tq, tq);
        keep(r.s22, rn, rn);
        keep(r.s12, tq, rn);
    }
    if (any) blocks.reflections = std::move(refl);
    return blocks;
}

using ControlVectord = ControlVector<double>;
using ScatteringBlocksd = ScatteringBlocks<double>;
using GlobalScatteringd = GlobalScattering<double>;

}  // namespace simcascade
