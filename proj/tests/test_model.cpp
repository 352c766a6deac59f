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


#include "doctest.h"

#include "simcascade/model.hpp"
#include "simcascade/network.hpp"
#include "support.hpp"

#include <set>

using namespace simcascade;
using simcascade::testing::Mat;
using simcascade::testing::Rng;
using C = std::complex<double>;

TEST_CASE("port_index follows the layer-wise ordering") {
    const SimTopology topo{3, 4, 1, 1};
    CHECK(port_index(1, 1, PortSide::receive, topo) == 1);
    CHECK(port_index(1, 1, PortSide::transmit, topo) == 5);
    CHECK(port_index(2, 3, PortSide::receive, topo) == 11);
    CHECK(port_index(3, 4, PortSide::transmit, topo) == 24);
}

TEST_CASE("port_index rejects out-of-range layers and cells") {
    const SimTopology topo{2, 4, 1, 1};
    CHECK_THROWS_AS(port_index(0, 1, PortSide::receive, topo), IndexError);
    CHECK_THROWS_AS(port_index(3, 1, PortSide::receive, topo), IndexError);
    CHECK_THROWS_AS(port_index(1, 0, PortSide::transmit, topo), IndexError);
    CHECK_THROWS_AS(port_index(1, 5, PortSide::transmit, topo), IndexError);
}

TEST_CASE("port_index is a bijection onto 1..N") {
    for (int Q = 1; Q <= 4; ++Q)
        for (int K = 1; K <= 5; ++K) {
            const SimTopology topo{Q, K, 1, 1};
            std::set<Eigen::Index> seen;
            for (int q = 1; q <= Q; ++q)
                for (int k = 1; k <= K; ++k)
                    for (auto side : {PortSide::receive, PortSide::transmit}) seen.insert(port_index(q, k, side, topo));
            REQUIRE(seen.size() == static_cast<std::size_t>(topo.sim_ports()));
            CHECK(*seen.begin() == 1);
            CHECK(*seen.rbegin() == topo.sim_ports());
        }
}

TEST_CASE("assemble_layer_gain") {
    Eigen::VectorXd one(1);
    one << 0.0;
    CHECK(assemble_layer_gain(one, 1.0)(0, 0) == C(1.0, 0.0));

    one << std::numbers::pi / 2;
    const Mat g = assemble_layer_gain(one, 2.0);
    CHECK(g(0, 0).real() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g(0, 0).imag() == doctest::Approx(2.0));

    Eigen::VectorXd two(2);
    two << 0.0, std::numbers::pi;
    const Mat d = assemble_layer_gain(two, 1.0);
    CHECK(std::abs(d(0, 0) - C(1.0)) < 1e-15);
    CHECK(std::abs(d(1, 1) - C(-1.0)) < 1e-15);
    CHECK(d(0, 1) == C(0.0));
    CHECK(d(1, 0) == C(0.0));

    two << 0.0, std::nan("");
    CHECK_THROWS_AS(assemble_layer_gain(two, 1.0), ArgumentError);
    two << 0.0, 1.0;
    CHECK_THROWS_AS(assemble_layer_gain(two, -1.0), ArgumentError);
}

TEST_CASE("assemble_gamma places the unit-cell through entries") {
    SUBCASE("single cell, unit gain") {
        const SimTopology topo{1, 1, 1, 1};
        ControlVectord c{Eigen::VectorXd::Zero(1), 1.0};
        Mat expected(2, 2);
        expected << C(0), C(0), C(1), C(0);
        CHECK(assemble_gamma(c, topo) == expected);
    }
    SUBCASE("single cell, phase pi, gain 0.5") {
        const SimTopology topo{1, 1, 1, 1};
        ControlVectord c{Eigen::VectorXd::Constant(1, std::numbers::pi), 0.5};
        const Mat g = assemble_gamma(c, topo);
        CHECK(std::abs(g(1, 0) - C(-0.5)) < 1e-15);
        CHECK(g(0, 0) == C(0));
        CHECK(g(0, 1) == C(0));
        CHECK(g(1, 1) == C(0));
    }
    SUBCASE("two layers of one cell") {
        const SimTopology topo{2, 1, 1, 1};
        ControlVectord c{Eigen::VectorXd::Zero(2), 1.0};
        Mat expected = Mat::Zero(4, 4);
        expected(1, 0) = 1.0;  // (2,1) 1-based
        expected(3, 2) = 1.0;  // (4,3)
        CHECK(assemble_gamma(c, topo) == expected);
    }
    SUBCASE("wrong control length") {
        const SimTopology topo{2, 3, 1, 1};
        ControlVectord c{Eigen::VectorXd::Zero(5), 1.0};
        CHECK_THROWS_AS(assemble_gamma(c, topo), ArgumentError);
    }
}

TEST_CASE("assemble_gamma has QK nonzeros of modulus G") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const SimTopology topo{rng.integer(1, 4), rng.integer(1, 6), 1, 1};
        const double gain = rng.uniform(0.1, 3.0);
        const auto c = simcascade::testing::random_control(topo, rng, gain);
        const Mat g = assemble_gamma(c, topo);
        int nonzeros = 0;
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            for (Eigen::Index i = 0; i < g.rows(); ++i)
                if (g(i, j) != C(0)) {
                    ++nonzeros;
                    CHECK(std::abs(g(i, j)) == doctest::Approx(gain).epsilon(1e-14));
                }
        CHECK(nonzeros == topo.controls());
    }
}

TEST_CASE("assemble_sss block placement") {
    SUBCASE("no coupling") {
        const SimTopology topo{1, 2, 1, 1};
        CHECK(assemble_sss(ScatteringBlocksd::zeros(topo)).isZero(0));
    }
    SUBCASE("forward coupling lands at (3,2)") {
        const SimTopology topo{2, 1, 1, 1};
        auto b = ScatteringBlocksd::zeros(topo);
        b.inter_layer[0](0, 0) = 0.5;
        const Mat s = assemble_sss(b);
        Mat expected = Mat::Zero(4, 4);
        expected(2, 1) = 0.5;
        CHECK(s == expected);

        b.reflections.resize(3);
        b.reflections[1].s12 = Mat::Constant(1, 1, 0.5);
        const Mat s2 = assemble_sss(b);
        expected(1, 2) = 0.5;
        CHECK(s2 == expected);
    }
    SUBCASE("misplaced reflection block is rejected") {
        const SimTopology topo{2, 1, 1, 1};
        auto b = ScatteringBlocksd::zeros(topo);
        b.reflections.resize(3);
        b.reflections[0].s11 = Mat::Constant(1, 1, 0.1);
        CHECK_THROWS_AS(assemble_sss(b), ArgumentError);
    }
    SUBCASE("dimension mismatch") {
        const SimTopology topo{2, 2, 1, 1};
        auto b = ScatteringBlocksd::zeros(topo);
        b.inter_layer[0] = Mat::Zero(3, 2);
        CHECK_THROWS_AS(assemble_sss(b), ArgumentError);
    }
}

TEST_CASE("assemble_sss round-trips through extract_blocks") {
    Rng rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        const SimTopology topo{rng.integer(1, 4), rng.integer(1, 5), rng.integer(1, 3), rng.integer(1, 3)};
        auto b = simcascade::testing::random_blocks(topo, rng, trial % 2 == 0);
        b.s_rt = rng.matrix(topo.rx_ports, topo.tx_ports);
        const auto global = assemble_global(b);
        CHECK(layered_structure_violation(global) == 0.0);
        const auto back = extract_blocks(global);
        REQUIRE(back.inter_layer.size() == b.inter_layer.size());
        for (std::size_t q = 0; q < b.inter_layer.size(); ++q) CHECK(back.inter_layer[q] == b.inter_layer[q]);
        CHECK(back.h_ts == b.h_ts);
        CHECK(back.h_sr == b.h_sr);
        CHECK(back.s_rt == b.s_rt);
        CHECK(back.has_reflections() == b.has_reflections());
        if (b.has_reflections())
            for (std::size_t u = 0; u < b.reflections.size(); ++u) {
                CHECK(back.reflections[u].s11 == b.reflections[u].s11);
                CHECK(back.reflections[u].s22 == b.reflections[u].s22);
                CHECK(back.reflections[u].s12 == b.reflections[u].s12);
            }
        // Full-matrix partition is lossless as well.
        const auto again = partition_global(to_full_matrix(global), topo);
        CHECK(again.s_ss == global.s_ss);
        CHECK(again.s_st == global.s_st);
        CHECK(again.s_rs == global.s_rs);
    }
}

TEST_CASE("long-range coupling is reported as a structure violation") {
    const SimTopology topo{3, 2, 1, 1};
    Rng rng(5);
    auto global = assemble_global(simcascade::testing::random_blocks(topo, rng));
    global.s_ss(array_offset(3, PortSide::receive, topo), array_offset(1, PortSide::transmit, topo)) = 0.25;
    CHECK(layered_structure_violation(global) == doctest::Approx(0.25));
    CHECK_THROWS_AS(extract_blocks(global), ArgumentError);
}

TEST_CASE("S_SS Gamma is nilpotent of index at most Q + 1") {
    Rng rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const SimTopology topo{rng.integer(1, 5), rng.integer(1, 8), 1, 1};
        const auto b = simcascade::testing::random_blocks(topo, rng, true);
        const auto c = simcascade::testing::random_control(topo, rng, rng.pick({0.5, 1.0, 2.0}));
        const Mat step = assemble_sss(b) * assemble_gamma(c, topo);
        Mat power = Mat::Identity(step.rows(), step.cols());
        for (int m = 0; m < topo.layers + 1; ++m) power = power * step;
        CHECK(power.cwiseAbs().maxCoeff() <= 1e-12);
    }
}
