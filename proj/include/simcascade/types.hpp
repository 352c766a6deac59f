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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>

namespace simcascade {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Counts complex multiply-accumulates spent in dense matrix products and
/// factorizations. Diagonal scalings and elementwise updates are not counted.
struct OpCounter {
    std::uint64_t macs = 0;

    void product(Eigen::Index rows, Eigen::Index inner, Eigen::Index cols) {
        macs += static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(inner) *
                static_cast<std::uint64_t>(cols);
    }

    void add(std::uint64_t n) { macs += n; }
};

namespace detail {

inline void count_product(OpCounter* ops, Eigen::Index rows, Eigen::Index inner, Eigen::Index cols) {
    if (ops != nullptr) ops->product(rows, inner, cols);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const auto v = m(i, j);
            if constexpr (Eigen::NumTraits<typename Derived::Scalar>::IsComplex) {
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
            } else {
                if (!std::isfinite(v)) return false;
            }
        }
    return true;
}

}  // namespace detail

}  // namespace simcascade
