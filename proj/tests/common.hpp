// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the unit tests.

#pragma once

#include <cmath>
#include <random>

#include "xlmimo/types.hpp"

namespace xt
{

using namespace xlmimo;

inline const double lambda = wavelength_from_carrier(6.8e9);

inline CVec random_cvec(std::mt19937_64 &rng, Eigen::Index n)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = cd(g(rng), g(rng));
    return v;
}

inline CMat random_cmat(std::mt19937_64 &rng, Eigen::Index r, Eigen::Index c)
{
    CMat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        m.col(j) = random_cvec(rng, r);
    return m;
}

// Phase difference wrapped into (-pi, pi].
inline double phase_gap(cd a, cd b) { return std::abs(std::arg(a * std::conj(b))); }

} // namespace xt
