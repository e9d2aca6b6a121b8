// SPDX-License-Identifier: Apache-2.0
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

#include "xlmimo/doa.hpp"

#include <algorithm>
#include <cmath>

#include "xlmimo/channel.hpp"

namespace xlmimo
{

CMat subarray_covariance(const CVec &h)
{
    if (h.size() == 0 || h.squaredNorm() == 0.0)
        throw Error(ErrorCode::degenerate_input, "subarray channel estimate is zero");
    return h * h.adjoint();
}

namespace
{

// D^-1/2 C D^-1/2 so the result has an exact unit diagonal.
CMat unit_diagonal(const CMat &c)
{
    RVec d = c.diagonal().real();
    for (Eigen::Index k = 0; k < d.size(); ++k)
        if (!(d(k) > 0.0))
            throw Error(ErrorCode::degenerate_input, "axis covariance has a non-positive diagonal entry");
    const RVec s = d.cwiseSqrt().cwiseInverse();
    CMat out = s.asDiagonal() * c * s.asDiagonal();
    out.diagonal().imag().setZero();
    out.diagonal().real().setOnes();
    return out;
}

} // namespace

AxisFactors extract_axis_factors(const CMat &c, int count_h, int count_v)
{
    if (count_h < 1 || count_v < 1 || c.rows() != c.cols() ||
        c.rows() != static_cast<Eigen::Index>(count_h) * count_v)
        throw Error(ErrorCode::invalid_argument, "covariance shape does not match M_h * M_v");

    CMat cv = CMat::Zero(count_v, count_v);
    CMat ch = CMat::Zero(count_h, count_h);
    for (int h = 0; h < count_h; ++h)
        cv += c.block(static_cast<Eigen::Index>(h) * count_v, static_cast<Eigen::Index>(h) * count_v, count_v, count_v);
    for (int p = 0; p < count_h; ++p)
        for (int q = 0; q < count_h; ++q)
            ch(p, q) = c.block(static_cast<Eigen::Index>(p) * count_v, static_cast<Eigen::Index>(q) * count_v, count_v,
                               count_v)
                           .diagonal()
                           .sum();
    cv /= static_cast<double>(count_h);
    ch /= static_cast<double>(count_v);

    AxisFactors f;
    f.horizontal = {unit_diagonal(ch), Axis::horizontal};
    f.vertical = {unit_diagonal(cv), Axis::vertical};
    return f;
}

MusicSpectrum music_spectrum(const CMat &c, double spacing, double wavelength, int grid_points, int sources)
{
    const Eigen::Index m = c.rows();
    if (c.cols() != m || m < 1)
        throw Error(ErrorCode::invalid_argument, "MUSIC needs a square covariance");
    if (sources < 0 || sources >= m)
        throw Error(ErrorCode::invalid_argument, "number of sources must be below the array size");
    if (grid_points < 3)
        throw Error(ErrorCode::invalid_argument, "MUSIC grid needs at least 3 points");

    const CMat herm = 0.5 * (c + c.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> eig(herm);
    if (eig.info() != Eigen::Success)
        throw Error(ErrorCode::divergence, "MUSIC eigendecomposition failed");
    // Eigenvalues ascend, so the noise subspace is the leading block of columns.
    const CMat noise = eig.eigenvectors().leftCols(m - sources);

    auto denominator = [&](double w) {
        const CVec a = far_field_steering(static_cast<int>(m), spacing, w, wavelength);
        return (noise.adjoint() * a).squaredNorm();
    };

    MusicSpectrum s;
    s.grid.resize(static_cast<size_t>(grid_points));
    s.values.resize(static_cast<size_t>(grid_points));
    double best = -1.0;
    for (int k = 0; k < grid_points; ++k)
    {
        const double w = -1.0 + 2.0 * k / (grid_points - 1);
        const double d = denominator(w);
        const double v = 1.0 / std::max(d, 1e-300);
        s.grid[static_cast<size_t>(k)] = w;
        s.values[static_cast<size_t>(k)] = v;
        if (v > best)
        {
            best = v;
            s.peak_index = k;
        }
    }

    // The reciprocal is smooth through an exact null, unlike the log-spectrum, so
    // the polish minimizes it over the two cells around the discrete peak.
    double lo = s.grid[static_cast<size_t>(std::max(s.peak_index - 1, 0))];
    double hi = s.grid[static_cast<size_t>(std::min(s.peak_index + 1, grid_points - 1))];
    const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = denominator(x1);
    double f2 = denominator(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-13; ++it)
    {
        if (f1 <= f2)
        {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = denominator(x1);
        }
        else
        {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = denominator(x2);
        }
    }
    const double refined = 0.5 * (lo + hi);
    const double grid_peak = s.grid[static_cast<size_t>(s.peak_index)];
    s.peak = denominator(refined) <= denominator(grid_peak) ? refined : grid_peak;
    return s;
}

double music_1d(const AxisCovariance &c, double spacing, double wavelength, int grid_points, int sources)
{
    return music_spectrum(c.matrix, spacing, wavelength, grid_points, sources).peak;
}

} // namespace xlmimo
