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

#pragma once

#include <vector>

#include "xlmimo/types.hpp"

namespace xlmimo
{

enum class Axis
{
    horizontal,
    vertical
};

struct AxisCovariance
{
    CMat matrix; // Hermitian with unit diagonal
    Axis axis = Axis::horizontal;
};

struct AxisFactors
{
    AxisCovariance horizontal;
    AxisCovariance vertical;
};

struct MusicSpectrum
{
    std::vector<double> grid;
    std::vector<double> values;
    double peak = 0.0;    // refined direction cosine
    int peak_index = 0;   // discrete argmax on the grid
};

/// h h^H. Throws degenerate_input for a zero vector.
CMat subarray_covariance(const CVec &h);

/// Kronecker factors of a (count_h*count_v)^2 covariance whose vertical index runs fastest.
/// The vertical factor averages the count_h diagonal blocks; the horizontal factor
/// averages the diagonals of every count_v x count_v block. Both are scaled to unit diagonal.
AxisFactors extract_axis_factors(const CMat &c, int count_h, int count_v);

/// 1D MUSIC pseudo-spectrum 1 / |E_n^H a(w)|^2 on `grid_points` uniform cosines in [-1, 1].
/// The peak is refined by golden-section minimization of the spectrum's reciprocal
/// inside the two grid cells around the discrete argmax.
MusicSpectrum music_spectrum(const CMat &c, double spacing, double wavelength, int grid_points, int sources);

/// Refined direction cosine from music_spectrum().
double music_1d(const AxisCovariance &c, double spacing, double wavelength, int grid_points, int sources);

} // namespace xlmimo
