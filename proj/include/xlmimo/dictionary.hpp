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

#include <string>
#include <vector>

#include "xlmimo/geometry.hpp"
#include "xlmimo/types.hpp"

namespace xlmimo
{

/// Far-field Kronecker dictionary over uniform direction-cosine grids.
/// Column z_h * grid_v.size() + z_v is a_h(grid_h[z_h]) (x) a_v(grid_v[z_v]).
struct AngularDictionary
{
    CMat atoms;
    std::vector<double> grid_h;
    std::vector<double> grid_v;

    int size() const { return static_cast<int>(atoms.cols()); }
    double cosine_h(int column) const { return grid_h[column / grid_v.size()]; }
    double cosine_v(int column) const { return grid_v[column % grid_v.size()]; }
};

/// The grid {(2z - Z - 1) / Z : z = 1..Z}.
std::vector<double> cosine_grid(int z);

/// Z x Z angular dictionary for an M_h x M_v (sub)array.
AngularDictionary build_angular(int count_h, int count_v, double spacing_h, double spacing_v, double wavelength,
                                int z);

/// Rectangular variant with independent grid sizes per axis.
AngularDictionary build_angular(int count_h, int count_v, double spacing_h, double spacing_v, double wavelength,
                                int z_h, int z_v);

struct LocationGrid
{
    Vec3 center = Vec3::Zero();
    Vec3 half_width = Vec3::Zero(); // (dx, dy, dz)
    int count_x = 1;
    int count_y = 1;
    int count_z = 1;
    double min_x = 0.1; // candidate points are clamped to x >= min_x
};

/// Stage-3 dictionary. Column s is vec(H_los) (column-major) for the user
/// array centered at points[s]; s = (ix * S_y + iy) * S_z + iz.
struct LocationDictionary
{
    CMat atoms;
    std::vector<Vec3> points;
    LocationGrid grid;

    int size() const { return static_cast<int>(atoms.cols()); }
};

/// Uniform points x_hat - dx, ..., x_hat + dx per axis (a count of 1 keeps the center).
std::vector<Vec3> location_points(const LocationGrid &grid);

LocationDictionary build_location(const LocationGrid &grid, const ArrayGeometry &bs, const ArrayGeometry &ue_template,
                                  double wavelength);

/// Near-field atoms over (k_y, k_z) cosine pairs and distance rings for the whole array.
/// Column (z_h * Z + z_v) * rings + d. Cosine pairs outside the unit disc are pulled
/// onto it (k_x = 0) so the column count is always Z^2 * rings.
struct SphericalDictionary
{
    CMat atoms;
    std::vector<double> grid;
    std::vector<double> rings;

    int size() const { return static_cast<int>(atoms.cols()); }
};

SphericalDictionary build_spherical_baseline(const ArrayGeometry &bs, int angle_grid, const std::vector<double> &rings,
                                             double wavelength);

/// `count` distances uniformly spaced in 1/r over [r_min, r_max].
std::vector<double> reciprocal_rings(double r_min, double r_max, int count);

/// Plain-text metadata that accompanies an exported dictionary.
std::string manifest(const AngularDictionary &dict);
std::string manifest(const LocationDictionary &dict);
std::string manifest(const SphericalDictionary &dict);

} // namespace xlmimo
