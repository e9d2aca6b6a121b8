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

#include "xlmimo/dictionary.hpp"

#include <cmath>
#include <sstream>

#include "xlmimo/channel.hpp"

namespace xlmimo
{

std::vector<double> cosine_grid(int z)
{
    std::vector<double> g(static_cast<size_t>(z));
    for (int k = 1; k <= z; ++k)
        g[static_cast<size_t>(k - 1)] = static_cast<double>(2 * k - z - 1) / z;
    return g;
}

AngularDictionary build_angular(int count_h, int count_v, double spacing_h, double spacing_v, double wavelength,
                                int z)
{
    return build_angular(count_h, count_v, spacing_h, spacing_v, wavelength, z, z);
}

AngularDictionary build_angular(int count_h, int count_v, double spacing_h, double spacing_v, double wavelength,
                                int z_h, int z_v)
{
    if (z_h < 2 || z_v < 2)
        throw Error(ErrorCode::invalid_argument, "angular grid needs at least 2 points per axis");
    AngularDictionary d;
    d.grid_h = cosine_grid(z_h);
    d.grid_v = cosine_grid(z_v);

    std::vector<CVec> ah, av;
    for (double c : d.grid_h)
        ah.push_back(far_field_steering(count_h, spacing_h, c, wavelength));
    for (double c : d.grid_v)
        av.push_back(far_field_steering(count_v, spacing_v, c, wavelength));

    d.atoms.resize(static_cast<Eigen::Index>(count_h) * count_v, static_cast<Eigen::Index>(z_h) * z_v);
    for (int a = 0; a < z_h; ++a)
        for (int b = 0; b < z_v; ++b)
        {
            auto col = d.atoms.col(static_cast<Eigen::Index>(a) * z_v + b);
            for (int h = 0; h < count_h; ++h)
                col.segment(static_cast<Eigen::Index>(h) * count_v, count_v) = ah[a](h) * av[b];
        }
    return d;
}

std::vector<Vec3> location_points(const LocationGrid &grid)
{
    const int counts[3] = {grid.count_x, grid.count_y, grid.count_z};
    for (int e = 0; e < 3; ++e)
    {
        if (counts[e] < 1)
            throw Error(ErrorCode::invalid_argument, "location grid counts must be positive");
        if (grid.half_width(e) < 0.0)
            throw Error(ErrorCode::invalid_argument, "location grid half-widths must be non-negative");
        if (counts[e] > 1 && grid.half_width(e) == 0.0)
            throw Error(ErrorCode::degenerate_grid, "several samples over a zero-width axis");
    }

    auto axis = [&](int e, int k) {
        if (counts[e] == 1)
            return grid.center(e);
        const double step = 2.0 * grid.half_width(e) / (counts[e] - 1);
        return grid.center(e) - grid.half_width(e) + k * step;
    };

    std::vector<Vec3> pts;
    pts.reserve(static_cast<size_t>(counts[0] * counts[1] * counts[2]));
    for (int ix = 0; ix < counts[0]; ++ix)
        for (int iy = 0; iy < counts[1]; ++iy)
            for (int iz = 0; iz < counts[2]; ++iz)
                pts.emplace_back(std::max(axis(0, ix), grid.min_x), axis(1, iy), axis(2, iz));
    return pts;
}

LocationDictionary build_location(const LocationGrid &grid, const ArrayGeometry &bs, const ArrayGeometry &ue_template,
                                  double wavelength)
{
    LocationDictionary d;
    d.grid = grid;
    d.points = location_points(grid);
    const Eigen::Index m = bs.size();
    const Eigen::Index n = ue_template.size();
    d.atoms.resize(m * n, static_cast<Eigen::Index>(d.points.size()));
    for (size_t s = 0; s < d.points.size(); ++s)
    {
        const CMat h = los_channel(bs, ue_template.translated(d.points[s]), wavelength);
        d.atoms.col(static_cast<Eigen::Index>(s)) = h.reshaped();
    }
    return d;
}

SphericalDictionary build_spherical_baseline(const ArrayGeometry &bs, int angle_grid, const std::vector<double> &rings,
                                             double wavelength)
{
    if (angle_grid < 1 || rings.empty())
        throw Error(ErrorCode::invalid_argument, "spherical dictionary needs a non-empty grid");
    SphericalDictionary d;
    d.grid = angle_grid == 1 ? std::vector<double>{0.0} : cosine_grid(angle_grid);
    d.rings = rings;
    const Eigen::Index cols = static_cast<Eigen::Index>(d.grid.size() * d.grid.size() * rings.size());
    d.atoms.resize(bs.size(), cols);
    Eigen::Index c = 0;
    for (double ky : d.grid)
        for (double kz : d.grid)
        {
            const double rad = 1.0 - ky * ky - kz * kz;
            Vec3 k = rad > 0.0 ? Vec3(std::sqrt(rad), ky, kz) : Vec3(0.0, ky, kz).normalized();
            for (double r : rings)
                d.atoms.col(c++) = near_field_steering(bs, bs.center() + r * k, wavelength);
        }
    return d;
}

std::vector<double> reciprocal_rings(double r_min, double r_max, int count)
{
    if (count < 1 || !(r_min > 0.0) || !(r_max >= r_min))
        throw Error(ErrorCode::invalid_argument, "invalid distance ring range");
    std::vector<double> rings;
    if (count == 1)
        return {r_min};
    const double a = 1.0 / r_min;
    const double b = 1.0 / r_max;
    for (int k = 0; k < count; ++k)
        rings.push_back(1.0 / (a + (b - a) * k / (count - 1)));
    return rings;
}

std::string manifest(const AngularDictionary &dict)
{
    std::ostringstream os;
    os.precision(17);
    os << "kind angular\nrows " << dict.atoms.rows() << "\ncolumns " << dict.atoms.cols() << "\ngrid_h "
       << dict.grid_h.size() << "\ngrid_v " << dict.grid_v.size() << "\ncolumn_order h_major\n";
    return os.str();
}

std::string manifest(const LocationDictionary &dict)
{
    std::ostringstream os;
    os.precision(17);
    os << "kind location\nrows " << dict.atoms.rows() << "\ncolumns " << dict.atoms.cols() << "\ncenter "
       << dict.grid.center.x() << ' ' << dict.grid.center.y() << ' ' << dict.grid.center.z() << "\nhalf_width "
       << dict.grid.half_width.x() << ' ' << dict.grid.half_width.y() << ' ' << dict.grid.half_width.z()
       << "\ncounts " << dict.grid.count_x << ' ' << dict.grid.count_y << ' ' << dict.grid.count_z
       << "\nvec column_major\n";
    return os.str();
}

std::string manifest(const SphericalDictionary &dict)
{
    std::ostringstream os;
    os.precision(17);
    os << "kind spherical\nrows " << dict.atoms.rows() << "\ncolumns " << dict.atoms.cols() << "\nangle_grid "
       << dict.grid.size() << "\nrings";
    for (double r : dict.rings)
        os << ' ' << r;
    os << '\n';
    return os.str();
}

} // namespace xlmimo
