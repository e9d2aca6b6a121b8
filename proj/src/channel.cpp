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

#include "xlmimo/channel.hpp"

#include <cmath>
#include <random>

namespace xlmimo
{

namespace
{

constexpr double min_distance = 1e-12;

cd phase_term(double distance, double wavenumber) { return std::polar(1.0, -wavenumber * distance); }

} // namespace

CMat los_channel(const ArrayGeometry &bs, const ArrayGeometry &ue, double wavelength)
{
    const double kw = 2.0 * pi / wavelength;
    CMat h(bs.size(), ue.size());
    for (int n = 0; n < ue.size(); ++n)
    {
        const Vec3 pn = ue.position(n);
        for (int m = 0; m < bs.size(); ++m)
        {
            const double r = (bs.position(m) - pn).norm();
            if (r < min_distance)
                throw Error(ErrorCode::singular_geometry, "coincident BS and UE antennas");
            h(m, n) = phase_term(r, kw) / r;
        }
    }
    return h;
}

CVec near_field_steering(const ArrayGeometry &geom, const Vec3 &source, double wavelength)
{
    const double kw = 2.0 * pi / wavelength;
    CVec a(geom.size());
    for (int m = 0; m < geom.size(); ++m)
    {
        const double r = (geom.position(m) - source).norm();
        if (r < min_distance)
            throw Error(ErrorCode::singular_geometry, "source coincides with an antenna");
        a(m) = phase_term(r, kw);
    }
    return a;
}

CVec far_field_steering(int count, double spacing, double cosine, double wavelength)
{
    const double kw = 2.0 * pi / wavelength;
    const double off = 0.5 * (count - 1);
    CVec a(count);
    for (int m = 0; m < count; ++m)
        a(m) = std::polar(1.0, kw * cosine * (m - off) * spacing);
    return a;
}

CVec planar_far_field_steering(int count_h, int count_v, double spacing_h, double spacing_v, double k_y,
                               double k_z, double wavelength)
{
    const CVec ah = far_field_steering(count_h, spacing_h, k_y, wavelength);
    const CVec av = far_field_steering(count_v, spacing_v, k_z, wavelength);
    CVec a(count_h * count_v);
    for (int h = 0; h < count_h; ++h)
        a.segment(h * count_v, count_v) = ah(h) * av;
    return a;
}

ChannelRealization synthesize(const Scene &scene, std::uint64_t seed)
{
    if (scene.ue.center().x() <= 0.0)
        throw Error(ErrorCode::invalid_argument, "user center must lie in the x > 0 half-space");

    ChannelRealization out;
    out.los = los_channel(scene.bs, scene.ue, scene.wavelength);
    out.nlos = CMat::Zero(out.los.rows(), out.los.cols());

    const int num_paths = static_cast<int>(scene.paths.size());
    const double m = scene.bs.size();
    const double n = scene.ue.size();
    const double rho = num_paths > 0 ? out.los.squaredNorm() /
                                           (std::pow(10.0, scene.los_to_nlos_db / 10.0) * num_paths * m * n)
                                     : 0.0;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (const PathParams &path : scene.paths)
    {
        cd gain;
        if (path.gain)
            gain = *path.gain;
        else
        {
            const double re = normal(rng);
            const double im = normal(rng);
            gain = std::sqrt(rho) * cd(re, im);
        }
        out.gains.push_back(gain);
        if (gain == cd(0.0))
            continue;
        const CVec bs_side = near_field_steering(scene.bs, path.scatterer, scene.wavelength);
        const CVec ue_side = far_field_steering(scene.ue.size(), scene.ue.spacing_h(), std::sin(path.aod),
                                                scene.wavelength);
        out.nlos.noalias() += gain * bs_side * ue_side.adjoint();
    }
    out.h = out.los + out.nlos;
    return out;
}

} // namespace xlmimo
