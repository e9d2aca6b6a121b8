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

#include <cstdint>
#include <optional>
#include <vector>

#include "xlmimo/geometry.hpp"
#include "xlmimo/types.hpp"

namespace xlmimo
{

/// One NLoS path: a point scatterer seen by the BS in the near field and a
/// far-field departure angle at the user.
struct PathParams
{
    Vec3 scatterer = Vec3::Zero();
    double aod = 0.0;            // radians from user-array broadside
    std::optional<cd> gain;      // drawn by synthesize() when empty
};

struct Scene
{
    ArrayGeometry bs;
    ArrayGeometry ue;
    std::vector<PathParams> paths;
    double wavelength = 0.0;
    double tx_power = 1.0;
    double noise_var = 0.0;
    double los_to_nlos_db = 20.0;
};

struct ChannelRealization
{
    CMat h;
    CMat los;
    CMat nlos;
    std::vector<cd> gains; // realized NLoS gains, one per path
};

/// Entry (m, n) = exp(-j 2 pi r_mn / lambda) / r_mn.
CMat los_channel(const ArrayGeometry &bs, const ArrayGeometry &ue, double wavelength);

/// Entry m = exp(-j 2 pi |p_m - source| / lambda); unit modulus.
CVec near_field_steering(const ArrayGeometry &geom, const Vec3 &source, double wavelength);

/// Entry m = exp(j 2 pi / lambda * cosine * (m - (count-1)/2) * spacing), m = 0..count-1.
CVec far_field_steering(int count, double spacing, double cosine, double wavelength);

/// a_h(k_y) (x) a_v(k_z) for a planar array; the far-field limit of near_field_steering.
CVec planar_far_field_steering(int count_h, int count_v, double spacing_h, double spacing_v, double k_y,
                               double k_z, double wavelength);

/// LoS plus NLoS channel. Paths without a preset gain draw
///   gain = sqrt(rho) * CN(0, 1),  rho = |H_los|_F^2 / (10^(ratio/10) * L * M * N)
/// so that the expected NLoS power sits `los_to_nlos_db` below the LoS power.
ChannelRealization synthesize(const Scene &scene, std::uint64_t seed);

} // namespace xlmimo
