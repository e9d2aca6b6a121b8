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

#include "xlmimo/geometry.hpp"

namespace xlmimo
{

struct Ray
{
    Vec3 origin;
    DirectionVector direction;
};

struct LocationEstimate
{
    Vec3 point = Vec3::Zero();
    double residual = 0.0;        // sum of squared point-to-ray distances at `point`
    double condition = 0.0;       // condition number of sum_i (I - k_i k_i^T)
};

/// Sum of squared distances from `p` to every ray line.
double ray_residual(const std::vector<Ray> &rays, const Vec3 &p);

/// Closed-form least-squares intersection p = (sum B_i)^-1 sum B_i o_i with B_i = I - k_i k_i^T.
/// Throws degenerate_geometry when the reciprocal condition number drops below 1e-10.
LocationEstimate ls_intersect(const std::vector<Ray> &rays);

} // namespace xlmimo
