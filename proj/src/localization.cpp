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

#include "xlmimo/localization.hpp"

#include <algorithm>
#include <cmath>

namespace xlmimo
{

double ray_residual(const std::vector<Ray> &rays, const Vec3 &p)
{
    double f = 0.0;
    for (const Ray &ray : rays)
    {
        // |d x k|^2 rather than |d|^2 - (k.d)^2, which cancels badly near the optimum
        f += (ray.origin - p).cross(ray.direction.vec()).squaredNorm();
    }
    return f;
}

LocationEstimate ls_intersect(const std::vector<Ray> &rays)
{
    if (rays.size() < 2)
        throw Error(ErrorCode::invalid_argument, "localization needs at least two rays");

    Mat3 sum_b = Mat3::Zero();
    Vec3 rhs = Vec3::Zero();
    for (const Ray &ray : rays)
    {
        const Vec3 k = ray.direction.vec();
        const Mat3 b = Mat3::Identity() - k * k.transpose();
        sum_b += b;
        rhs += b * ray.origin;
    }

    Eigen::SelfAdjointEigenSolver<Mat3> eig(sum_b);
    const Vec3 ev = eig.eigenvalues();
    const double rcond = ev.maxCoeff() > 0.0 ? ev.minCoeff() / ev.maxCoeff() : 0.0;
    if (!(rcond >= 1e-10))
        throw Error(ErrorCode::degenerate_geometry, "rays are (nearly) parallel; no unique intersection");

    LocationEstimate est;
    est.point = sum_b.ldlt().solve(rhs);
    est.condition = 1.0 / rcond;
    // The residual is a sum of squares; clamp the rounding noise at an exact intersection.
    est.residual = std::max(ray_residual(rays, est.point), 0.0);
    return est;
}

} // namespace xlmimo
