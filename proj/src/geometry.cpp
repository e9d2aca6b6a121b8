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

#include "xlmimo/geometry.hpp"

#include <cmath>
#include <string>

namespace xlmimo
{

const char *to_string(ErrorCode code) noexcept
{
    switch (code)
    {
    case ErrorCode::invalid_argument:
        return "invalid-argument";
    case ErrorCode::invalid_direction:
        return "invalid-direction";
    case ErrorCode::singular_geometry:
        return "singular-geometry";
    case ErrorCode::degenerate_geometry:
        return "degenerate-geometry";
    case ErrorCode::degenerate_grid:
        return "degenerate-grid";
    case ErrorCode::degenerate_input:
        return "degenerate-input";
    case ErrorCode::infeasible_design:
        return "infeasible-design";
    case ErrorCode::numerical_rank:
        return "numerical-rank";
    case ErrorCode::divergence:
        return "divergence";
    case ErrorCode::config:
        return "config";
    case ErrorCode::io:
        return "io";
    }
    return "unknown";
}

ArrayGeometry::ArrayGeometry(ArrayKind kind, int count_h, int count_v, double spacing_h, double spacing_v,
                             const Vec3 &center, const Vec3 &axis_h, const Vec3 &axis_v)
    : kind_(kind), count_h_(count_h), count_v_(count_v), spacing_h_(spacing_h), spacing_v_(spacing_v),
      center_(center), axis_h_(axis_h), axis_v_(axis_v), positions_(3, count_h * count_v)
{
    const double off_h = 0.5 * (count_h - 1);
    const double off_v = 0.5 * (count_v - 1);
    for (int h = 0; h < count_h; ++h)
        for (int v = 0; v < count_v; ++v)
            positions_.col(index(h, v)) =
                center + (h - off_h) * spacing_h * axis_h + (v - off_v) * spacing_v * axis_v;
}

ArrayGeometry ArrayGeometry::upa(int count_h, int count_v, double spacing_h, double spacing_v, const Vec3 &center)
{
    if (count_h < 1 || count_v < 1)
        throw Error(ErrorCode::invalid_argument, "array counts must be positive");
    if (!(spacing_h > 0.0) || !(spacing_v > 0.0))
        throw Error(ErrorCode::invalid_argument, "array spacings must be positive");
    return ArrayGeometry(ArrayKind::planar, count_h, count_v, spacing_h, spacing_v, center, Vec3::UnitY(),
                         Vec3::UnitZ());
}

ArrayGeometry ArrayGeometry::ula(int count, double spacing, const Vec3 &center, const Vec3 &axis)
{
    if (count < 1)
        throw Error(ErrorCode::invalid_argument, "array count must be positive");
    if (!(spacing > 0.0))
        throw Error(ErrorCode::invalid_argument, "array spacing must be positive");
    const double n = axis.norm();
    if (!(n > 0.0))
        throw Error(ErrorCode::invalid_argument, "linear array axis must be non-zero");
    const Vec3 unit = axis / n;
    // The second axis is unused (count 1) but kept orthogonal for completeness.
    Vec3 other = unit.unitOrthogonal();
    return ArrayGeometry(ArrayKind::linear, count, 1, spacing, spacing, center, unit, other);
}

ArrayGeometry ArrayGeometry::translated(const Vec3 &new_center) const
{
    return ArrayGeometry(kind_, count_h_, count_v_, spacing_h_, spacing_v_, new_center, axis_h_, axis_v_);
}

SubarrayTiling::SubarrayTiling(const ArrayGeometry &parent, int tiles_h, int tiles_v)
    : parent_(parent), tiles_h_(tiles_h), tiles_v_(tiles_v)
{
    if (tiles_h < 1 || tiles_v < 1)
        throw Error(ErrorCode::invalid_argument, "tile counts must be positive");
    if (parent.count_h() % tiles_h != 0 || parent.count_v() % tiles_v != 0)
        throw Error(ErrorCode::invalid_argument,
                    "tile counts " + std::to_string(tiles_h) + "x" + std::to_string(tiles_v) +
                        " do not divide the array " + std::to_string(parent.count_h()) + "x" +
                        std::to_string(parent.count_v()));

    const int mh = parent.count_h() / tiles_h;
    const int mv = parent.count_v() / tiles_v;
    tiles_.reserve(static_cast<size_t>(tiles_h * tiles_v));
    for (int th = 0; th < tiles_h; ++th)
    {
        for (int tv = 0; tv < tiles_v; ++tv)
        {
            std::vector<int> idx;
            idx.reserve(static_cast<size_t>(mh * mv));
            Vec3 centroid = Vec3::Zero();
            for (int h = 0; h < mh; ++h)
                for (int v = 0; v < mv; ++v)
                {
                    const int m = parent.index(th * mh + h, tv * mv + v);
                    idx.push_back(m);
                    centroid += parent.position(m);
                }
            centroid /= static_cast<double>(mh * mv);

            ArrayGeometry geom = parent.kind() == ArrayKind::planar
                                     ? ArrayGeometry::upa(mh, mv, parent.spacing_h(), parent.spacing_v(), centroid)
                                     : ArrayGeometry::ula(mh, parent.spacing_h(), centroid, parent.axis_h());
            tiles_.push_back(Tile{std::move(geom), std::move(idx), th, tv});
        }
    }
}

DirectionVector::DirectionVector(const Vec3 &k) : k_(k)
{
    if (std::abs(k.norm() - 1.0) > 1e-12)
        throw Error(ErrorCode::invalid_direction, "direction vector must have unit norm");
}

DirectionVector wave_vector(double theta, double phi)
{
    const double st = std::sin(theta);
    return DirectionVector(Vec3(st * std::cos(phi), st * std::sin(phi), std::cos(theta)));
}

DirectionVector recover_kx(double k_y, double k_z, double tolerance)
{
    const double radicand = 1.0 - k_y * k_y - k_z * k_z;
    if (!std::isfinite(radicand) || radicand < -tolerance)
        throw Error(ErrorCode::invalid_direction,
                    "k_y^2 + k_z^2 = " + std::to_string(1.0 - radicand) + " exceeds one");
    Vec3 k(std::sqrt(std::max(radicand, 0.0)), k_y, k_z);
    // Clamping the radicand can leave the norm a hair above one.
    k /= k.norm();
    return DirectionVector(k);
}

} // namespace xlmimo
