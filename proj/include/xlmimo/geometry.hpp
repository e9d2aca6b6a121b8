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

enum class ArrayKind
{
    planar,
    linear
};

/// Uniform array with two in-plane axes.
///
/// Antenna m = h * count_v() + v sits at
///   center + (h - (M_h-1)/2) * spacing_h * axis_h + (v - (M_v-1)/2) * spacing_v * axis_v,
/// so the vertical index runs fastest. This ordering makes a planar far-field
/// steering vector equal to a_h (x) a_v.
class ArrayGeometry
{
public:
    /// Planar array in the yz-plane through `center` (horizontal along y, vertical along z).
    static ArrayGeometry upa(int count_h, int count_v, double spacing_h, double spacing_v, const Vec3 &center);

    /// Linear array of `count` elements along the unit vector `axis`.
    static ArrayGeometry ula(int count, double spacing, const Vec3 &center, const Vec3 &axis);

    ArrayKind kind() const { return kind_; }
    int size() const { return count_h_ * count_v_; }
    int count_h() const { return count_h_; }
    int count_v() const { return count_v_; }
    double spacing_h() const { return spacing_h_; }
    double spacing_v() const { return spacing_v_; }
    const Vec3 &center() const { return center_; }
    const Vec3 &axis_h() const { return axis_h_; }
    const Vec3 &axis_v() const { return axis_v_; }

    Vec3 position(int m) const { return positions_.col(m); }
    const Eigen::Matrix3Xd &positions() const { return positions_; }

    int index(int h, int v) const { return h * count_v_ + v; }

    /// Same layout moved so that its center is `new_center`.
    ArrayGeometry translated(const Vec3 &new_center) const;

private:
    ArrayGeometry(ArrayKind kind, int count_h, int count_v, double spacing_h, double spacing_v,
                  const Vec3 &center, const Vec3 &axis_h, const Vec3 &axis_v);

    ArrayKind kind_;
    int count_h_;
    int count_v_;
    double spacing_h_;
    double spacing_v_;
    Vec3 center_;
    Vec3 axis_h_;
    Vec3 axis_v_;
    Eigen::Matrix3Xd positions_;
};

struct Tile
{
    ArrayGeometry geometry;
    std::vector<int> antennas; // parent indices, in the tile's own (vertical-fastest) order
    int tile_h = 0;
    int tile_v = 0;
};

/// Partition of a planar array into contiguous, axis-aligned tiles.
/// Tile i = tile_h * tiles_v() + tile_v.
class SubarrayTiling
{
public:
    SubarrayTiling(const ArrayGeometry &parent, int tiles_h, int tiles_v);

    const ArrayGeometry &parent() const { return parent_; }
    int tiles_h() const { return tiles_h_; }
    int tiles_v() const { return tiles_v_; }
    int size() const { return static_cast<int>(tiles_.size()); }
    int tile_count_h() const { return parent_.count_h() / tiles_h_; }
    int tile_count_v() const { return parent_.count_v() / tiles_v_; }
    int tile_size() const { return tile_count_h() * tile_count_v(); }

    const Tile &tile(int i) const { return tiles_[i]; }
    const std::vector<Tile> &tiles() const { return tiles_; }

private:
    ArrayGeometry parent_;
    int tiles_h_;
    int tiles_v_;
    std::vector<Tile> tiles_;
};

/// Unit propagation direction (direction cosines).
class DirectionVector
{
public:
    explicit DirectionVector(const Vec3 &k);

    const Vec3 &vec() const { return k_; }
    double x() const { return k_.x(); }
    double y() const { return k_.y(); }
    double z() const { return k_.z(); }

private:
    Vec3 k_;
};

/// (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)); theta is elevation from +z, phi azimuth from +x.
DirectionVector wave_vector(double theta, double phi);

/// Completes a direction from its y and z cosines with the non-negative x root.
/// Throws invalid_direction when k_y^2 + k_z^2 exceeds 1 by more than `tolerance`.
DirectionVector recover_kx(double k_y, double k_z, double tolerance = 1e-12);

} // namespace xlmimo
