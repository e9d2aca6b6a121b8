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

#include "xlmimo/sensing.hpp"

#include <cmath>
#include <random>
#include <string>

namespace xlmimo
{

namespace
{

constexpr double identity_tolerance = 1e-10;

int antennas_per_chain_or_throw(const SubarrayTiling &tiling, int chains_per_tile)
{
    if (chains_per_tile < 1)
        throw Error(ErrorCode::invalid_argument, "RF chains per tile must be positive");
    if (tiling.tile_size() % chains_per_tile != 0)
        throw Error(ErrorCode::invalid_argument, "RF chains per tile (" + std::to_string(chains_per_tile) +
                                                     ") must divide the tile size (" +
                                                     std::to_string(tiling.tile_size()) + ")");
    return tiling.tile_size() / chains_per_tile;
}

} // namespace

CombinerDesign::CombinerDesign(const SubarrayTiling &tiling, int slots, int chains_per_tile,
                               std::vector<CMat> tile_blocks)
    : slots_(slots), chains_per_tile_(chains_per_tile),
      antennas_per_chain_(antennas_per_chain_or_throw(tiling, chains_per_tile)), tile_blocks_(std::move(tile_blocks))
{
    if (static_cast<int>(tile_blocks_.size()) != tiling.size())
        throw Error(ErrorCode::invalid_argument, "one combiner block per tile is required");

    const int m_total = tiling.parent().size();
    const int m_rf = total_chains();
    global_ = CMat::Zero(static_cast<Eigen::Index>(slots) * m_rf, m_total);
    tile_antennas_.reserve(tile_blocks_.size());
    for (int i = 0; i < tiling.size(); ++i)
    {
        const CMat &vi = tile_blocks_[i];
        const auto &ant = tiling.tile(i).antennas;
        if (vi.rows() != static_cast<Eigen::Index>(slots) * chains_per_tile ||
            vi.cols() != static_cast<Eigen::Index>(ant.size()))
            throw Error(ErrorCode::invalid_argument, "combiner block has the wrong shape");
        for (int t = 0; t < slots; ++t)
            for (int m = 0; m < chains_per_tile; ++m)
            {
                const int row = t * m_rf + i * chains_per_tile + m;
                for (int a = 0; a < static_cast<int>(ant.size()); ++a)
                    global_(row, ant[a]) = vi(t * chains_per_tile + m, a);
            }
        tile_antennas_.push_back(ant);
    }
}

CMat CombinerDesign::aggregated_hat() const
{
    const int m_rf = total_chains();
    const int m = num_antennas();
    CMat hat = CMat::Zero(static_cast<Eigen::Index>(slots_) * m_rf, static_cast<Eigen::Index>(slots_) * m);
    for (int t = 0; t < slots_; ++t)
        hat.block(static_cast<Eigen::Index>(t) * m_rf, static_cast<Eigen::Index>(t) * m, m_rf, m) = slot(t);
    return hat;
}

CVec CombinerDesign::apply_hat(const CVec &noise) const
{
    const int m_rf = total_chains();
    const int m = num_antennas();
    if (noise.size() != static_cast<Eigen::Index>(slots_) * m)
        throw Error(ErrorCode::invalid_argument, "noise vector must have T*M entries");
    CVec out(static_cast<Eigen::Index>(slots_) * m_rf);
    // Each chain touches only its own M_s antennas, so work tile by tile.
    for (int t = 0; t < slots_; ++t)
        for (int i = 0; i < num_tiles(); ++i)
        {
            const auto &ant = tile_antennas_[i];
            CVec local(static_cast<Eigen::Index>(ant.size()));
            for (size_t a = 0; a < ant.size(); ++a)
                local(static_cast<Eigen::Index>(a)) = noise(static_cast<Eigen::Index>(t) * m + ant[a]);
            out.segment(static_cast<Eigen::Index>(t) * m_rf + i * chains_per_tile_, chains_per_tile_).noalias() =
                tile_blocks_[i].middleRows(static_cast<Eigen::Index>(t) * chains_per_tile_, chains_per_tile_) * local;
        }
    return out;
}

std::vector<int> CombinerDesign::tile_rows(int i) const
{
    std::vector<int> rows;
    rows.reserve(static_cast<size_t>(slots_ * chains_per_tile_));
    for (int t = 0; t < slots_; ++t)
        for (int m = 0; m < chains_per_tile_; ++m)
            rows.push_back(t * total_chains() + i * chains_per_tile_ + m);
    return rows;
}

CombinerCheck CombinerDesign::check(EntryModulus modulus) const
{
    CombinerCheck c;
    c.scale = modulus == EntryModulus::construction ? 1.0
                                                    : static_cast<double>(slots_) / antennas_per_chain_;
    for (const CMat &vi : tile_blocks_)
    {
        const CMat g = vi.adjoint() * vi;
        c.tiles = std::max(c.tiles, (g - c.scale * CMat::Identity(g.rows(), g.cols())).norm());
    }
    const CMat g = global_.adjoint() * global_;
    c.global = (g - c.scale * CMat::Identity(g.rows(), g.cols())).norm();
    for (int t = 0; t < slots_; ++t)
    {
        const CMat vt = slot(t);
        const CMat gg = vt * vt.adjoint();
        c.slots = std::max(c.slots, (gg - CMat::Identity(gg.rows(), gg.cols())).norm());
    }
    for (int m = 0; m < chains_per_tile_; ++m)
    {
        const CMat f = dft_stride_block(slots_, chains_per_tile_, antennas_per_chain_, m);
        c.stride = std::max(c.stride, (f.adjoint() * f - CMat::Identity(antennas_per_chain_, antennas_per_chain_)).norm());
    }
    return c;
}

CMat dft_stride_block(int slots, int chains_per_tile, int antennas_per_chain, int chain)
{
    const int size = slots * chains_per_tile;
    const double amp = 1.0 / std::sqrt(static_cast<double>(slots));
    CMat f(slots, antennas_per_chain);
    for (int t = 0; t < slots; ++t)
    {
        const long long row = static_cast<long long>(t) * chains_per_tile + chain;
        for (int s = 0; s < antennas_per_chain; ++s)
        {
            // Reduce the exponent modulo the DFT size before converting to an angle.
            const long long k = (row * s) % size;
            f(t, s) = std::polar(amp, -2.0 * pi * static_cast<double>(k) / size);
        }
    }
    return f;
}

CombinerDesign design_combiner(int slots, const SubarrayTiling &tiling, int chains_per_tile, EntryModulus modulus)
{
    const int ms = antennas_per_chain_or_throw(tiling, chains_per_tile);
    if (slots < ms)
        throw Error(ErrorCode::infeasible_design, "T = " + std::to_string(slots) +
                                                      " is below M_s = " + std::to_string(ms) +
                                                      "; stride DFT rows cannot be orthonormal");

    const double rescale =
        modulus == EntryModulus::construction ? 1.0 : std::sqrt(static_cast<double>(slots) / ms);
    std::vector<CMat> blocks;
    blocks.reserve(static_cast<size_t>(tiling.size()));
    // Every tile uses the same stride rule, so one block serves all tiles.
    CMat vi = CMat::Zero(static_cast<Eigen::Index>(slots) * chains_per_tile, tiling.tile_size());
    for (int m = 0; m < chains_per_tile; ++m)
    {
        const CMat f = dft_stride_block(slots, chains_per_tile, ms, m) * rescale;
        for (int t = 0; t < slots; ++t)
            vi.block(static_cast<Eigen::Index>(t) * chains_per_tile + m, static_cast<Eigen::Index>(m) * ms, 1, ms) =
                f.row(t);
    }
    for (int i = 0; i < tiling.size(); ++i)
        blocks.push_back(vi);

    CombinerDesign design(tiling, slots, chains_per_tile, std::move(blocks));
    const CombinerCheck c = design.check(modulus);
    const bool slots_white = slots != ms || c.slots < identity_tolerance;
    if (c.tiles >= identity_tolerance || c.global >= identity_tolerance || c.stride >= 1e-12 || !slots_white)
        throw Error(ErrorCode::infeasible_design, "combiner identities failed verification");
    return design;
}

CombinerDesign random_combiner(int slots, const SubarrayTiling &tiling, int chains_per_tile, std::uint64_t seed)
{
    const int ms = antennas_per_chain_or_throw(tiling, chains_per_tile);
    if (slots < ms)
        throw Error(ErrorCode::infeasible_design, "T must be at least M_s");
    const double amp = 1.0 / std::sqrt(static_cast<double>(ms));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(-pi, pi);
    std::vector<CMat> blocks;
    for (int i = 0; i < tiling.size(); ++i)
    {
        CMat vi = CMat::Zero(static_cast<Eigen::Index>(slots) * chains_per_tile, tiling.tile_size());
        for (int t = 0; t < slots; ++t)
            for (int m = 0; m < chains_per_tile; ++m)
                for (int s = 0; s < ms; ++s)
                    vi(t * chains_per_tile + m, m * ms + s) = std::polar(amp, phase(rng));
        blocks.push_back(std::move(vi));
    }
    return CombinerDesign(tiling, slots, chains_per_tile, std::move(blocks));
}

PrecoderDesign design_precoder_dft(int n)
{
    if (n < 1)
        throw Error(ErrorCode::invalid_argument, "precoder size must be positive");
    PrecoderDesign p;
    p.w.resize(n, n);
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            p.w(a, b) = std::polar(amp, -2.0 * pi * static_cast<double>((a * b) % n) / n);
    return p;
}

PrecoderDesign design_precoder_uniform(int n)
{
    if (n < 1)
        throw Error(ErrorCode::invalid_argument, "precoder size must be positive");
    PrecoderDesign p;
    p.w = CMat::Constant(n, 1, cd(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
    return p;
}

} // namespace xlmimo
