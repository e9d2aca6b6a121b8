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
#include <vector>

#include "xlmimo/geometry.hpp"
#include "xlmimo/types.hpp"

namespace xlmimo
{

/// Per-element modulus of the DFT-based combiner. `construction` (1/sqrt(T)) keeps
/// V_i^H V_i = I for any T >= M_s; `per_chain` (1/sqrt(M_s)) keeps every RF chain at
/// unit power, which scales V^H V by T / M_s. Both coincide when T == M_s.
enum class EntryModulus
{
    construction,
    per_chain
};

/// Measured residuals of the combiner identities (Frobenius norms).
struct CombinerCheck
{
    double tiles = 0.0;      // max_i |V_i^H V_i - c I|
    double global = 0.0;     // |V^H V - c I|
    double slots = 0.0;      // max_t |V_t V_t^H - I|, only meaningful when T == M_s
    double stride = 0.0;     // max_m |F_m^H F_m - I|
    double scale = 1.0;      // the identity scale c
};

/// Sub-connected analog combiner over T time slots.
///
/// Row layout of the aggregated V (T*M_RF x M): slot-major, then tile, then the
/// tile's RF chain, i.e. row t*M_RF + i*M_rf + m. Chain m of tile i drives the
/// tile-local antennas [m*M_s, (m+1)*M_s). Columns use the parent array index.
class CombinerDesign
{
public:
    CombinerDesign(const SubarrayTiling &tiling, int slots, int chains_per_tile, std::vector<CMat> tile_blocks);

    int slots() const { return slots_; }
    int chains_per_tile() const { return chains_per_tile_; }
    int antennas_per_chain() const { return antennas_per_chain_; }
    int num_tiles() const { return static_cast<int>(tile_blocks_.size()); }
    int total_chains() const { return chains_per_tile_ * num_tiles(); }
    int num_antennas() const { return static_cast<int>(global_.cols()); }
    int num_outputs() const { return slots_ * total_chains(); }

    /// V_i, (T*M_rf x M_i), row t*M_rf + m.
    const CMat &tile_block(int i) const { return tile_blocks_[i]; }
    /// Aggregated V (T*M_RF x M).
    const CMat &aggregated() const { return global_; }
    /// V_t (M_RF x M).
    CMat slot(int t) const { return global_.middleRows(static_cast<Eigen::Index>(t) * total_chains(), total_chains()); }
    /// Block-diagonal blkdiag{V_1, ..., V_T} (T*M_RF x T*M). Dense; meant for small arrays.
    CMat aggregated_hat() const;
    /// blkdiag{V_1, ..., V_T} * noise without forming the dense matrix; `noise` is [n_1; ...; n_T].
    CVec apply_hat(const CVec &noise) const;

    /// Rows of the aggregated output that belong to tile i, in V_i row order.
    std::vector<int> tile_rows(int i) const;
    const std::vector<int> &tile_antennas(int i) const { return tile_antennas_[i]; }

    CombinerCheck check(EntryModulus modulus = EntryModulus::construction) const;

private:
    int slots_;
    int chains_per_tile_;
    int antennas_per_chain_;
    std::vector<CMat> tile_blocks_;
    std::vector<std::vector<int>> tile_antennas_;
    CMat global_;
};

/// DFT-stride combiner whose identities are verified before returning.
/// Throws infeasible_design when T < M_s and invalid_argument on divisibility errors.
CombinerDesign design_combiner(int slots, const SubarrayTiling &tiling, int chains_per_tile,
                               EntryModulus modulus = EntryModulus::construction);

/// Uniform random phases of modulus 1/sqrt(M_s); no identities are enforced.
CombinerDesign random_combiner(int slots, const SubarrayTiling &tiling, int chains_per_tile, std::uint64_t seed);

/// The M_s columns / T rows stride block F_m of the T*M_rf-point DFT (entries 1/sqrt(T)).
CMat dft_stride_block(int slots, int chains_per_tile, int antennas_per_chain, int chain);

struct PrecoderDesign
{
    CMat w; // N x B
};

/// W[n, b] = exp(-j 2 pi n b / N) / sqrt(N), B = N.
PrecoderDesign design_precoder_dft(int n);

/// Single block w = 1_N / sqrt(N).
PrecoderDesign design_precoder_uniform(int n);

} // namespace xlmimo
