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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xlmimo/channel.hpp"
#include "xlmimo/dictionary.hpp"
#include "xlmimo/localization.hpp"
#include "xlmimo/sensing.hpp"
#include "xlmimo/solvers.hpp"

namespace xlmimo
{

/// Received pilots for B blocks: column tau is y_tau = sqrt(p) V H w_tau + Vhat n_tau.
struct ReceptionRecord
{
    CMat y; // (T*M_RF) x B
    std::shared_ptr<const CombinerDesign> combiner;
    PrecoderDesign precoder;
    double block_power = 0.0;
    double noise_var = 0.0;
    std::uint64_t noise_seed = 0;

    int blocks() const { return static_cast<int>(y.cols()); }
};

/// `block_power` is the per-block transmit power p; noise is CN(0, noise_var I_{TM}) per block.
ReceptionRecord simulate_reception(const CMat &h, std::shared_ptr<const CombinerDesign> combiner,
                                   const PrecoderDesign &precoder, double block_power, double noise_var,
                                   std::uint64_t seed);

enum class SolverKind
{
    omp,
    sbl
};

struct SolverOptions
{
    SolverKind kind = SolverKind::omp;
    int assumed_paths = 2;     // OMP stops after assumed_paths + 1 atoms ...
    double residual_tol = 1e-3; // ... or once |r| / |y| falls to this level
    int max_atoms = 0;          // overrides assumed_paths + 1 when > 0; -1 leaves only residual_tol
    SblOptions sbl;
};

struct TileEstimate
{
    SparseSolution solution;
    CVec channel; // A x_hat, the estimate of sum_n h_i^(n)
};

/// Per-tile sparse recovery over the angular dictionary from a single uniform-precoder block.
std::vector<TileEstimate> stage1(const ReceptionRecord &record, const SubarrayTiling &tiling,
                                 const AngularDictionary &dict, const SolverOptions &opts);

/// Observation rows of tile i, y_i = [y_{i,1}; ...; y_{i,T}].
CVec tile_observation(const ReceptionRecord &record, int tile, int block = 0);

struct Stage2Options
{
    int music_grid = 4096;
};

struct TileDirection
{
    int tile = 0;
    double k_y = 0.0;
    double k_z = 0.0;
    bool used = false;
    std::string failure;
};

struct Stage2Result
{
    LocationEstimate location;
    std::vector<TileDirection> directions;
    std::vector<Ray> rays;
};

/// Covariance, Kronecker factor extraction and two 1D MUSIC runs per tile, then the
/// least-squares ray intersection. Tiles whose directions fail are dropped.
Stage2Result stage2(const std::vector<CVec> &tile_channels, const SubarrayTiling &tiling, double wavelength,
                    const Stage2Options &opts);

struct Stage3Options
{
    Vec3 half_width{0.2, 0.2, 0.02};
    int count_x = 11;
    int count_y = 11;
    int count_z = 3;
    double min_x = 0.1;
    SolverOptions solver{SolverKind::sbl, 2, 1e-3, 0, {}};
};

struct Stage3Result
{
    SparseSolution solution;
    CMat h_hat;
    int dictionary_size = 0;
};

/// Location-aided recovery of the full M x N channel around `center`.
Stage3Result stage3(const ReceptionRecord &record, const Vec3 &center, const ArrayGeometry &bs,
                    const ArrayGeometry &ue_template, double wavelength, const Stage3Options &opts);

/// Everything the proposed estimator needs besides the scene.
struct ThreeStageConfig
{
    int angular_grid = 64;
    SolverOptions stage1{};
    Stage2Options stage2{};
    Stage3Options stage3{};
};

struct StageTimings
{
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
    double stage3_ms = 0.0;
};

struct StageOutputs
{
    std::vector<TileEstimate> tiles;
    Stage2Result localization;
    Stage3Result channel;
    StageTimings timings;
};

/// Failure in a named stage; wraps the original error code.
class StageError : public Error
{
public:
    StageError(std::string stage, const Error &inner)
        : Error(inner.code(), stage + ": " + inner.what()), stage_(std::move(stage)) {}
    const std::string &stage() const { return stage_; }

private:
    std::string stage_;
};

/// Stage 1 -> Stage 2 -> Stage 3 on an existing single-block reception.
StageOutputs run_three_stage(const ReceptionRecord &record, const SubarrayTiling &tiling,
                             const AngularDictionary &dict, const ArrayGeometry &ue_template, double wavelength,
                             const ThreeStageConfig &config);

/// Stage-1-only channel: each tile's summed-channel estimate spread over the user
/// antennas with the far-field user-side phase of that tile's dominant atom.
CMat stage1_channel(const std::vector<TileEstimate> &tiles, const AngularDictionary &dict,
                    const SubarrayTiling &tiling, const ArrayGeometry &ue_template, double wavelength);

/// Per-user-antenna recovery from a B = N DFT-precoded reception over a full-array dictionary.
CMat baseline_antenna_wise(const ReceptionRecord &record, const CMat &dictionary, const SolverOptions &opts);

/// Same, with every tile solved separately over the (tile-sized) angular dictionary.
CMat baseline_antenna_wise_tiles(const ReceptionRecord &record, const SubarrayTiling &tiling,
                                 const AngularDictionary &dict, const SolverOptions &opts);

/// Least-squares fit over the leading `rank` singular pairs of H_los at `center`.
CMat baseline_eigen_dictionary(const ReceptionRecord &record, const Vec3 &center, const ArrayGeometry &bs,
                               const ArrayGeometry &ue_template, double wavelength, int rank);

/// sum_tau p * |w_tau|^2 for a record.
double pilot_energy(const ReceptionRecord &record);

} // namespace xlmimo
