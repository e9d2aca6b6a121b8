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

#include "xlmimo/pipeline.hpp"

namespace xlmimo
{

inline constexpr const char *config_schema = "xlmimo-experiment/1";

struct GeometryConfig
{
    int bs_h = 8;
    int bs_v = 16;
    double spacing_h = 0.0; // 0: half wavelength
    double spacing_v = 0.0;
    int tiles_h = 2;
    int tiles_v = 2;
    int rf_chains = 32;         // M_RF, across the whole array
    int antennas_per_chain = 4; // M_s
    int slots = 4;              // T
    EntryModulus modulus = EntryModulus::construction;
    int user_antennas = 2;
    double user_spacing = 0.0;  // 0: half wavelength
    Vec3 user_axis{0.0, 1.0, 0.0};
};

struct SceneConfig
{
    double carrier_hz = 6.8e9;
    Vec3 user_min{1.5, -1.5, -0.3};
    Vec3 user_max{4.5, 1.5, -0.3};
    int paths = 2;
    double los_to_nlos_db = 20.0;
    // Scatterers: a point drawn on the BS-user segment at a fraction in
    // [scatterer_near, scatterer_far], then shifted by a uniform offset in +-scatterer_spread.
    double scatterer_near = 0.2;
    double scatterer_far = 0.8;
    Vec3 scatterer_spread{0.0, 2.0, 1.0};
};

struct SolverConfig
{
    SolverKind kind = SolverKind::omp;
    int assumed_paths = 2;
    double residual_tol = 1e-3;
    int max_atoms = 0; // 0: assumed_paths + 1; -1: stop on residual_tol only
};

struct EstimatorConfig
{
    int angular_grid = 32;
    SolverConfig stage1{};
    int music_grid = 4096;
    Vec3 half_width{0.2, 0.2, 0.02};
    int count_x = 11;
    int count_y = 11;
    int count_z = 3;
    double min_x = 0.1;
    SolverConfig stage3{SolverKind::sbl, 2, 1e-3, 0};
    SblOptions sbl{};
    int dft_oversample = 2;
    int spherical_angle_grid = 32;
    int spherical_rings = 4;
    double ring_min = 1.5;
    double ring_max = 7.5;
    int eigen_rank = 0; // 0: N
};

struct SweepConfig
{
    std::vector<std::string> methods{"proposed-sbl",     "proposed-omp3",          "stage1-only",
                                     "antenna-wise-dft", "antenna-wise-spherical", "antenna-wise-subarray-dft",
                                     "eigen-dictionary", "random-combiner"};
    std::vector<double> snr_db{0.0, 10.0, 20.0};
    int trials = 50;
    std::uint64_t base_seed = 1;
    int threads = 1; // 0: hardware concurrency
};

/// Defaults are the desk profile (configs/desk.json).
struct ExperimentConfig
{
    std::string schema = config_schema;
    std::string name = "desk";
    GeometryConfig geometry{};
    SceneConfig scene{};
    EstimatorConfig estimator{};
    SweepConfig sweep{};
};

struct LoadedConfig
{
    ExperimentConfig config;
    std::vector<std::string> warnings;
};

/// Parses and validates. Missing keys take the defaults above; unknown keys are errors.
/// Throws Error(config) on any problem.
LoadedConfig parse_config(const std::string &json_text);
LoadedConfig load_config(const std::string &path);
std::string serialize_config(const ExperimentConfig &config);

/// Checks cross-field consistency; may rewrite rf_chains when M_s * M_RF != M.
std::vector<std::string> validate_config(ExperimentConfig &config);

const std::vector<std::string> &known_methods();
/// Maps aliases ("proposed") onto canonical names; throws Error(config) for unknown names.
std::string canonical_method(const std::string &name);

double nmse(const CMat &h_hat, const CMat &h);
double nmse_db(const CMat &h_hat, const CMat &h);
double rmse(const std::vector<Vec3> &estimates, const std::vector<Vec3> &truth);

/// FNV-1a over the bytes of key.
std::uint64_t fnv1a(const std::string &key);
std::uint64_t trial_seed(std::uint64_t base_seed, const std::string &method, int point, int trial);
std::uint64_t scene_seed(std::uint64_t base_seed, int point, int trial);

/// Everything that does not change between trials.
class Setup
{
public:
    explicit Setup(const ExperimentConfig &config);

    const ExperimentConfig &config() const { return config_; }
    double wavelength() const { return wavelength_; }
    const ArrayGeometry &bs() const { return tiling_.parent(); }
    const SubarrayTiling &tiling() const { return tiling_; }
    const ArrayGeometry &ue_template() const { return ue_; }
    std::shared_ptr<const CombinerDesign> combiner() const { return combiner_; }
    const AngularDictionary &angular() const { return angular_; }
    ThreeStageConfig three_stage(SolverKind stage3_kind) const;
    SolverOptions stage1_options() const;

    // Built on first use; safe to call concurrently.
    const CMat &full_dft_dictionary() const;
    const SphericalDictionary &spherical_dictionary() const;

private:
    struct Lazy;
    ExperimentConfig config_;
    double wavelength_;
    SubarrayTiling tiling_;
    ArrayGeometry ue_;
    std::shared_ptr<const CombinerDesign> combiner_;
    AngularDictionary angular_;
    std::shared_ptr<Lazy> lazy_;
};

/// A drawn scene with its realization.
struct Trial
{
    Scene scene;
    Vec3 user_center;
    ChannelRealization channel;
    double noise_var = 0.0;
};

Trial draw_trial(const Setup &setup, double snr_db, std::uint64_t seed);

struct MethodResult
{
    CMat h_hat;
    std::optional<Vec3> location;
    StageTimings timings;
    std::optional<StageOutputs> stages; // three-stage methods only
};

MethodResult run_method(const Setup &setup, const std::string &method, const Trial &trial, std::uint64_t seed);

struct ResultRow
{
    std::string method;
    int point = 0;
    double snr_db = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double nmse = 0.0;                 // linear
    std::optional<double> loc_error;   // meters
    StageTimings timings;
    std::string status = "ok";         // "ok" or "failed:<code>"

    bool ok() const { return status == "ok"; }
};

struct AggregateRow
{
    std::string method;
    double snr_db = 0.0;
    int trials = 0;
    int failed = 0;
    double nmse_mean = 0.0;   // linear mean over successful trials
    double nmse_std = 0.0;    // linear, population
    double nmse_db = 0.0;     // 10 log10(nmse_mean)
    std::optional<double> rmse_m;
    StageTimings mean_timings;
};

struct ResultTable
{
    std::vector<ResultRow> rows;
    std::vector<AggregateRow> aggregates;
};

struct SweepOptions
{
    bool record_timings = false; // wall-clock columns make output run-dependent
};

ResultTable run_sweep(const ExperimentConfig &config, const SweepOptions &opts = {});
std::vector<AggregateRow> aggregate(const std::vector<ResultRow> &rows, const std::vector<std::string> &methods);

inline constexpr const char *csv_header =
    "method,snr_db,trial,seed,nmse_db,rmse_m,t_stage1_ms,t_stage2_ms,t_stage3_ms,status";

std::string to_csv(const ResultTable &table, bool with_timings);
std::string to_json(const ResultTable &table, const ExperimentConfig &config, bool with_timings);

/// JSON dump of one simulated trial: truth, estimates, metrics and per-stage diagnostics.
std::string simulation_report(const Setup &setup, const std::string &method, const Trial &trial,
                              const MethodResult &result, std::uint64_t seed, bool with_timings);

} // namespace xlmimo
