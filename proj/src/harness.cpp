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

#include "xlmimo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace xlmimo
{

using json = nlohmann::ordered_json;

namespace
{

[[noreturn]] void config_error(const std::string &what)
{
    throw Error(ErrorCode::config, what);
}

// Reads keys from one JSON object, remembering which were consumed so that
// typos surface as errors instead of silently falling back to defaults.
class ObjectReader
{
public:
    ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            config_error(path_ + " must be an object");
    }

    template <class T> void read(const char *key, T &out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return;
        try
        {
            out = it->template get<T>();
        }
        catch (const json::exception &)
        {
            config_error(path_ + "." + key + " has the wrong type");
        }
    }

    void read(const char *key, Vec3 &out)
    {
        std::vector<double> v{out.x(), out.y(), out.z()};
        read(key, v);
        if (v.size() != 3)
            config_error(path_ + "." + key + " must have three entries");
        out = Vec3(v[0], v[1], v[2]);
    }

    void read(const char *key, SolverKind &out)
    {
        std::string s = out == SolverKind::omp ? "omp" : "sbl";
        read(key, s);
        if (s == "omp")
            out = SolverKind::omp;
        else if (s == "sbl")
            out = SolverKind::sbl;
        else
            config_error(path_ + "." + key + " must be \"omp\" or \"sbl\"");
    }

    void read(const char *key, EntryModulus &out)
    {
        std::string s = out == EntryModulus::construction ? "construction" : "per_chain";
        read(key, s);
        if (s == "construction")
            out = EntryModulus::construction;
        else if (s == "per_chain")
            out = EntryModulus::per_chain;
        else
            config_error(path_ + "." + key + " must be \"construction\" or \"per_chain\"");
    }

    const json *child(const char *key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                config_error("unknown key " + path_ + "." + it.key());
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

json vec_json(const Vec3 &v)
{
    return json::array({v.x(), v.y(), v.z()});
}

const char *kind_name(SolverKind k)
{
    return k == SolverKind::omp ? "omp" : "sbl";
}

void read_solver(ObjectReader &parent, const char *key, SolverConfig &s, const std::string &path)
{
    if (const json *j = parent.child(key))
    {
        ObjectReader r(*j, path + "." + key);
        r.read("solver", s.kind);
        r.read("assumed_paths", s.assumed_paths);
        r.read("residual_tol", s.residual_tol);
        r.read("max_atoms", s.max_atoms);
        r.finish();
    }
}

json solver_json(const SolverConfig &s)
{
    json j;
    j["solver"] = kind_name(s.kind);
    j["assumed_paths"] = s.assumed_paths;
    j["residual_tol"] = s.residual_tol;
    j["max_atoms"] = s.max_atoms;
    return j;
}

SolverOptions solver_options(const SolverConfig &s, const SblOptions &sbl)
{
    SolverOptions o;
    o.kind = s.kind;
    o.assumed_paths = s.assumed_paths;
    o.residual_tol = s.residual_tol;
    o.max_atoms = s.max_atoms;
    o.sbl = sbl;
    return o;
}

ExperimentConfig from_json(const json &root)
{
    ExperimentConfig c;
    ObjectReader r(root, "config");
    r.read("schema", c.schema);
    if (c.schema != config_schema)
        config_error("unsupported schema \"" + c.schema + "\" (expected \"" + config_schema + "\")");
    r.read("name", c.name);

    if (const json *j = r.child("geometry"))
    {
        GeometryConfig &g = c.geometry;
        ObjectReader s(*j, "geometry");
        s.read("bs_h", g.bs_h);
        s.read("bs_v", g.bs_v);
        s.read("spacing_h", g.spacing_h);
        s.read("spacing_v", g.spacing_v);
        s.read("tiles_h", g.tiles_h);
        s.read("tiles_v", g.tiles_v);
        s.read("rf_chains", g.rf_chains);
        s.read("antennas_per_chain", g.antennas_per_chain);
        s.read("slots", g.slots);
        s.read("modulus", g.modulus);
        s.read("user_antennas", g.user_antennas);
        s.read("user_spacing", g.user_spacing);
        s.read("user_axis", g.user_axis);
        s.finish();
    }
    if (const json *j = r.child("scene"))
    {
        SceneConfig &g = c.scene;
        ObjectReader s(*j, "scene");
        s.read("carrier_hz", g.carrier_hz);
        s.read("user_min", g.user_min);
        s.read("user_max", g.user_max);
        s.read("paths", g.paths);
        s.read("los_to_nlos_db", g.los_to_nlos_db);
        s.read("scatterer_near", g.scatterer_near);
        s.read("scatterer_far", g.scatterer_far);
        s.read("scatterer_spread", g.scatterer_spread);
        s.finish();
    }
    if (const json *j = r.child("estimator"))
    {
        EstimatorConfig &e = c.estimator;
        ObjectReader s(*j, "estimator");
        s.read("angular_grid", e.angular_grid);
        read_solver(s, "stage1", e.stage1, "estimator");
        s.read("music_grid", e.music_grid);
        s.read("half_width", e.half_width);
        s.read("count_x", e.count_x);
        s.read("count_y", e.count_y);
        s.read("count_z", e.count_z);
        s.read("min_x", e.min_x);
        read_solver(s, "stage3", e.stage3, "estimator");
        if (const json *sj = s.child("sbl"))
        {
            ObjectReader b(*sj, "estimator.sbl");
            b.read("max_iters", e.sbl.max_iters);
            b.read("gamma_floor", e.sbl.gamma_floor);
            b.read("tol", e.sbl.tol);
            b.finish();
        }
        s.read("dft_oversample", e.dft_oversample);
        s.read("spherical_angle_grid", e.spherical_angle_grid);
        s.read("spherical_rings", e.spherical_rings);
        s.read("ring_min", e.ring_min);
        s.read("ring_max", e.ring_max);
        s.read("eigen_rank", e.eigen_rank);
        s.finish();
    }
    if (const json *j = r.child("sweep"))
    {
        SweepConfig &w = c.sweep;
        ObjectReader s(*j, "sweep");
        s.read("methods", w.methods);
        s.read("snr_db", w.snr_db);
        s.read("trials", w.trials);
        s.read("base_seed", w.base_seed);
        s.read("threads", w.threads);
        s.finish();
    }
    r.finish();
    return c;
}

json to_json_value(const ExperimentConfig &c)
{
    json j;
    j["schema"] = c.schema;
    j["name"] = c.name;

    const GeometryConfig &g = c.geometry;
    j["geometry"] = {{"bs_h", g.bs_h},
                     {"bs_v", g.bs_v},
                     {"spacing_h", g.spacing_h},
                     {"spacing_v", g.spacing_v},
                     {"tiles_h", g.tiles_h},
                     {"tiles_v", g.tiles_v},
                     {"rf_chains", g.rf_chains},
                     {"antennas_per_chain", g.antennas_per_chain},
                     {"slots", g.slots},
                     {"modulus", g.modulus == EntryModulus::construction ? "construction" : "per_chain"},
                     {"user_antennas", g.user_antennas},
                     {"user_spacing", g.user_spacing},
                     {"user_axis", vec_json(g.user_axis)}};

    const SceneConfig &s = c.scene;
    j["scene"] = {{"carrier_hz", s.carrier_hz},
                  {"user_min", vec_json(s.user_min)},
                  {"user_max", vec_json(s.user_max)},
                  {"paths", s.paths},
                  {"los_to_nlos_db", s.los_to_nlos_db},
                  {"scatterer_near", s.scatterer_near},
                  {"scatterer_far", s.scatterer_far},
                  {"scatterer_spread", vec_json(s.scatterer_spread)}};

    const EstimatorConfig &e = c.estimator;
    json est;
    est["angular_grid"] = e.angular_grid;
    est["stage1"] = solver_json(e.stage1);
    est["music_grid"] = e.music_grid;
    est["half_width"] = vec_json(e.half_width);
    est["count_x"] = e.count_x;
    est["count_y"] = e.count_y;
    est["count_z"] = e.count_z;
    est["min_x"] = e.min_x;
    est["stage3"] = solver_json(e.stage3);
    est["sbl"] = {{"max_iters", e.sbl.max_iters}, {"gamma_floor", e.sbl.gamma_floor}, {"tol", e.sbl.tol}};
    est["dft_oversample"] = e.dft_oversample;
    est["spherical_angle_grid"] = e.spherical_angle_grid;
    est["spherical_rings"] = e.spherical_rings;
    est["ring_min"] = e.ring_min;
    est["ring_max"] = e.ring_max;
    est["eigen_rank"] = e.eigen_rank;
    j["estimator"] = est;

    const SweepConfig &w = c.sweep;
    j["sweep"] = {{"methods", w.methods},
                  {"snr_db", w.snr_db},
                  {"trials", w.trials},
                  {"base_seed", w.base_seed},
                  {"threads", w.threads}};
    return j;
}

void require(bool ok, const std::string &what)
{
    if (!ok)
        config_error(what);
}

void check_solver(const SolverConfig &s, const std::string &name)
{
    require(s.assumed_paths >= 0, name + ".assumed_paths must be >= 0");
    require(s.residual_tol >= 0.0, name + ".residual_tol must be >= 0");
    require(s.max_atoms >= -1, name + ".max_atoms must be >= -1");
}

} // namespace

std::vector<std::string> validate_config(ExperimentConfig &c)
{
    std::vector<std::string> warnings;
    GeometryConfig &g = c.geometry;
    require(c.schema == config_schema, "unsupported schema \"" + c.schema + "\"");
    require(g.bs_h >= 1 && g.bs_v >= 1, "geometry.bs_h and geometry.bs_v must be positive");
    require(g.spacing_h >= 0.0 && g.spacing_v >= 0.0 && g.user_spacing >= 0.0, "spacings must be >= 0 (0 = half wavelength)");
    require(g.tiles_h >= 1 && g.tiles_v >= 1, "tile counts must be positive");
    require(g.bs_h % g.tiles_h == 0 && g.bs_v % g.tiles_v == 0, "tile counts must divide the array dimensions");
    require(g.antennas_per_chain >= 1, "geometry.antennas_per_chain must be positive");
    require(g.user_antennas >= 1, "geometry.user_antennas must be positive");
    require(g.user_axis.norm() > 0.0, "geometry.user_axis must be non-zero");

    const int m = g.bs_h * g.bs_v;
    if (g.antennas_per_chain * g.rf_chains != m)
    {
        require(m % g.antennas_per_chain == 0, "geometry.antennas_per_chain must divide the antenna count");
        const int resolved = m / g.antennas_per_chain;
        warnings.push_back("rf_chains * antennas_per_chain = " + std::to_string(g.rf_chains * g.antennas_per_chain) +
                           " differs from M = " + std::to_string(m) + "; using rf_chains = " +
                           std::to_string(resolved));
        g.rf_chains = resolved;
    }
    const int tiles = g.tiles_h * g.tiles_v;
    const int tile_size = m / tiles;
    require(g.rf_chains % tiles == 0, "rf_chains must split evenly across tiles");
    require(tile_size % g.antennas_per_chain == 0, "antennas_per_chain must divide the tile size");
    require(g.slots >= g.antennas_per_chain, "slots must be >= antennas_per_chain for an orthogonal combiner");
    if (g.slots != g.antennas_per_chain)
        warnings.push_back("slots != antennas_per_chain: combined noise is not white");

    const SceneConfig &s = c.scene;
    require(s.carrier_hz > 0.0, "scene.carrier_hz must be positive");
    require((s.user_min.array() <= s.user_max.array()).all(), "scene.user_min must not exceed scene.user_max");
    require(s.user_min.x() > 0.0, "users must lie in front of the array (x > 0)");
    require(s.paths >= 0, "scene.paths must be >= 0");
    require(0.0 < s.scatterer_near && s.scatterer_near <= s.scatterer_far && s.scatterer_far < 1.0,
            "scatterer fractions must satisfy 0 < near <= far < 1");
    require((s.scatterer_spread.array() >= 0.0).all(), "scene.scatterer_spread must be >= 0");

    const EstimatorConfig &e = c.estimator;
    require(e.angular_grid >= 2, "estimator.angular_grid must be >= 2");
    require(e.music_grid >= 2, "estimator.music_grid must be >= 2");
    require(e.count_x >= 1 && e.count_y >= 1 && e.count_z >= 1, "location grid counts must be positive");
    require((e.half_width.array() >= 0.0).all(), "estimator.half_width must be >= 0");
    require(e.min_x > 0.0, "estimator.min_x must be positive");
    check_solver(e.stage1, "estimator.stage1");
    check_solver(e.stage3, "estimator.stage3");
    require(e.sbl.max_iters >= 1 && e.sbl.gamma_floor >= 0.0 && e.sbl.tol > 0.0, "invalid estimator.sbl settings");
    require(e.dft_oversample >= 1, "estimator.dft_oversample must be >= 1");
    require(e.spherical_angle_grid >= 1 && e.spherical_rings >= 1, "spherical grid sizes must be positive");
    require(e.ring_min > 0.0 && e.ring_max >= e.ring_min, "ring radii must satisfy 0 < ring_min <= ring_max");
    require(e.eigen_rank >= 0 && e.eigen_rank <= g.user_antennas, "estimator.eigen_rank must lie in [0, N]");

    SweepConfig &w = c.sweep;
    require(!w.methods.empty(), "sweep.methods must not be empty");
    for (std::string &name : w.methods)
        name = canonical_method(name);
    require(!w.snr_db.empty(), "sweep.snr_db must not be empty");
    for (double snr : w.snr_db)
        require(std::isfinite(snr), "sweep.snr_db entries must be finite");
    require(w.trials >= 1, "sweep.trials must be positive");
    require(w.threads >= 0, "sweep.threads must be >= 0");
    return warnings;
}

LoadedConfig parse_config(const std::string &json_text)
{
    json root;
    try
    {
        root = json::parse(json_text);
    }
    catch (const json::parse_error &e)
    {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    LoadedConfig out;
    out.config = from_json(root);
    out.warnings = validate_config(out.config);
    return out;
}

LoadedConfig load_config(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        config_error("cannot read config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig &config)
{
    return to_json_value(config).dump(2) + "\n";
}

const std::vector<std::string> &known_methods()
{
    static const std::vector<std::string> names{
        "proposed-sbl",           "proposed-omp3",    "stage1-only",    "antenna-wise-dft", "antenna-wise-spherical",
        "antenna-wise-subarray-dft", "eigen-dictionary", "random-combiner"};
    return names;
}

std::string canonical_method(const std::string &name)
{
    if (name == "proposed")
        return "proposed-sbl";
    const auto &names = known_methods();
    if (std::find(names.begin(), names.end(), name) == names.end())
        config_error("unknown method \"" + name + "\"");
    return name;
}

double nmse(const CMat &h_hat, const CMat &h)
{
    if (h_hat.rows() != h.rows() || h_hat.cols() != h.cols())
        throw Error(ErrorCode::invalid_argument, "NMSE needs matching shapes");
    const double ref = h.squaredNorm();
    if (!(ref > 0.0))
        throw Error(ErrorCode::invalid_argument, "NMSE is undefined for a zero channel");
    return (h_hat - h).squaredNorm() / ref;
}

double nmse_db(const CMat &h_hat, const CMat &h)
{
    return 10.0 * std::log10(nmse(h_hat, h));
}

double rmse(const std::vector<Vec3> &estimates, const std::vector<Vec3> &truth)
{
    if (estimates.empty() || estimates.size() != truth.size())
        throw Error(ErrorCode::invalid_argument, "RMSE needs two non-empty lists of equal length");
    double acc = 0.0;
    for (size_t k = 0; k < estimates.size(); ++k)
        acc += (estimates[k] - truth[k]).squaredNorm();
    return std::sqrt(acc / static_cast<double>(estimates.size()));
}

std::uint64_t fnv1a(const std::string &key)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : key)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t trial_seed(std::uint64_t base_seed, const std::string &method, int point, int trial)
{
    return base_seed ^ fnv1a(method + "|" + std::to_string(point) + "|" + std::to_string(trial));
}

std::uint64_t scene_seed(std::uint64_t base_seed, int point, int trial)
{
    return base_seed ^ fnv1a("scene|" + std::to_string(point) + "|" + std::to_string(trial));
}

struct Setup::Lazy
{
    std::once_flag dft_once;
    CMat dft;
    std::once_flag spherical_once;
    SphericalDictionary spherical;
};

namespace
{

double or_half_wavelength(double spacing, double wavelength)
{
    return spacing > 0.0 ? spacing : wavelength / 2.0;
}

ArrayGeometry make_bs(const ExperimentConfig &c, double wavelength)
{
    const GeometryConfig &g = c.geometry;
    return ArrayGeometry::upa(g.bs_h, g.bs_v, or_half_wavelength(g.spacing_h, wavelength),
                              or_half_wavelength(g.spacing_v, wavelength), Vec3::Zero());
}

} // namespace

Setup::Setup(const ExperimentConfig &config)
    : config_(config), wavelength_(wavelength_from_carrier(config.scene.carrier_hz)),
      tiling_(make_bs(config, wavelength_), config.geometry.tiles_h, config.geometry.tiles_v),
      ue_(ArrayGeometry::ula(config.geometry.user_antennas,
                             or_half_wavelength(config.geometry.user_spacing, wavelength_), Vec3::Zero(),
                             config.geometry.user_axis.normalized())),
      lazy_(std::make_shared<Lazy>())
{
    const GeometryConfig &g = config_.geometry;
    const int chains_per_tile = g.rf_chains / tiling_.size();
    combiner_ = std::make_shared<const CombinerDesign>(design_combiner(g.slots, tiling_, chains_per_tile, g.modulus));
    angular_ = build_angular(tiling_.tile_count_h(), tiling_.tile_count_v(), bs().spacing_h(), bs().spacing_v(),
                             wavelength_, config_.estimator.angular_grid);
}

SolverOptions Setup::stage1_options() const
{
    return solver_options(config_.estimator.stage1, config_.estimator.sbl);
}

ThreeStageConfig Setup::three_stage(SolverKind stage3_kind) const
{
    const EstimatorConfig &e = config_.estimator;
    ThreeStageConfig t;
    t.angular_grid = e.angular_grid;
    t.stage1 = stage1_options();
    t.stage2.music_grid = e.music_grid;
    t.stage3.half_width = e.half_width;
    t.stage3.count_x = e.count_x;
    t.stage3.count_y = e.count_y;
    t.stage3.count_z = e.count_z;
    t.stage3.min_x = e.min_x;
    t.stage3.solver = solver_options(e.stage3, e.sbl);
    t.stage3.solver.kind = stage3_kind;
    return t;
}

const CMat &Setup::full_dft_dictionary() const
{
    std::call_once(lazy_->dft_once, [this] {
        const int os = config_.estimator.dft_oversample;
        lazy_->dft = build_angular(bs().count_h(), bs().count_v(), bs().spacing_h(), bs().spacing_v(), wavelength_,
                                   os * bs().count_h(), os * bs().count_v())
                         .atoms;
    });
    return lazy_->dft;
}

const SphericalDictionary &Setup::spherical_dictionary() const
{
    std::call_once(lazy_->spherical_once, [this] {
        const EstimatorConfig &e = config_.estimator;
        lazy_->spherical = build_spherical_baseline(bs(), e.spherical_angle_grid,
                                                    reciprocal_rings(e.ring_min, e.ring_max, e.spherical_rings),
                                                    wavelength_);
    });
    return lazy_->spherical;
}

Trial draw_trial(const Setup &setup, double snr_db, std::uint64_t seed)
{
    const ExperimentConfig &c = setup.config();
    const SceneConfig &sc = c.scene;
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) {
        return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    };

    const Vec3 center(uniform(sc.user_min.x(), sc.user_max.x()), uniform(sc.user_min.y(), sc.user_max.y()),
                      uniform(sc.user_min.z(), sc.user_max.z()));
    const ArrayGeometry ue = setup.ue_template().translated(center);
    const Vec3 axis = ue.axis_h();

    std::vector<PathParams> paths;
    for (int l = 0; l < sc.paths; ++l)
    {
        const double frac = uniform(sc.scatterer_near, sc.scatterer_far);
        Vec3 s = frac * center;
        for (int d = 0; d < 3; ++d)
            s(d) += uniform(-sc.scatterer_spread(d), sc.scatterer_spread(d));
        s.x() = std::max(s.x(), 0.1);
        PathParams p;
        p.scatterer = s;
        const Vec3 dir = (s - center).normalized();
        p.aod = std::asin(std::clamp(dir.dot(axis), -1.0, 1.0));
        paths.push_back(p);
    }

    Trial t{Scene{setup.bs(), ue, paths, setup.wavelength(), 1.0, 0.0, sc.los_to_nlos_db}, center, {}, 0.0};
    t.channel = synthesize(t.scene, rng());
    const double power = t.channel.h.squaredNorm() / static_cast<double>(t.channel.h.size());
    t.noise_var = t.scene.tx_power * power / std::pow(10.0, snr_db / 10.0);
    t.scene.noise_var = t.noise_var;
    return t;
}

namespace
{

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0)
{
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

MethodResult three_stage(const Setup &setup, std::shared_ptr<const CombinerDesign> comb, SolverKind kind,
                         const Trial &trial, std::uint64_t seed)
{
    const int n = setup.ue_template().size();
    const ReceptionRecord rec = simulate_reception(trial.channel.h, std::move(comb), design_precoder_uniform(n),
                                                   trial.scene.tx_power, trial.noise_var, seed);
    MethodResult r;
    StageOutputs out = run_three_stage(rec, setup.tiling(), setup.angular(), setup.ue_template(), setup.wavelength(),
                                       setup.three_stage(kind));
    r.h_hat = out.channel.h_hat;
    r.location = out.localization.location.point;
    r.timings = out.timings;
    r.stages = std::move(out);
    return r;
}

} // namespace

MethodResult run_method(const Setup &setup, const std::string &method_name, const Trial &trial, std::uint64_t seed)
{
    const std::string method = canonical_method(method_name);
    const GeometryConfig &g = setup.config().geometry;
    const int n = setup.ue_template().size();
    const double p = trial.scene.tx_power;

    if (method == "proposed-sbl")
        return three_stage(setup, setup.combiner(), SolverKind::sbl, trial, seed);
    if (method == "proposed-omp3")
        return three_stage(setup, setup.combiner(), SolverKind::omp, trial, seed);
    if (method == "random-combiner")
    {
        auto comb = std::make_shared<const CombinerDesign>(
            random_combiner(g.slots, setup.tiling(), g.rf_chains / setup.tiling().size(), seed ^ 0x5bd1e995ull));
        return three_stage(setup, comb, SolverKind::sbl, trial, seed);
    }

    MethodResult r;
    if (method == "stage1-only" || method == "eigen-dictionary")
    {
        const ReceptionRecord rec = simulate_reception(trial.channel.h, setup.combiner(), design_precoder_uniform(n), p,
                                                       trial.noise_var, seed);
        auto t0 = clock_type::now();
        const std::vector<TileEstimate> tiles = stage1(rec, setup.tiling(), setup.angular(), setup.stage1_options());
        r.timings.stage1_ms = ms_since(t0);
        if (method == "stage1-only")
        {
            r.h_hat = stage1_channel(tiles, setup.angular(), setup.tiling(), setup.ue_template(), setup.wavelength());
            return r;
        }
        t0 = clock_type::now();
        std::vector<CVec> channels;
        for (const TileEstimate &t : tiles)
            channels.push_back(t.channel);
        Stage2Options s2;
        s2.music_grid = setup.config().estimator.music_grid;
        const Stage2Result loc = stage2(channels, setup.tiling(), setup.wavelength(), s2);
        r.timings.stage2_ms = ms_since(t0);
        r.location = loc.location.point;
        t0 = clock_type::now();
        const int rank = setup.config().estimator.eigen_rank > 0 ? setup.config().estimator.eigen_rank : n;
        r.h_hat = baseline_eigen_dictionary(rec, loc.location.point, setup.bs(), setup.ue_template(),
                                            setup.wavelength(), rank);
        r.timings.stage3_ms = ms_since(t0);
        return r;
    }

    // Antenna-wise baselines: B = N DFT blocks at p / N each, so the pilot energy matches B = 1 at p.
    const ReceptionRecord rec = simulate_reception(trial.channel.h, setup.combiner(), design_precoder_dft(n),
                                                   p / static_cast<double>(n), trial.noise_var, seed);
    const SolverOptions opts = setup.stage1_options();
    auto t0 = clock_type::now();
    if (method == "antenna-wise-dft")
        r.h_hat = baseline_antenna_wise(rec, setup.full_dft_dictionary(), opts);
    else if (method == "antenna-wise-spherical")
        r.h_hat = baseline_antenna_wise(rec, setup.spherical_dictionary().atoms, opts);
    else
        r.h_hat = baseline_antenna_wise_tiles(rec, setup.tiling(), setup.angular(), opts);
    r.timings.stage1_ms = ms_since(t0);
    return r;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow> &rows, const std::vector<std::string> &methods)
{
    std::vector<AggregateRow> out;
    std::map<std::pair<std::string, int>, std::vector<const ResultRow *>> groups;
    std::map<int, double> snr_of_point;
    for (const ResultRow &r : rows)
    {
        groups[{r.method, r.point}].push_back(&r);
        snr_of_point[r.point] = r.snr_db;
    }
    for (const std::string &m : methods)
    {
        for (const auto &[point, snr] : snr_of_point)
        {
            auto it = groups.find({m, point});
            if (it == groups.end())
                continue;
            AggregateRow a;
            a.method = m;
            a.snr_db = snr;
            a.trials = static_cast<int>(it->second.size());
            double sum = 0.0;
            double sum_sq_err = 0.0;
            int ok = 0;
            int located = 0;
            for (const ResultRow *r : it->second)
            {
                if (!r->ok())
                {
                    ++a.failed;
                    continue;
                }
                ++ok;
                sum += r->nmse;
                a.mean_timings.stage1_ms += r->timings.stage1_ms;
                a.mean_timings.stage2_ms += r->timings.stage2_ms;
                a.mean_timings.stage3_ms += r->timings.stage3_ms;
                if (r->loc_error)
                {
                    sum_sq_err += *r->loc_error * *r->loc_error;
                    ++located;
                }
            }
            if (ok > 0)
            {
                a.nmse_mean = sum / ok;
                double var = 0.0;
                for (const ResultRow *r : it->second)
                    if (r->ok())
                        var += (r->nmse - a.nmse_mean) * (r->nmse - a.nmse_mean);
                a.nmse_std = std::sqrt(var / ok);
                a.nmse_db = 10.0 * std::log10(a.nmse_mean);
                a.mean_timings.stage1_ms /= ok;
                a.mean_timings.stage2_ms /= ok;
                a.mean_timings.stage3_ms /= ok;
            }
            else
            {
                a.nmse_mean = a.nmse_std = a.nmse_db = std::nan("");
            }
            if (located > 0)
                a.rmse_m = std::sqrt(sum_sq_err / located);
            out.push_back(a);
        }
    }
    return out;
}

ResultTable run_sweep(const ExperimentConfig &config, const SweepOptions &opts)
{
    const Setup setup(config);
    const SweepConfig &w = config.sweep;

    struct Task
    {
        int method;
        int point;
        int trial;
    };
    std::vector<Task> tasks;
    for (int m = 0; m < static_cast<int>(w.methods.size()); ++m)
        for (int p = 0; p < static_cast<int>(w.snr_db.size()); ++p)
            for (int t = 0; t < w.trials; ++t)
                tasks.push_back({m, p, t});

    std::vector<ResultRow> rows(tasks.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t k = next++; k < tasks.size(); k = next++)
        {
            const Task &task = tasks[k];
            ResultRow &row = rows[k];
            row.method = w.methods[static_cast<size_t>(task.method)];
            row.point = task.point;
            row.snr_db = w.snr_db[static_cast<size_t>(task.point)];
            row.trial = task.trial;
            row.seed = trial_seed(w.base_seed, row.method, task.point, task.trial);
            try
            {
                const Trial trial = draw_trial(setup, row.snr_db, scene_seed(w.base_seed, task.point, task.trial));
                const MethodResult r = run_method(setup, row.method, trial, row.seed);
                row.nmse = nmse(r.h_hat, trial.channel.h);
                if (r.location)
                    row.loc_error = (*r.location - trial.user_center).norm();
                if (opts.record_timings)
                    row.timings = r.timings;
                if (!std::isfinite(row.nmse))
                    row.status = std::string("failed:") + to_string(ErrorCode::divergence);
            }
            catch (const Error &e)
            {
                row.status = std::string("failed:") + to_string(e.code());
            }
        }
    };

    int threads = w.threads > 0 ? w.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min<int>(threads, static_cast<int>(tasks.size()));
    if (threads <= 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k)
            pool.emplace_back(worker);
        for (std::thread &t : pool)
            t.join();
    }

    ResultTable table;
    table.rows = std::move(rows);
    table.aggregates = aggregate(table.rows, w.methods);
    return table;
}

namespace
{

std::string num(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

json num_json(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json timings_json(const StageTimings &t)
{
    return {{"stage1_ms", t.stage1_ms}, {"stage2_ms", t.stage2_ms}, {"stage3_ms", t.stage3_ms}};
}

} // namespace

std::string to_csv(const ResultTable &table, bool with_timings)
{
    std::ostringstream os;
    os << csv_header << '\n';
    auto timing_cells = [&](const StageTimings &t) {
        if (with_timings)
            os << num(t.stage1_ms) << ',' << num(t.stage2_ms) << ',' << num(t.stage3_ms);
        else
            os << ",,";
    };
    for (const ResultRow &r : table.rows)
    {
        os << r.method << ',' << num(r.snr_db) << ',' << r.trial << ',' << r.seed << ',';
        if (r.ok())
            os << num(10.0 * std::log10(r.nmse));
        os << ',';
        if (r.ok() && r.loc_error)
            os << num(*r.loc_error);
        os << ',';
        timing_cells(r.timings);
        os << ',' << r.status << '\n';
    }
    for (const AggregateRow &a : table.aggregates)
    {
        os << a.method << ',' << num(a.snr_db) << ",mean,," << num(a.nmse_db) << ',';
        if (a.rmse_m)
            os << num(*a.rmse_m);
        os << ',';
        timing_cells(a.mean_timings);
        os << ",aggregate:" << (a.trials - a.failed) << '/' << a.trials << '\n';
    }
    return os.str();
}

std::string to_json(const ResultTable &table, const ExperimentConfig &config, bool with_timings)
{
    json j;
    j["schema"] = "xlmimo-results/1";
    j["config"] = to_json_value(config);
    json rows = json::array();
    for (const ResultRow &r : table.rows)
    {
        json row;
        row["method"] = r.method;
        row["snr_db"] = r.snr_db;
        row["trial"] = r.trial;
        row["seed"] = r.seed;
        row["nmse"] = r.ok() ? num_json(r.nmse) : json(nullptr);
        row["nmse_db"] = r.ok() ? num_json(10.0 * std::log10(r.nmse)) : json(nullptr);
        row["loc_error_m"] = r.ok() && r.loc_error ? num_json(*r.loc_error) : json(nullptr);
        if (with_timings)
            row["timings"] = timings_json(r.timings);
        row["status"] = r.status;
        rows.push_back(row);
    }
    j["rows"] = rows;

    json aggs = json::array();
    json failures = json::object();
    for (const AggregateRow &a : table.aggregates)
    {
        json row;
        row["method"] = a.method;
        row["snr_db"] = a.snr_db;
        row["trials"] = a.trials;
        row["failed"] = a.failed;
        row["nmse_mean"] = num_json(a.nmse_mean);
        row["nmse_std"] = num_json(a.nmse_std);
        row["nmse_db"] = num_json(a.nmse_db);
        row["rmse_m"] = a.rmse_m ? num_json(*a.rmse_m) : json(nullptr);
        if (with_timings)
            row["mean_timings"] = timings_json(a.mean_timings);
        aggs.push_back(row);

        json &f = failures[a.method];
        if (f.is_null())
            f = {{"failed", 0}, {"trials", 0}};
        f["failed"] = f["failed"].get<int>() + a.failed;
        f["trials"] = f["trials"].get<int>() + a.trials;
    }
    for (auto it = failures.begin(); it != failures.end(); ++it)
        (*it)["rate"] = (*it)["failed"].get<double>() / (*it)["trials"].get<double>();
    j["aggregates"] = aggs;
    j["failures"] = failures;
    return j.dump(2) + "\n";
}

namespace
{

json complex_list(const CVec &v, const std::vector<int> &support)
{
    json out = json::array();
    for (int s : support)
        out.push_back(json::array({v(s).real(), v(s).imag()}));
    return out;
}

json solution_json(const SparseSolution &s)
{
    json j;
    j["support"] = s.support;
    j["coefficients"] = complex_list(s.coefficients, s.support);
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    json hist = json::array();
    for (double r : s.residual_history)
        hist.push_back(num_json(r));
    j["residual_history"] = hist;
    j["correlation_ops"] = s.correlation_ops;
    return j;
}

} // namespace

std::string simulation_report(const Setup &setup, const std::string &method, const Trial &trial,
                              const MethodResult &result, std::uint64_t seed, bool with_timings)
{
    json j;
    j["schema"] = "xlmimo-simulation/1";
    j["method"] = canonical_method(method);
    j["seed"] = seed;
    j["wavelength"] = setup.wavelength();
    j["noise_var"] = trial.noise_var;
    j["user_center"] = vec_json(trial.user_center);
    json paths = json::array();
    for (size_t l = 0; l < trial.scene.paths.size(); ++l)
    {
        const cd g = trial.channel.gains[l];
        paths.push_back({{"scatterer", vec_json(trial.scene.paths[l].scatterer)},
                         {"aod", trial.scene.paths[l].aod},
                         {"gain", json::array({g.real(), g.imag()})}});
    }
    j["paths"] = paths;

    const double e = nmse(result.h_hat, trial.channel.h);
    j["metrics"] = {{"nmse", num_json(e)}, {"nmse_db", num_json(10.0 * std::log10(e))}};
    if (result.location)
    {
        j["estimated_center"] = vec_json(*result.location);
        j["metrics"]["loc_error_m"] = num_json((*result.location - trial.user_center).norm());
    }
    if (result.stages)
    {
        const StageOutputs &s = *result.stages;
        json tiles = json::array();
        for (size_t i = 0; i < s.tiles.size(); ++i)
            tiles.push_back(solution_json(s.tiles[i].solution));
        j["stage1"] = tiles;
        json dirs = json::array();
        for (const TileDirection &d : s.localization.directions)
        {
            json dj = {{"tile", d.tile}, {"k_y", d.k_y}, {"k_z", d.k_z}, {"used", d.used}};
            if (!d.used)
                dj["failure"] = d.failure;
            dirs.push_back(dj);
        }
        j["stage2"] = {{"directions", dirs},
                       {"location", vec_json(s.localization.location.point)},
                       {"residual", num_json(s.localization.location.residual)},
                       {"condition", num_json(s.localization.location.condition)}};
        json s3 = solution_json(s.channel.solution);
        s3["dictionary_size"] = s.channel.dictionary_size;
        j["stage3"] = s3;
    }
    if (with_timings)
        j["timings"] = timings_json(result.timings);
    return j.dump(2) + "\n";
}

} // namespace xlmimo
