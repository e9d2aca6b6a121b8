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

#include "xlmimo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "xlmimo/doa.hpp"

namespace xlmimo
{

namespace
{

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point since)
{
    return std::chrono::duration<double, std::milli>(clock_type::now() - since).count();
}

// A noiseless record still needs a positive variance for SBL; this floor sits far
// below any simulated noise level while keeping the posterior well conditioned.
double solver_noise_var(double noise_var, const CVec &y)
{
    const double floor = 1e-10 * y.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(y.size(), 1));
    return std::max(noise_var, std::max(floor, 1e-300));
}

SparseSolution solve(const CMat &a, const CVec &y, double noise_var, const SolverOptions &opts)
{
    if (opts.kind == SolverKind::omp)
    {
        OmpOptions o;
        const Eigen::Index limit = std::min(a.rows(), a.cols());
        const Eigen::Index wanted = opts.max_atoms > 0    ? opts.max_atoms
                                    : opts.max_atoms < 0 ? limit
                                                         : opts.assumed_paths + 1;
        o.max_atoms = static_cast<int>(std::min(wanted, limit));
        o.residual_tol = opts.residual_tol;
        return omp(a, y, o);
    }
    return sbl_em(a, y, solver_noise_var(noise_var, y), opts.sbl).solution;
}

void require_uniform_single_block(const ReceptionRecord &record)
{
    if (record.blocks() != 1)
        throw Error(ErrorCode::invalid_argument, "this stage needs a single pilot block (B = 1)");
    const CMat &w = record.precoder.w;
    const double expected = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    for (Eigen::Index n = 0; n < w.rows(); ++n)
        if (std::abs(w(n, 0) - cd(expected, 0.0)) > 1e-12)
            throw Error(ErrorCode::invalid_argument, "this stage needs the uniform precoder 1_N / sqrt(N)");
}

} // namespace

ReceptionRecord simulate_reception(const CMat &h, std::shared_ptr<const CombinerDesign> combiner,
                                   const PrecoderDesign &precoder, double block_power, double noise_var,
                                   std::uint64_t seed)
{
    if (!combiner)
        throw Error(ErrorCode::invalid_argument, "reception needs a combiner");
    if (h.rows() != combiner->num_antennas() || h.cols() != precoder.w.rows())
        throw Error(ErrorCode::invalid_argument, "channel, combiner and precoder shapes disagree");
    if (block_power < 0.0 || noise_var < 0.0)
        throw Error(ErrorCode::invalid_argument, "power and noise variance must be non-negative");

    ReceptionRecord rec;
    rec.combiner = combiner;
    rec.precoder = precoder;
    rec.block_power = block_power;
    rec.noise_var = noise_var;
    rec.noise_seed = seed;

    const CMat &v = combiner->aggregated();
    rec.y = std::sqrt(block_power) * (v * (h * precoder.w));

    if (noise_var > 0.0)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * noise_var));
        const Eigen::Index len = static_cast<Eigen::Index>(combiner->slots()) * combiner->num_antennas();
        CVec n(len);
        for (Eigen::Index b = 0; b < rec.y.cols(); ++b)
        {
            for (Eigen::Index k = 0; k < len; ++k)
            {
                const double re = normal(rng);
                const double im = normal(rng);
                n(k) = cd(re, im);
            }
            rec.y.col(b) += combiner->apply_hat(n);
        }
    }
    return rec;
}

double pilot_energy(const ReceptionRecord &record)
{
    return record.block_power * record.precoder.w.colwise().squaredNorm().sum();
}

CVec tile_observation(const ReceptionRecord &record, int tile, int block)
{
    const std::vector<int> rows = record.combiner->tile_rows(tile);
    CVec y(static_cast<Eigen::Index>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k)
        y(static_cast<Eigen::Index>(k)) = record.y(rows[k], block);
    return y;
}

std::vector<TileEstimate> stage1(const ReceptionRecord &record, const SubarrayTiling &tiling,
                                 const AngularDictionary &dict, const SolverOptions &opts)
{
    require_uniform_single_block(record);
    const CombinerDesign &comb = *record.combiner;
    if (comb.num_tiles() != tiling.size() || dict.atoms.rows() != tiling.tile_size())
        throw Error(ErrorCode::invalid_argument, "tiling, combiner and dictionary sizes disagree");

    const double scale = std::sqrt(record.block_power / static_cast<double>(record.precoder.w.rows()));
    std::vector<TileEstimate> out;
    out.reserve(static_cast<size_t>(tiling.size()));
    CMat sensing;
    const CMat *last_block = nullptr;
    for (int i = 0; i < tiling.size(); ++i)
    {
        const CMat &vi = comb.tile_block(i);
        // Designed combiners reuse one block for every tile; skip the repeated product.
        if (last_block == nullptr || !(vi.rows() == last_block->rows() && vi == *last_block))
            sensing = scale * (vi * dict.atoms);
        last_block = &vi;

        TileEstimate est;
        est.solution = solve(sensing, tile_observation(record, i), record.noise_var, opts);
        est.channel = dict.atoms * est.solution.coefficients;
        out.push_back(std::move(est));
    }
    return out;
}

Stage2Result stage2(const std::vector<CVec> &tile_channels, const SubarrayTiling &tiling, double wavelength,
                    const Stage2Options &opts)
{
    if (static_cast<int>(tile_channels.size()) != tiling.size())
        throw Error(ErrorCode::invalid_argument, "one channel estimate per tile is required");

    Stage2Result res;
    for (int i = 0; i < tiling.size(); ++i)
    {
        const Tile &tile = tiling.tile(i);
        TileDirection dir;
        dir.tile = i;
        try
        {
            const CMat c = subarray_covariance(tile_channels[static_cast<size_t>(i)]);
            const AxisFactors f = extract_axis_factors(c, tile.geometry.count_h(), tile.geometry.count_v());
            dir.k_y = music_1d(f.horizontal, tile.geometry.spacing_h(), wavelength, opts.music_grid, 1);
            dir.k_z = music_1d(f.vertical, tile.geometry.spacing_v(), wavelength, opts.music_grid, 1);
            const DirectionVector k = recover_kx(dir.k_y, dir.k_z);
            res.rays.push_back(Ray{tile.geometry.center(), k});
            dir.used = true;
        }
        catch (const Error &e)
        {
            dir.failure = e.what();
        }
        res.directions.push_back(dir);
    }
    if (res.rays.size() < 2)
        throw Error(ErrorCode::degenerate_geometry, "fewer than two tiles produced a usable direction");
    res.location = ls_intersect(res.rays);
    return res;
}

Stage3Result stage3(const ReceptionRecord &record, const Vec3 &center, const ArrayGeometry &bs,
                    const ArrayGeometry &ue_template, double wavelength, const Stage3Options &opts)
{
    require_uniform_single_block(record);
    if (!center.allFinite())
        throw Error(ErrorCode::invalid_argument, "stage 3 needs a finite location estimate");

    LocationGrid grid;
    grid.center = center;
    grid.half_width = opts.half_width;
    grid.count_x = opts.count_x;
    grid.count_y = opts.count_y;
    grid.count_z = opts.count_z;
    grid.min_x = opts.min_x;
    const LocationDictionary dict = build_location(grid, bs, ue_template, wavelength);

    // (w^T (x) V) vec(H) = V H w, so each column costs one M-vector before the combiner.
    const Eigen::Index m = bs.size();
    const Eigen::Index n = ue_template.size();
    const CVec &w = record.precoder.w.col(0);
    CMat beamformed(m, dict.size());
    for (int s = 0; s < dict.size(); ++s)
        beamformed.col(s) = dict.atoms.col(s).reshaped(m, n) * w;
    const CMat sensing = std::sqrt(record.block_power) * (record.combiner->aggregated() * beamformed);

    Stage3Result res;
    res.dictionary_size = dict.size();
    res.solution = solve(sensing, record.y.col(0), record.noise_var, opts.solver);
    res.h_hat = (dict.atoms * res.solution.coefficients).reshaped(m, n);
    return res;
}

StageOutputs run_three_stage(const ReceptionRecord &record, const SubarrayTiling &tiling,
                             const AngularDictionary &dict, const ArrayGeometry &ue_template, double wavelength,
                             const ThreeStageConfig &config)
{
    StageOutputs out;
    auto t0 = clock_type::now();
    try
    {
        out.tiles = stage1(record, tiling, dict, config.stage1);
    }
    catch (const Error &e)
    {
        throw StageError("stage1", e);
    }
    out.timings.stage1_ms = elapsed_ms(t0);

    t0 = clock_type::now();
    try
    {
        std::vector<CVec> channels;
        channels.reserve(out.tiles.size());
        for (const TileEstimate &t : out.tiles)
            channels.push_back(t.channel);
        out.localization = stage2(channels, tiling, wavelength, config.stage2);
    }
    catch (const Error &e)
    {
        throw StageError("stage2", e);
    }
    out.timings.stage2_ms = elapsed_ms(t0);

    t0 = clock_type::now();
    try
    {
        out.channel = stage3(record, out.localization.location.point, tiling.parent(), ue_template, wavelength,
                             config.stage3);
    }
    catch (const Error &e)
    {
        throw StageError("stage3", e);
    }
    out.timings.stage3_ms = elapsed_ms(t0);
    return out;
}

CMat stage1_channel(const std::vector<TileEstimate> &tiles, const AngularDictionary &dict,
                    const SubarrayTiling &tiling, const ArrayGeometry &ue_template, double wavelength)
{
    const int n = ue_template.size();
    CMat h = CMat::Zero(tiling.parent().size(), n);
    const double kw = 2.0 * pi / wavelength;
    for (int i = 0; i < tiling.size(); ++i)
    {
        const TileEstimate &est = tiles[static_cast<size_t>(i)];
        Eigen::Index dominant = 0;
        est.solution.coefficients.cwiseAbs().maxCoeff(&dominant);
        const double ky = dict.cosine_h(static_cast<int>(dominant));
        const double kz = dict.cosine_v(static_cast<int>(dominant));
        const double rad = 1.0 - ky * ky - kz * kz;
        const Vec3 k = rad > 0.0 ? Vec3(std::sqrt(rad), ky, kz) : Vec3(0.0, ky, kz).normalized();

        // h^(n) ~ h^(c) exp(-j kw k . d_n) and the estimate is of sum_n h^(n).
        CVec phase(n);
        for (int a = 0; a < n; ++a)
            phase(a) = std::polar(1.0, -kw * k.dot(ue_template.position(a) - ue_template.center()));
        const cd beta = phase.sum();
        const CVec weights = std::abs(beta) > 1e-3 * n ? CVec(phase / beta)
                                                       : CVec(CVec::Constant(n, cd(1.0 / n, 0.0)));

        const auto &ant = tiling.tile(i).antennas;
        for (size_t a = 0; a < ant.size(); ++a)
            h.row(ant[a]) = est.channel(static_cast<Eigen::Index>(a)) * weights.transpose();
    }
    return h;
}

namespace
{

CMat dft_despread(const ReceptionRecord &record)
{
    const CMat &w = record.precoder.w;
    if (w.rows() != w.cols() || record.blocks() != w.cols())
        throw Error(ErrorCode::invalid_argument, "antenna-wise estimation needs B = N blocks with a square precoder");
    if ((w * w.adjoint() - CMat::Identity(w.rows(), w.rows())).norm() > 1e-10)
        throw Error(ErrorCode::invalid_argument, "antenna-wise estimation needs W W^H = I");
    return record.y * w.adjoint();
}

} // namespace

CMat baseline_antenna_wise(const ReceptionRecord &record, const CMat &dictionary, const SolverOptions &opts)
{
    const CMat z = dft_despread(record);
    if (dictionary.rows() != record.combiner->num_antennas())
        throw Error(ErrorCode::invalid_argument, "dictionary must span the whole array");
    const CMat sensing = std::sqrt(record.block_power) * (record.combiner->aggregated() * dictionary);
    CMat h(dictionary.rows(), z.cols());
    for (Eigen::Index n = 0; n < z.cols(); ++n)
    {
        const SparseSolution sol = solve(sensing, z.col(n), record.noise_var, opts);
        h.col(n) = dictionary * sol.coefficients;
    }
    return h;
}

CMat baseline_antenna_wise_tiles(const ReceptionRecord &record, const SubarrayTiling &tiling,
                                 const AngularDictionary &dict, const SolverOptions &opts)
{
    const CMat z = dft_despread(record);
    const CombinerDesign &comb = *record.combiner;
    CMat h = CMat::Zero(tiling.parent().size(), z.cols());
    for (int i = 0; i < tiling.size(); ++i)
    {
        const CMat sensing = std::sqrt(record.block_power) * (comb.tile_block(i) * dict.atoms);
        const std::vector<int> rows = comb.tile_rows(i);
        const auto &ant = tiling.tile(i).antennas;
        for (Eigen::Index n = 0; n < z.cols(); ++n)
        {
            CVec y(static_cast<Eigen::Index>(rows.size()));
            for (size_t k = 0; k < rows.size(); ++k)
                y(static_cast<Eigen::Index>(k)) = z(rows[k], n);
            const SparseSolution sol = solve(sensing, y, record.noise_var, opts);
            const CVec hi = dict.atoms * sol.coefficients;
            for (size_t a = 0; a < ant.size(); ++a)
                h(ant[a], n) = hi(static_cast<Eigen::Index>(a));
        }
    }
    return h;
}

CMat baseline_eigen_dictionary(const ReceptionRecord &record, const Vec3 &center, const ArrayGeometry &bs,
                               const ArrayGeometry &ue_template, double wavelength, int rank)
{
    require_uniform_single_block(record);
    const CMat h_loc = los_channel(bs, ue_template.translated(center), wavelength);
    Eigen::JacobiSVD<CMat> svd(h_loc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int r = std::clamp(rank, 1, static_cast<int>(h_loc.cols()));
    const CMat u = svd.matrixU().leftCols(r);
    const CMat v = svd.matrixV().leftCols(r);

    // Atom i is vec(u_i v_i^H); through the combiner it becomes sqrt(p) V u_i (v_i^H w).
    const CVec &w = record.precoder.w.col(0);
    const CVec vw = v.adjoint() * w;
    const CMat sensing = std::sqrt(record.block_power) * (record.combiner->aggregated() * (u * vw.asDiagonal()));
    const CVec x = sensing.colPivHouseholderQr().solve(record.y.col(0));
    return u * x.asDiagonal() * v.adjoint();
}

} // namespace xlmimo
