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

#include "xlmimo/verify.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "xlmimo/doa.hpp"
#include "xlmimo/harness.hpp"

namespace xlmimo
{

namespace
{

std::string sci(double v)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

// Each check returns its measured deviation; it passes when that is below `tol`.
struct Check
{
    const char *module;
    const char *name;
    double tol;
    std::function<double()> run;
};

const double lambda = wavelength_from_carrier(6.8e9);

double check_upa_extent()
{
    const ArrayGeometry g = ArrayGeometry::upa(16, 48, lambda / 2, lambda / 2, Vec3::Zero());
    const Eigen::Matrix3Xd &p = g.positions();
    const double ext_h = p.row(1).maxCoeff() - p.row(1).minCoeff();
    const double ext_v = p.row(2).maxCoeff() - p.row(2).minCoeff();
    return std::abs(ext_h - 15 * lambda / 2) + std::abs(ext_v - 47 * lambda / 2) + p.rowwise().mean().norm();
}

double check_scalar_channel()
{
    const ArrayGeometry bs = ArrayGeometry::upa(1, 1, 1.0, 1.0, Vec3::Zero());
    const ArrayGeometry ue = ArrayGeometry::ula(1, 1.0, Vec3(10, 0, 0), Vec3(0, 1, 0));
    const CMat h = los_channel(bs, ue, lambda);
    return std::abs(h(0, 0) - 0.1 * std::polar(1.0, -2 * pi * 10 / lambda));
}

double check_full_size_combiner()
{
    const SubarrayTiling tiling(ArrayGeometry::upa(16, 48, lambda / 2, lambda / 2, Vec3::Zero()), 2, 4);
    const CombinerDesign c = design_combiner(6, tiling, 16);
    const CombinerCheck k = c.check();
    return std::max({k.tiles, k.global, k.slots, k.stride});
}

double check_dft_precoder()
{
    const CMat w = design_precoder_dft(4).w;
    return (w * w.adjoint() - CMat::Identity(4, 4)).norm();
}

double check_location_containment()
{
    const ArrayGeometry bs = ArrayGeometry::upa(4, 4, lambda / 2, lambda / 2, Vec3::Zero());
    const ArrayGeometry ue = ArrayGeometry::ula(2, lambda / 2, Vec3::Zero(), Vec3(0, 1, 0));
    LocationGrid grid;
    grid.center = Vec3(6, 1, -1);
    grid.half_width = Vec3(0.2, 0.2, 0.02);
    grid.count_x = grid.count_y = 3;
    grid.count_z = 3;
    const LocationDictionary d = build_location(grid, bs, ue, lambda);
    const CMat h = los_channel(bs, ue.translated(grid.center), lambda);
    return (d.atoms.col(d.size() / 2) - h.reshaped()).norm();
}

double check_omp_identity()
{
    const CVec y = (CVec(3) << 0.0, 2.0, 0.0).finished();
    OmpOptions o;
    o.max_atoms = 1;
    const SparseSolution s = omp(CMat::Identity(3, 3), y, o);
    return (s.coefficients - y).norm() + s.residual_history.back();
}

double check_sbl_scalar()
{
    CMat a = CMat::Constant(4, 1, cd(0.5, 0.0));
    const SblResult r = sbl_em(a, 3.0 * a.col(0), 1e-12, {});
    return std::abs(r.state.mean(0) - 3.0);
}

double check_kronecker_roundtrip()
{
    const CVec ah = far_field_steering(8, lambda / 2, 0.3, lambda);
    const CVec av = far_field_steering(12, lambda / 2, -0.2, lambda);
    const CVec h = planar_far_field_steering(8, 12, lambda / 2, lambda / 2, 0.3, -0.2, lambda);
    const AxisFactors f = extract_axis_factors(subarray_covariance(h), 8, 12);
    return (f.horizontal.matrix - ah * ah.adjoint()).norm() + (f.vertical.matrix - av * av.adjoint()).norm();
}

double check_music()
{
    const CVec a = far_field_steering(8, lambda / 2, 0.25, lambda);
    return std::abs(music_1d({a * a.adjoint(), Axis::horizontal}, lambda / 2, lambda, 4096, 1) - 0.25);
}

double check_orthogonal_rays()
{
    const std::vector<Ray> rays{{Vec3::Zero(), DirectionVector(Vec3(1, 0, 0))},
                                {Vec3(10, -10, 0), DirectionVector(Vec3(0, 1, 0))}};
    const LocationEstimate e = ls_intersect(rays);
    return (e.point - Vec3(10, 0, 0)).norm() + e.residual;
}

double check_full_size_rays()
{
    const SubarrayTiling tiling(ArrayGeometry::upa(16, 48, lambda / 2, lambda / 2, Vec3::Zero()), 2, 4);
    const Vec3 p(8, 1, -1);
    std::vector<Ray> rays;
    for (const Tile &t : tiling.tiles())
        rays.push_back({t.geometry.center(), DirectionVector((p - t.geometry.center()).normalized())});
    return (ls_intersect(rays).point - p).norm();
}

double check_noiseless_reception()
{
    const SubarrayTiling tiling(ArrayGeometry::upa(4, 8, lambda / 2, lambda / 2, Vec3::Zero()), 2, 2);
    auto comb = std::make_shared<const CombinerDesign>(design_combiner(4, tiling, 2));
    const ArrayGeometry ue = ArrayGeometry::ula(2, lambda / 2, Vec3(6, 1, -1), Vec3(0, 1, 0));
    const CMat h = los_channel(tiling.parent(), ue, lambda);
    const PrecoderDesign w = design_precoder_uniform(2);
    const ReceptionRecord r = simulate_reception(h, comb, w, 2.0, 0.0, 7);
    return (r.y - std::sqrt(2.0) * comb->aggregated() * h * w.w).norm();
}

double check_stage3_single_point()
{
    const SubarrayTiling tiling(ArrayGeometry::upa(4, 8, lambda / 2, lambda / 2, Vec3::Zero()), 2, 2);
    auto comb = std::make_shared<const CombinerDesign>(design_combiner(4, tiling, 2));
    const ArrayGeometry ue = ArrayGeometry::ula(2, lambda / 2, Vec3::Zero(), Vec3(0, 1, 0));
    const Vec3 p(6, 1, -1);
    const CMat h = los_channel(tiling.parent(), ue.translated(p), lambda);
    const ReceptionRecord r = simulate_reception(h, comb, design_precoder_uniform(2), 1.0, 0.0, 1);
    Stage3Options o;
    o.count_x = o.count_y = o.count_z = 1;
    const Stage3Result s = stage3(r, p, tiling.parent(), ue, lambda, o);
    return (s.h_hat - h).norm() / h.norm();
}

double check_metrics()
{
    const CMat h = CMat::Random(3, 2);
    const double a = nmse(h, h);
    const double b = std::abs(nmse(CMat::Zero(3, 2), h) - 1.0);
    const double c = std::abs(nmse(2.0 * h, h) - 1.0);
    const double d = std::abs(rmse({Vec3(0.03, 0.04, 0)}, {Vec3::Zero()}) - 0.05);
    return a + b + c + d;
}

double check_config_roundtrip()
{
    ExperimentConfig c;
    c.sweep.methods = known_methods();
    const std::string once = serialize_config(parse_config(serialize_config(c)).config);
    const std::string twice = serialize_config(parse_config(once).config);
    return once == twice ? 0.0 : 1.0;
}

} // namespace

std::vector<CheckResult> run_verification()
{
    const std::vector<Check> checks{
        {"geometry", "UPA extent (count-1)*spacing, centered", 1e-12, check_upa_extent},
        {"localization", "full-size rays intersect at (8,1,-1)", 1e-9, check_full_size_rays},
        {"channel", "scalar LoS entry 0.1 exp(-j 2 pi 10 / lambda)", 1e-12, check_scalar_channel},
        {"sensing", "full-size combiner identities", 1e-10, check_full_size_combiner},
        {"sensing", "DFT precoder W W^H = I", 1e-12, check_dft_precoder},
        {"dictionary", "location dictionary contains the grid center", 1e-12, check_location_containment},
        {"solvers", "OMP on the identity dictionary", 1e-12, check_omp_identity},
        {"solvers", "SBL scalar fixed point", 1e-6, check_sbl_scalar},
        {"doa", "Kronecker factor round trip", 1e-12, check_kronecker_roundtrip},
        {"doa", "MUSIC recovers 0.25", 1e-4, check_music},
        {"localization", "orthogonal ray intersection", 1e-12, check_orthogonal_rays},
        {"pipeline", "noiseless reception equals sqrt(p) V H w", 1e-12, check_noiseless_reception},
        {"pipeline", "single-point stage 3 reproduces H_los", 1e-6, check_stage3_single_point},
        {"harness", "NMSE / RMSE reference values", 1e-12, check_metrics},
        {"harness", "config round trip", 0.5, check_config_roundtrip},
    };

    std::vector<CheckResult> out;
    for (const Check &c : checks)
    {
        CheckResult r{c.module, c.name, false, ""};
        try
        {
            const double dev = c.run();
            r.passed = dev < c.tol;
            r.detail = "deviation " + sci(dev) + " (tolerance " + sci(c.tol) + ")";
        }
        catch (const std::exception &e)
        {
            r.detail = e.what();
        }
        out.push_back(r);
    }
    return out;
}

} // namespace xlmimo
