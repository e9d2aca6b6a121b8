// Acceptance runner: one PASS/FAIL line per criterion, with measured values,
// pinned tolerances and runtime budgets. Usage: xlmimo_acceptance [N ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xlmimo/cli.hpp"
#include "xlmimo/doa.hpp"
#include "xlmimo/harness.hpp"

using namespace xlmimo;

namespace
{

const double lambda = wavelength_from_carrier(6.8e9);

std::string config_path(const std::string &name) { return std::string(XLMIMO_SOURCE_DIR) + "/configs/" + name; }

std::string fmt(const char *f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string sci(double v) { return fmt("%.2e", v); }

struct Outcome
{
    bool pass = true;
    std::vector<std::string> parts;

    void require(bool ok, const std::string &what)
    {
        pass = pass && ok;
        parts.push_back(what);
    }
};

struct Criterion
{
    int id;
    const char *title;
    double budget_s;
    std::function<void(Outcome &)> run;
};

CVec cgauss(std::mt19937_64 &rng, Eigen::Index n)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = cd(g(rng), g(rng));
    return v;
}

SubarrayTiling full_tiling() { return {ArrayGeometry::upa(16, 48, lambda / 2, lambda / 2, Vec3::Zero()), 2, 4}; }

// 1 -----------------------------------------------------------------------

void sensing_exactness(Outcome &o)
{
    const SubarrayTiling t = full_tiling();
    const CombinerDesign c = design_combiner(6, t, 16);
    double tile = 0.0;
    for (int i = 0; i < c.num_tiles(); ++i)
    {
        const CMat &v = c.tile_block(i);
        tile = std::max(tile, (v.adjoint() * v - CMat::Identity(v.cols(), v.cols())).norm());
    }
    const CMat &g = c.aggregated();
    const double global = (g.adjoint() * g - CMat::Identity(g.cols(), g.cols())).norm();
    o.require(tile < 1e-10, "max_i |V_i^H V_i - I|_F " + sci(tile) + " < 1e-10");
    o.require(global < 1e-10, "|V^H V - I_768|_F " + sci(global) + " < 1e-10");
}

// 2 -----------------------------------------------------------------------

void noise_whiteness(Outcome &o)
{
    const SubarrayTiling t = full_tiling();
    const CombinerDesign c = design_combiner(6, t, 16);
    const double var = 1.0;
    const int draws = 10000;
    const Eigen::Index in = static_cast<Eigen::Index>(c.slots()) * c.num_antennas();
    CMat y(c.num_outputs(), draws);
    std::mt19937_64 rng(2024);
    for (int k = 0; k < draws; ++k)
        y.col(k) = c.apply_hat(cgauss(rng, in) * std::sqrt(var / 2));
    CMat cov = CMat::Zero(y.rows(), y.rows());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0 / draws);
    cov = cov.selfadjointView<Eigen::Lower>();
    const double diag = cov.diagonal().real().mean();
    double off = 0.0;
    for (Eigen::Index a = 0; a < cov.rows(); ++a)
        for (Eigen::Index b = 0; b < a; ++b)
            off = std::max(off, std::abs(cov(a, b)));
    o.require(std::abs(diag - var) < 0.05 * var, "diag mean / sigma^2 " + fmt("%.4f", diag / var) + " within 5%");
    o.require(off < 0.05 * var, "max |off-diag| / sigma^2 " + fmt("%.4f", off / var) + " < 0.05");
}

// 3 -----------------------------------------------------------------------

void solver_oracles(Outcome &o)
{
    // OMP: 100 planted 2-sparse problems on a 16 x 64 angular dictionary. A support
    // counts as well separated when it meets the exact recovery condition
    // max_{w not in S} |A_S^+ a_w|_1 < 1, under which OMP must recover it.
    const AngularDictionary d = build_angular(4, 4, lambda / 2, lambda / 2, lambda, 8);
    auto separated = [&](int i, int j) {
        if (i == j)
            return false;
        CMat sub(d.atoms.rows(), 2);
        sub << d.atoms.col(i), d.atoms.col(j);
        const CMat pinv = sub.completeOrthogonalDecomposition().pseudoInverse();
        for (int w = 0; w < d.size(); ++w)
            if (w != i && w != j && (pinv * d.atoms.col(w)).cwiseAbs().sum() >= 1.0)
                return false;
        return true;
    };
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<int> pick(0, d.size() - 1);
    int exact = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep)
    {
        int i = pick(rng), j = pick(rng);
        while (!separated(i, j))
        {
            i = pick(rng);
            j = pick(rng);
        }
        CVec x = CVec::Zero(d.size());
        x(i) = cgauss(rng, 1)(0);
        x(j) = cgauss(rng, 1)(0);
        OmpOptions opts;
        opts.max_atoms = 2;
        const SparseSolution s = omp(d.atoms, d.atoms * x, opts);
        const double err = (s.coefficients - x).norm() / x.norm();
        worst = std::max(worst, err);
        exact += err < 1e-10;
    }
    o.require(exact == 100, "OMP exact " + std::to_string(exact) + "/100, worst rel. error " + sci(worst) + " < 1e-10");

    // SBL: posterior mean solves (A^H A / s2 + Gamma^-1) mu = A^H y / s2 on the
    // retained atoms, and the evidence never decreases.
    double consistency = 0.0;
    double worst_drop = 0.0;
    int monotone = 0;
    for (int rep = 0; rep < 20; ++rep)
    {
        const Eigen::Index p = 16 + 4 * (rep % 3);
        const Eigen::Index q = rep % 2 == 0 ? 48 : 12;
        CMat a(p, q);
        for (Eigen::Index c = 0; c < q; ++c)
            a.col(c) = cgauss(rng, p);
        CVec x = CVec::Zero(q);
        x(rep % q) = cgauss(rng, 1)(0) * 3.0;
        x((rep * 7 + 3) % q) = cgauss(rng, 1)(0) * 3.0;
        const double s2 = 0.05;
        const CVec y = a * x + std::sqrt(s2 / 2) * cgauss(rng, p);
        SblOptions opts;
        opts.track_evidence = true;
        const SblResult r = sbl_em(a, y, s2, opts);

        const std::vector<int> &act = r.state.active;
        CMat ak(p, static_cast<Eigen::Index>(act.size()));
        CVec mu(ak.cols());
        RVec g(ak.cols());
        for (size_t k = 0; k < act.size(); ++k)
        {
            ak.col(static_cast<Eigen::Index>(k)) = a.col(act[k]);
            mu(static_cast<Eigen::Index>(k)) = r.state.mean(act[k]);
            g(static_cast<Eigen::Index>(k)) = r.state.gamma(act[k]);
        }
        CMat lhs = ak.adjoint() * ak / s2;
        lhs.diagonal() += g.cwiseInverse().cast<cd>();
        const CVec rhs = ak.adjoint() * y / s2;
        consistency = std::max(consistency, (lhs * mu - rhs).norm() / rhs.norm());

        bool ok = true;
        const std::vector<double> &ev = r.state.log_evidence;
        for (size_t k = 1; k < ev.size(); ++k)
        {
            const double drop = (ev[k - 1] - ev[k]) / std::abs(ev[k - 1]);
            worst_drop = std::max(worst_drop, drop);
            ok = ok && drop <= 1e-12;
        }
        monotone += ok;
    }
    o.require(consistency < 1e-8, "SBL linear-system residual " + sci(consistency) + " < 1e-8");
    o.require(monotone == 20, "SBL evidence monotone " + std::to_string(monotone) +
                                  "/20 (worst relative drop " + sci(std::max(worst_drop, 0.0)) + ", slack 1e-12)");
}

// 4 -----------------------------------------------------------------------

void music_extraction(Outcome &o)
{
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> ph(-pi, pi);
    double round_trip = 0.0;
    for (int rep = 0; rep < 20; ++rep)
    {
        CVec vh(8), vv(12);
        for (Eigen::Index k = 0; k < 8; ++k)
            vh(k) = std::polar(1.0, ph(rng));
        for (Eigen::Index k = 0; k < 12; ++k)
            vv(k) = std::polar(1.0, ph(rng));
        const CMat ch = vh * vh.adjoint();
        const CMat cv = vv * vv.adjoint();
        CMat c(96, 96);
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b)
                c.block(a * 12, b * 12, 12, 12) = ch(a, b) * cv;
        const AxisFactors f = extract_axis_factors(c, 8, 12);
        round_trip = std::max({round_trip, (f.horizontal.matrix - ch).norm(), (f.vertical.matrix - cv).norm()});
    }
    o.require(round_trip < 1e-12, "Kronecker round trip " + sci(round_trip) + " < 1e-12");

    std::uniform_real_distribution<double> w(-0.95, 0.95);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep)
    {
        const double truth = w(rng);
        const int m = rep % 2 == 0 ? 8 : 12;
        const CVec a = far_field_steering(m, lambda / 2, truth, lambda);
        const double est = music_1d({a * a.adjoint(), Axis::horizontal}, lambda / 2, lambda, 4096, 1);
        worst = std::max(worst, std::abs(est - truth));
    }
    o.require(worst < 1e-4, "MUSIC worst error over 100 angles " + sci(worst) + " < 1e-4");
}

// 5 -----------------------------------------------------------------------

// Numeric oracle that only evaluates f: Newton steps on central-difference
// gradients and Hessians.
Vec3 numeric_minimize(const std::vector<Ray> &rays, Vec3 p)
{
    const double h = 1e-2;
    auto f = [&](const Vec3 &q) { return ray_residual(rays, q); };
    for (int it = 0; it < 6; ++it)
    {
        Vec3 grad;
        Mat3 hess;
        for (int a = 0; a < 3; ++a)
        {
            const Vec3 ea = h * Vec3::Unit(a);
            grad(a) = (f(p + ea) - f(p - ea)) / (2 * h);
            for (int b = 0; b < 3; ++b)
            {
                const Vec3 eb = h * Vec3::Unit(b);
                hess(a, b) = (f(p + ea + eb) - f(p + ea - eb) - f(p - ea + eb) + f(p - ea - eb)) / (4 * h * h);
            }
        }
        p -= hess.fullPivLu().solve(grad);
    }
    return p;
}

void ls_localization(Outcome &o)
{
    const SubarrayTiling t = full_tiling();
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> g(0.0, 0.01);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep)
    {
        const Vec3 target(10 + 5 * u(rng), 5 * u(rng), -1 + 0.5 * u(rng));
        std::vector<Ray> rays;
        for (const Tile &tile : t.tiles())
        {
            const Vec3 k = (target - tile.geometry.center()).normalized() + Vec3(g(rng), g(rng), g(rng));
            rays.push_back({tile.geometry.center(), DirectionVector(k.normalized())});
        }
        const Vec3 closed = ls_intersect(rays).point;
        const Vec3 numeric = numeric_minimize(rays, target);
        worst = std::max(worst, (closed - numeric).norm());
    }
    o.require(worst < 1e-6, "closed form vs numeric minimizer, worst over 50 scenes " + sci(worst) + " m < 1e-6");

    const Vec3 p(8, 1, -1);
    std::vector<Ray> rays;
    for (const Tile &tile : t.tiles())
        rays.push_back({tile.geometry.center(), DirectionVector((p - tile.geometry.center()).normalized())});
    const double exact = (ls_intersect(rays).point - p).norm();
    o.require(exact < 1e-9, "exact full-size rays " + sci(exact) + " m < 1e-9");
}

// 6 -----------------------------------------------------------------------

void end_to_end(Outcome &o)
{
    LoadedConfig lc = load_config(config_path("full.json"));
    ExperimentConfig &c = lc.config;
    c.scene.paths = 0;
    // noiseless: stage 1 stops on the residual, not on the assumed path count
    c.estimator.stage1.max_atoms = -1;
    const Setup setup(c);
    const Vec3 center(8, 1, -1);
    const ArrayGeometry ue = setup.ue_template().translated(center);
    Trial trial{Scene{setup.bs(), ue, {}, setup.wavelength(), 1.0, 0.0, c.scene.los_to_nlos_db}, center, {}, 0.0};
    trial.channel = synthesize(trial.scene, 1);
    const MethodResult r = run_method(setup, "proposed-sbl", trial, 1);
    const double e_db = nmse_db(r.h_hat, trial.channel.h);
    const double loc = (*r.location - center).norm();
    o.require(e_db < -40.0, "NMSE " + fmt("%.1f", e_db) + " dB < -40");
    o.require(loc < 0.05, "localization error " + sci(loc) + " m < 0.05");
}

// 7 -----------------------------------------------------------------------

void ordering(Outcome &o)
{
    LoadedConfig lc = load_config(config_path("desk.json"));
    ExperimentConfig &c = lc.config;
    c.sweep.methods = known_methods();
    c.sweep.snr_db = {10.0};
    c.sweep.trials = 200;
    const ResultTable t = run_sweep(c);
    std::map<std::string, AggregateRow> a;
    for (const AggregateRow &row : t.aggregates)
        a[row.method] = row;
    auto db = [&](const char *m) { return a.at(m).nmse_db; };
    int failed = 0;
    for (const auto &[m, row] : a)
        failed += row.failed;

    std::ostringstream table;
    for (const std::string &m : known_methods())
        table << m << '=' << fmt("%.2f", db(m.c_str())) << (m == known_methods().back() ? "" : " ");
    o.parts.push_back("200 trials at 10 dB, NMSE dB: " + table.str());

    o.require(db("proposed-sbl") < db("proposed-omp3"), "SBL < OMP3");
    o.require(db("proposed-omp3") < db("stage1-only"), "OMP3 < stage1-only");
    for (const char *b : {"antenna-wise-dft", "antenna-wise-spherical", "antenna-wise-subarray-dft", "eigen-dictionary"})
        o.require(db("proposed-sbl") < db(b), std::string("SBL < ") + b);
    const double rd = *a.at("proposed-sbl").rmse_m;
    const double rr = *a.at("random-combiner").rmse_m;
    o.require(rd < rr, "RMSE designed " + fmt("%.3f", rd) + " m < random " + fmt("%.3f", rr) + " m");
    o.parts.push_back("failed trials " + std::to_string(failed));
}

// 8 -----------------------------------------------------------------------

std::string slurp(const std::filesystem::path &p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void determinism(Outcome &o)
{
    const std::filesystem::path root = std::filesystem::temp_directory_path() / "xlmimo-acceptance-8";
    std::filesystem::remove_all(root);
    const std::string cfg = config_path("desk.json");
    std::ostringstream sink;
    int rc = 0;
    for (const char *run : {"a", "b"})
    {
        const std::string dir = (root / run).string();
        rc |= run_cli({"simulate", "--config", cfg, "--method", "proposed", "--seed", "7", "--out", dir + "/sim"}, sink,
                      sink);
        rc |= run_cli({"sweep", "--config", cfg, "--trials", "1", "--seed", "7", "--out", dir + "/sweep"}, sink, sink);
    }
    o.require(rc == 0, "both runs exit 0");
    int same = 0;
    const std::vector<std::string> files{"sim/simulate.json", "sim/h_hat.xlm", "sim/h_true.xlm", "sweep/results.csv",
                                         "sweep/results.json"};
    for (const std::string &f : files)
    {
        const std::string a = slurp(root / "a" / f);
        same += !a.empty() && a == slurp(root / "b" / f);
    }
    o.require(same == static_cast<int>(files.size()),
              "byte-identical files " + std::to_string(same) + "/" + std::to_string(files.size()));
    std::filesystem::remove_all(root);
}

} // namespace

int main(int argc, char **argv)
{
    const std::vector<Criterion> all{
        {1, "sensing design exactness", 5, sensing_exactness},
        {2, "noise whiteness", 30, noise_whiteness},
        {3, "solver oracles", 60, solver_oracles},
        {4, "MUSIC + extraction exactness", 60, music_extraction},
        {5, "LS localization", 30, ls_localization},
        {6, "end-to-end noiseless sanity", 120, end_to_end},
        {7, "ordering reproduction (desk profile)", 600, ordering},
        {8, "determinism", 120, determinism},
    };

    std::set<int> wanted;
    for (int k = 1; k < argc; ++k)
        wanted.insert(std::atoi(argv[k]));

    bool all_pass = true;
    for (const Criterion &c : all)
    {
        if (!wanted.empty() && !wanted.count(c.id))
            continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            c.run(o);
        }
        catch (const std::exception &e)
        {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(secs < c.budget_s, "runtime " + fmt("%.1f", secs) + " s < " + fmt("%.0f", c.budget_s) + " s");

        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << ": ";
        for (size_t k = 0; k < o.parts.size(); ++k)
            std::cout << (k ? "; " : "") << o.parts[k];
        std::cout << std::endl;
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
