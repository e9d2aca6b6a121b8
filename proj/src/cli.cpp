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

#include "xlmimo/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "xlmimo/harness.hpp"
#include "xlmimo/matrix_io.hpp"
#include "xlmimo/verify.hpp"

namespace xlmimo
{

namespace
{

struct Options
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<std::string> method;
    std::optional<double> snr_db;
    std::optional<int> trials;
    bool timings = false;
    std::string kind = "angular";
    std::string format = "binary";
};

LoadedConfig config_from(const Options &o, std::ostream &err)
{
    LoadedConfig lc;
    if (o.config.empty())
        lc.warnings = validate_config(lc.config);
    else
        lc = load_config(o.config);
    for (const std::string &w : lc.warnings)
        err << "warning: " << w << '\n';
    return lc;
}

void write_text(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os)
        throw Error(ErrorCode::io, "cannot write " + path.string());
}

std::filesystem::path out_dir(const Options &o)
{
    std::filesystem::path dir(o.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorCode::io, "cannot create output directory " + o.out);
    return dir;
}

int cmd_verify(std::ostream &out)
{
    int failed = 0;
    for (const CheckResult &r : run_verification())
    {
        out << (r.passed ? "PASS " : "FAIL ") << r.module << ": " << r.name << " [" << r.detail << "]\n";
        failed += r.passed ? 0 : 1;
    }
    out << (failed == 0 ? "all checks passed\n" : std::to_string(failed) + " check(s) failed\n");
    return failed == 0 ? 0 : 2;
}

int cmd_simulate(const Options &o, std::ostream &out, std::ostream &err)
{
    LoadedConfig lc = config_from(o, err);
    const std::string method = canonical_method(o.method.value_or("proposed-sbl"));
    const std::uint64_t seed = o.seed.value_or(lc.config.sweep.base_seed);
    const double snr = o.snr_db.value_or(lc.config.sweep.snr_db.front());

    const Setup setup(lc.config);
    const Trial trial = draw_trial(setup, snr, scene_seed(seed, 0, 0));
    const std::uint64_t method_seed = trial_seed(seed, method, 0, 0);
    const MethodResult r = run_method(setup, method, trial, method_seed);

    const std::filesystem::path dir = out_dir(o);
    write_text(dir / "simulate.json", simulation_report(setup, method, trial, r, method_seed, o.timings));
    write_matrix((dir / "h_hat.xlm").string(), r.h_hat, setup.wavelength());
    write_matrix((dir / "h_true.xlm").string(), trial.channel.h, setup.wavelength());
    out << method << ": NMSE " << nmse_db(r.h_hat, trial.channel.h) << " dB";
    if (r.location)
        out << ", localization error " << (*r.location - trial.user_center).norm() << " m";
    out << "\nwrote " << (dir / "simulate.json").string() << '\n';
    return 0;
}

int cmd_sweep(const Options &o, std::ostream &out, std::ostream &err)
{
    LoadedConfig lc = config_from(o, err);
    ExperimentConfig &c = lc.config;
    if (o.seed)
        c.sweep.base_seed = *o.seed;
    if (o.snr_db)
        c.sweep.snr_db = {*o.snr_db};
    if (o.trials)
        c.sweep.trials = *o.trials;
    if (o.method)
        c.sweep.methods = {*o.method};
    validate_config(c);

    const ResultTable table = run_sweep(c, SweepOptions{o.timings});
    const std::filesystem::path dir = out_dir(o);
    write_text(dir / "results.csv", to_csv(table, o.timings));
    write_text(dir / "results.json", to_json(table, c, o.timings));
    for (const AggregateRow &a : table.aggregates)
    {
        out << a.method << " @ " << a.snr_db << " dB: NMSE " << a.nmse_db << " dB";
        if (a.rmse_m)
            out << ", RMSE " << *a.rmse_m << " m";
        out << ", failed " << a.failed << '/' << a.trials << '\n';
    }
    out << "wrote " << (dir / "results.csv").string() << " and results.json\n";
    return 0;
}

int cmd_export(const Options &o, std::ostream &out, std::ostream &err)
{
    LoadedConfig lc = config_from(o, err);
    const Setup setup(lc.config);
    if (o.format != "binary" && o.format != "text")
        throw Error(ErrorCode::config, "--format must be binary or text");
    const MatrixFormat fmt = o.format == "text" ? MatrixFormat::text : MatrixFormat::binary;
    const std::filesystem::path dir = out_dir(o);

    CMat atoms;
    std::string manifest_text;
    if (o.kind == "angular")
    {
        atoms = setup.angular().atoms;
        manifest_text = manifest(setup.angular());
    }
    else if (o.kind == "spherical")
    {
        atoms = setup.spherical_dictionary().atoms;
        manifest_text = manifest(setup.spherical_dictionary());
    }
    else if (o.kind == "location")
    {
        const EstimatorConfig &e = lc.config.estimator;
        LocationGrid g;
        g.center = 0.5 * (lc.config.scene.user_min + lc.config.scene.user_max);
        g.half_width = e.half_width;
        g.count_x = e.count_x;
        g.count_y = e.count_y;
        g.count_z = e.count_z;
        g.min_x = e.min_x;
        const LocationDictionary d = build_location(g, setup.bs(), setup.ue_template(), setup.wavelength());
        atoms = d.atoms;
        manifest_text = manifest(d);
    }
    else if (o.kind == "combiner")
    {
        atoms = setup.combiner()->aggregated();
        manifest_text = "kind combiner\nrows " + std::to_string(atoms.rows()) + "\ncolumns " +
                        std::to_string(atoms.cols()) + "\n";
    }
    else
        throw Error(ErrorCode::config, "--kind must be angular, location, spherical or combiner");

    write_matrix((dir / (o.kind + ".xlm")).string(), atoms, setup.wavelength(), fmt);
    write_text(dir / (o.kind + ".manifest.txt"), manifest_text);
    out << "wrote " << (dir / (o.kind + ".xlm")).string() << " (" << atoms.rows() << " x " << atoms.cols() << ")\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Near-field XL-MIMO localization and channel estimation"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&o](CLI::App *sub) {
        sub->add_option("--config", o.config, "experiment config (JSON)");
        sub->add_option("--seed", o.seed, "base seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_flag("--timings", o.timings, "record wall-clock stage timings (output is then run-dependent)");
    };

    CLI::App *verify = app.add_subcommand("verify", "run the built-in invariant checks");
    CLI::App *simulate = app.add_subcommand("simulate", "simulate one scene with one method");
    add_common(simulate);
    simulate->add_option("--method", o.method, "method name (default proposed-sbl)");
    simulate->add_option("--snr-db", o.snr_db, "SNR in dB");
    CLI::App *sweep = app.add_subcommand("sweep", "Monte-Carlo sweep; writes results.csv and results.json");
    add_common(sweep);
    sweep->add_option("--method", o.method, "restrict the sweep to one method");
    sweep->add_option("--snr-db", o.snr_db, "replace the SNR grid with one point");
    sweep->add_option("--trials", o.trials, "trials per point");
    CLI::App *exportd = app.add_subcommand("export-dict", "dump a dictionary or the combiner as a matrix file");
    add_common(exportd);
    exportd->add_option("--kind", o.kind, "angular | location | spherical | combiner");
    exportd->add_option("--format", o.format, "binary | text");

    // CLI11 consumes the vector from the back.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp &)
    {
        out << app.help();
        return 0;
    }
    catch (const CLI::ParseError &e)
    {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try
    {
        if (verify->parsed())
            return cmd_verify(out);
        if (simulate->parsed())
            return cmd_simulate(o, out, err);
        if (sweep->parsed())
            return cmd_sweep(o, out, err);
        return cmd_export(o, out, err);
    }
    catch (const Error &e)
    {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::config ? 1 : 2;
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace xlmimo
