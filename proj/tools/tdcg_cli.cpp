#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include "tdcg/basis.hpp"
#include "tdcg/config.hpp"
#include "tdcg/errors.hpp"
#include "tdcg/friction.hpp"
#include "tdcg/md.hpp"
#include "tdcg/observables.hpp"
#include "tdcg/pair_forces.hpp"
#include "tdcg/parallel.hpp"
#include "tdcg/pipeline.hpp"
#include "tdcg/psfm.hpp"
#include "tdcg/trj_io.hpp"

#ifndef TDCG_CONFIG_DIR
#define TDCG_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace tdcg;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitAcceptance = 3;

struct Globals
{
    std::string config;
    std::string out = "out";
    std::int64_t seed = -1;
    int threads = 0;
    std::string command_line;
};

Config load_config(const Globals& g)
{
    if (g.config.empty())
        throw ConfigError("--config is required", {});
    return Config::load(g.config);
}

/// Applies --seed to whichever generator tables the config defines.
std::uint64_t apply_seed(Config& cfg, const Globals& g)
{
    const char* tables[] = {"langevin", "reference", "md"};
    std::uint64_t seed = 0;
    for (const char* t : tables) {
        if (!cfg.has_table(t))
            continue;
        if (g.seed >= 0)
            cfg.set(t, "seed", static_cast<std::int64_t>(g.seed));
        if (cfg.has(t, "seed") && seed == 0)
            seed = static_cast<std::uint64_t>(cfg.integer(t, "seed"));
    }
    return seed;
}

SimBox box_from_config(const Config& cfg, const char* table)
{
    cfg.require({std::string(table) + ".fcc_cell", std::string(table) + ".n_cells"});
    return SimBox::cubic(cfg.number(table, "fcc_cell") * static_cast<double>(cfg.integer(table, "n_cells")));
}

SimBox data_box(const Config& cfg)
{
    if (cfg.has("md", "fcc_cell"))
        return box_from_config(cfg, "md");
    return box_from_config(cfg, "reference");
}

Scheme scheme_of(const std::string& s)
{
    if (s == "em" || s == "euler-maruyama")
        return Scheme::EulerMaruyama;
    if (s == "baoab")
        return Scheme::BAOAB;
    throw ConfigError("unknown integrator scheme", {s});
}

struct LoadedField
{
    std::optional<PairForceField> stat;
    std::optional<TimeDependentPairForceField> td;
};

LoadedField load_field(const fs::path& path)
{
    const CoefficientFile f = read_coefficients_csv(path);
    LoadedField out;
    if (f.t_grid)
        out.td = TimeDependentPairForceField(TensorBasis2D(SplineBasis1D(f.r_grid), SplineBasis1D(*f.t_grid)), f.coeffs,
                                             f.cutoff, f.t_grid->hi);
    else
        out.stat = PairForceField(SplineBasis1D(f.r_grid), f.coeffs, f.cutoff);
    return out;
}

void write_scalar_report(const fs::path& dest, const std::vector<std::pair<std::string, double>>& rows)
{
    std::ofstream out(dest);
    if (!out)
        throw IoError("cannot write " + dest.string());
    out << std::setprecision(12);
    for (const auto& [k, v] : rows) {
        out << k << ' ' << v << '\n';
        std::cout << k << ' ' << v << '\n';
    }
}

// ----------------------------------------------------------------- simulate

int cmd_simulate(const Globals& g)
{
    Config cfg = load_config(g);
    cfg.reject_unknown(config_schema());
    const std::uint64_t seed = apply_seed(cfg, g);
    const fs::path out(g.out);
    Ensemble ens;
    if (cfg.has_table("gle")) {
        ens = simulate_bench_ensemble(BenchSetup::from_config(cfg));
    } else if (cfg.has_table("reference")) {
        const FluidSetup s = FluidSetup::from_config(cfg);
        FineReferenceSpec fine;
        fine.box = s.box();
        fine.fcc_cell = s.fcc_cell;
        fine.field = s.fine_field();
        fine.zeta = s.zeta;
        fine.beta = s.beta;
        fine.mass = s.mass;
        fine.skin = s.skin;
        fine.record = s.record;
        fine.integrator = {Scheme::BAOAB, s.dt, s.n_steps, s.record_stride, 0, true};
        fine.n_paths = s.n_paths;
        fine.master_seed = derive_seed(s.seed, "fine");
        ens = run_fine_reference(fine);
    } else if (cfg.has_table("md")) {
        cfg.require({"md.field", "md.zeta", "md.beta", "md.dt", "md.n_steps", "md.record_stride", "md.seed",
                     "md.n_paths"});
        const LoadedField field = load_field(cfg.string("md", "field"));
        MDSystem sys;
        sys.box = box_from_config(cfg, "md");
        sys.positions = init_fcc(sys.box, cfg.number("md", "fcc_cell"));
        sys.masses.assign(sys.positions.size() / 3, cfg.number_or("md", "mass", 1.0));
        if (field.td)
            sys.field = *field.td;
        else
            sys.field = *field.stat;
        sys.zeta0 = cfg.number("md", "zeta");
        sys.beta = cfg.number("md", "beta");
        sys.skin = cfg.number_or("md", "skin", 0.0);
        const bool record = cfg.boolean_or("md", "record_forces", false);
        const IntegratorSpec spec{scheme_of(cfg.string_or("md", "scheme", "baoab")), cfg.number("md", "dt"),
                                  static_cast<std::size_t>(cfg.integer("md", "n_steps")),
                                  static_cast<std::size_t>(cfg.integer("md", "record_stride")), 0, record};
        ens = generate_ensemble(
            [&](std::uint64_t s) {
                IntegratorSpec sp = spec;
                sp.seed = s;
                return run_md(sys, sp);
            },
            static_cast<std::size_t>(cfg.integer("md", "n_paths")), derive_seed(seed, "md"), sys.beta);
    } else {
        throw ConfigError("simulate needs one of the tables", {"gle", "reference", "md"});
    }
    write_ensemble(ens, out / "ensemble");
    write_manifest(out, cfg, seed, g.threads, g.command_line);
    std::cout << "wrote " << ens.n_paths() << " paths x " << ens.n_frames() << " frames to "
              << (out / "ensemble").string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------- fit

int cmd_fit(const Globals& g, const std::string& data, const std::string& mode, double t_instant)
{
    Config cfg = load_config(g);
    cfg.reject_unknown(config_schema());
    const fs::path out(g.out);
    fs::create_directories(out);
    const Ensemble ens = read_ensemble(data);
    const double t_f = ens.paths.front().times().back();
    const double ridge_scale = cfg.number_or("fit", "ridge_scale", 0.0);

    if (mode == "separable") {
        cfg.require({"basis_r.n_basis", "basis_r.degree", "basis_t.n_basis", "basis_t.degree"});
        const SplineBasis1D d_basis(KnotGrid{0.0, t_f, static_cast<int>(cfg.integer("basis_t", "n_basis")),
                                             static_cast<int>(cfg.integer("basis_t", "degree"))});
        double lo = 0.0, hi = 0.0;
        if (cfg.has("basis_r", "lo")) {
            cfg.require({"basis_r.hi"});
            lo = cfg.number("basis_r", "lo");
            hi = cfg.number("basis_r", "hi");
        } else {
            lo = std::numeric_limits<double>::infinity();
            hi = -lo;
            for (const auto& tr : ens.paths)
                for (std::size_t i = 0; i < tr.size(); ++i) {
                    lo = std::min(lo, tr.positions(i)[0]);
                    hi = std::max(hi, tr.positions(i)[0]);
                }
            const double pad = cfg.number_or("basis_r", "pad", 0.05) * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        const KnotGrid b_grid{lo, hi, static_cast<int>(cfg.integer("basis_r", "n_basis")),
                              static_cast<int>(cfg.integer("basis_r", "degree"))};
        const SplineBasis1D b_basis(b_grid);
        const SeparableFit fit =
            fit_separable(ens, d_basis, b_basis, static_cast<int>(cfg.integer_or("fit", "als_iters", 50)),
                          cfg.number_or("fit", "tol", 1e-10), cfg.number_or("fit", "ridge", 0.0));
        std::ofstream f(out / "separable_coefficients.csv");
        f << "# d_basis lo=0 hi=" << t_f << " n=" << d_basis.size() << " degree=" << d_basis.grid().degree
          << "\n# b_basis lo=" << lo << " hi=" << hi << " n=" << b_grid.n_basis << " degree=" << b_grid.degree
          << "\nfactor,index,coeff\n"
          << std::setprecision(17);
        for (std::size_t i = 0; i < fit.theta1.size(); ++i)
            f << "D," << i << ',' << fit.theta1[i] << '\n';
        for (std::size_t i = 0; i < fit.theta2.size(); ++i)
            f << "B," << i << ',' << fit.theta2[i] << '\n';
        const SeparableForce force = fit.force(d_basis, b_basis);
        std::ofstream tab(out / "separable_field.csv");
        tab << "t,q,f\n" << std::setprecision(12);
        for (double t : linspace(0.0, t_f, 25))
            for (double q : linspace(lo, hi, 101))
                tab << t << ',' << q << ',' << force(q, t) << '\n';
        std::cout << "separable fit: " << fit.sweeps << " sweeps, converged=" << fit.converged << ", rms residual "
                  << fit.residual_trace.back() << '\n';
    } else {
        cfg.require({"basis_r.lo", "basis_r.hi", "basis_r.n_basis", "basis_r.degree"});
        const KnotGrid r_grid{cfg.number("basis_r", "lo"), cfg.number("basis_r", "hi"),
                              static_cast<int>(cfg.integer("basis_r", "n_basis")),
                              static_cast<int>(cfg.integer("basis_r", "degree"))};
        const SplineBasis1D r_basis(r_grid);
        PairFitSetup setup{CGMapping::identity(ens.paths.front().masses()), data_box(cfg), 0.0};
        const auto grid = linspace(cfg.number_or("observables", "potential_r_min", r_grid.lo), r_grid.hi,
                                   static_cast<std::size_t>(cfg.integer_or("observables", "potential_points", 200)));
        FitResult fit;
        if (mode == "time-dependent") {
            cfg.require({"basis_t.n_basis", "basis_t.degree"});
            const SplineBasis1D t_basis(KnotGrid{0.0, t_f, static_cast<int>(cfg.integer("basis_t", "n_basis")),
                                                 static_cast<int>(cfg.integer("basis_t", "degree"))});
            std::vector<FrameRef> all;
            for (std::size_t p = 0; p < ens.n_paths(); ++p)
                for (std::size_t f = 0; f < ens.paths[p].size(); ++f)
                    all.push_back({p, f});
            const auto acc = accumulate_frames(ens, all, setup, r_basis, &t_basis);
            fit = solve(acc, ridge_scale > 0.0 ? ridge_scale * recommended_ridge(acc) : 0.0);
            const TimeDependentPairForceField field(TensorBasis2D(r_basis, t_basis), fit.coeff_vector(), r_grid.hi, t_f);
            export_coefficients_csv(field.coeffs(), r_grid, &t_basis.grid(), r_grid.hi, out / "coefficients.csv");
            export_field_csv(field, linspace(0.0, t_f, 11), grid, out / "field.csv");
        } else if (mode == "equilibrium" || mode == "instant") {
            std::vector<FrameRef> refs;
            if (mode == "instant") {
                const double t = t_instant >= 0.0 ? t_instant : cfg.number("fit", "instant_t");
                for (std::size_t p = 0; p < ens.n_paths(); ++p)
                    refs.push_back({p, nearest_frame(ens.paths[p], t)});
            } else {
                const double t0 = cfg.number_or("fit", "eq_window_start", 0.0) * t_f;
                for (std::size_t p = 0; p < ens.n_paths(); ++p)
                    for (std::size_t f = 0; f < ens.paths[p].size(); ++f)
                        if (ens.paths[p].times()[f] >= t0 - 1e-12)
                            refs.push_back({p, f});
            }
            const auto acc = accumulate_frames(ens, refs, setup, r_basis);
            fit = solve(acc, ridge_scale > 0.0 ? ridge_scale * recommended_ridge(acc) : 0.0);
            const PairForceField field(r_basis, fit.coeff_vector(), r_grid.hi);
            export_coefficients_csv(field.coeffs(), r_grid, nullptr, r_grid.hi, out / "coefficients.csv");
            export_field_csv(field, grid, out / "field.csv");
        } else {
            throw ArgumentError("unknown fit mode " + mode);
        }
        std::cout << mode << " fit: " << fit.coeffs.size() << " coefficients, rms residual " << fit.rms_residual
                  << ", condition " << fit.condition_estimate << (fit.eigen_fallback ? " (eigen fallback)" : "")
                  << ", rows " << fit.n_rows << ", excluded pairs " << fit.n_excluded << '\n';
    }
    write_manifest(out, cfg, 0, g.threads, g.command_line);
    return 0;
}

// ----------------------------------------------------------------- friction

int cmd_friction(const Globals& g, const std::string& data, const std::string& mode, const std::string& field_path)
{
    Config cfg = load_config(g);
    cfg.reject_unknown(config_schema());
    const fs::path out(g.out);
    fs::create_directories(out);
    const Ensemble ens = read_ensemble(data);
    const double beta = ens.beta;
    std::vector<std::pair<std::string, double>> report;

    if (mode == "qv") {
        const auto stride = static_cast<std::size_t>(cfg.integer_or("friction", "qv_stride", 1));
        const Trajectory path = subsample(ens.paths.front(), stride);
        const double sigma = sigma0_quadratic_variation(path);
        report = {{"sigma0", sigma},
                  {"zeta0_fdt", zeta_from_sigma(sigma, beta)},
                  {"increments", static_cast<double>(path.size() - 1)},
                  {"spacing", path.dt_nominal()}};
    } else if (mode == "equilibrium" || mode == "transient") {
        const Trajectory& first = ens.paths.front();
        const double t_f = first.times().back();
        const auto mapping = CGMapping::identity(first.masses());
        std::unique_ptr<ForceModel> model;
        if (first.dim() == 1) {
            const double alpha = cfg.number("friction", "alpha");
            model = std::make_unique<ScalarForce>([alpha](double q, double) { return -alpha * q; });
        } else {
            if (field_path.empty())
                throw ConfigError("--field is required for particle data", {"--field"});
            const LoadedField field = load_field(field_path);
            const SimBox box = data_box(cfg);
            if (field.td)
                model = std::make_unique<TDPairFieldForce>(*field.td, box);
            else
                model = std::make_unique<PairFieldForce>(*field.stat, box);
        }
        const bool eq = mode == "equilibrium";
        const double t0 = eq ? cfg.number_or("fit", "eq_window_start", 0.0) * t_f : 0.0;
        const Ensemble win = t0 > 0.0 ? slice_time(ens, t0, t_f) : ens;
        const std::string origin_name = cfg.string_or("friction", "origin", eq ? "sliding" : "fixed");
        const Origin origin = origin_name == "sliding" ? Origin::Sliding : Origin::FixedZero;
        const auto max_lag = static_cast<std::size_t>(cfg.integer_or("friction", "max_lag", 0));
        const auto cvv = vacf(win, mapping, origin, max_lag);
        const auto cfv = force_velocity_corr(win, mapping, *model, origin, max_lag);
        const double t_upper = cfg.number_or("friction", "t_upper", first_zero_crossing(cvv));
        const double zeta = zeta0_from_green_kubo(cfv, cvv, t_upper);
        export_series_csv(cvv, out / "vacf.csv");
        export_series_csv(cfv, out / "force_velocity_corr.csv");
        report = {{"zeta0", zeta},
                  {"sigma0_fdt", zeta > 0.0 ? sigma_from_zeta(zeta, beta) : 0.0},
                  {"window_t0", t0},
                  {"window_t1", t_f},
                  {"t_upper", t_upper},
                  {"sliding_origins", origin == Origin::Sliding ? 1.0 : 0.0}};
    } else {
        throw ArgumentError("unknown friction mode " + mode);
    }
    write_scalar_report(out / "friction.txt", report);
    write_manifest(out, cfg, 0, g.threads, g.command_line);
    return 0;
}

// ---------------------------------------------------------------------- obs

int cmd_obs(const Globals& g, const std::string& data, const std::string& which)
{
    Config cfg = load_config(g);
    cfg.reject_unknown(config_schema());
    const fs::path out(g.out);
    fs::create_directories(out);
    const Ensemble ens = read_ensemble(data);
    const Trajectory& first = ens.paths.front();
    const auto mapping = CGMapping::identity(first.masses());
    const Origin origin =
        cfg.string_or("friction", "origin", "sliding") == "sliding" ? Origin::Sliding : Origin::FixedZero;
    const auto max_lag = static_cast<std::size_t>(cfg.integer_or("observables", "vacf_max_lag", 0));

    if (which == "rdf") {
        RdfSpec spec;
        spec.r_max = cfg.number("observables", "rdf_r_max");
        spec.n_bins = static_cast<std::size_t>(cfg.integer_or("observables", "rdf_bins", 60));
        spec.dim = first.dim();
        spec.box = data_box(cfg);
        const double t_f = first.times().back();
        const std::vector<double> instants =
            cfg.has("observables", "rdf_instants") ? cfg.numbers("observables", "rdf_instants") : std::vector<double>{1.0};
        for (double frac : instants) {
            std::vector<std::vector<double>> frames;
            for (const auto& tr : ens.paths) {
                const auto q = tr.positions(nearest_frame(tr, frac * t_f));
                frames.emplace_back(q.begin(), q.end());
            }
            std::ostringstream name;
            name << "rdf_t" << std::setprecision(4) << frac * t_f << ".csv";
            export_rdf_csv(rdf(frames, spec), out / name.str());
        }
    } else if (which == "vacf") {
        export_series_csv(vacf(ens, mapping, origin, max_lag), out / "vacf.csv");
    } else if (which == "dc") {
        const auto c = vacf(ens, mapping, origin, max_lag);
        const double t_upper = cfg.number_or("friction", "t_upper", first_zero_crossing(c));
        write_scalar_report(out / "diffusion.txt",
                            {{"diffusion", diffusion_coefficient(c, t_upper)}, {"t_upper", t_upper}});
    } else if (which == "moments") {
        export_moments_csv(ensemble_moments(ens), out / "moments.csv");
    } else {
        throw ArgumentError("unknown observable " + which);
    }
    write_manifest(out, cfg, 0, g.threads, g.command_line);
    return 0;
}

// ---------------------------------------------------------------- reproduce

int cmd_reproduce(const Globals& g, const std::string& name)
{
    Globals local = g;
    if (local.config.empty())
        local.config = (fs::path(TDCG_CONFIG_DIR) / (name + ".toml")).string();
    Config cfg = load_config(local);
    const std::uint64_t seed = apply_seed(cfg, g);
    const fs::path out = fs::path(g.out) / name;
    std::vector<CriterionResult> results;
    if (name == "bench-tau05" || name == "bench-tau01")
        results = reproduce_bench(cfg, out);
    else if (name == "fluid-pipeline")
        results = reproduce_fluid(cfg, out);
    else
        throw ArgumentError("unknown reproduction " + name);
    write_manifest(out, cfg, seed, g.threads, g.command_line);

    bool ok = true;
    for (const auto& r : results) {
        const char* status = !r.evaluable ? "NOT-EVALUABLE" : (r.pass ? "PASS" : "FAIL");
        std::cout << status << ' ' << r.id << ": " << r.description << " | " << r.detail << '\n';
        if (r.evaluable && !r.pass)
            ok = false;
    }
    return ok ? 0 : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Transient coarse-grained dynamics: simulation, force matching, friction and observables"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    for (int i = 0; i < argc; ++i)
        g.command_line += (i ? " " : "") + std::string(argv[i]);
    app.add_option("--config", g.config, "TOML experiment config");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--seed", g.seed, "Override the master seed");
    app.add_option("--threads", g.threads, "Worker threads (0 = auto)")->check(CLI::NonNegativeNumber);

    std::string data, mode, which, field, name;
    double t_instant = -1.0;

    auto* sim = app.add_subcommand("simulate", "Generate a GLE, fine-reference or CG-MD ensemble");
    auto* fit = app.add_subcommand("fit", "Path-space force matching on an ensemble");
    fit->add_option("--data", data, "Ensemble directory")->required();
    fit->add_option("--mode", mode, "equilibrium | instant | time-dependent | separable")
        ->required()
        ->check(CLI::IsMember({"equilibrium", "instant", "time-dependent", "separable"}));
    fit->add_option("--time", t_instant, "Instant for mode=instant");
    auto* fr = app.add_subcommand("friction", "Friction and noise estimates");
    fr->add_option("--data", data, "Ensemble directory")->required();
    fr->add_option("--mode", mode, "equilibrium | transient | qv")
        ->required()
        ->check(CLI::IsMember({"equilibrium", "transient", "qv"}));
    fr->add_option("--field", field, "Coefficient CSV of the fitted force field");
    auto* obs = app.add_subcommand("obs", "Structural and kinetic observables");
    obs->add_option("--data", data, "Ensemble directory")->required();
    obs->add_option("--which", which, "rdf | vacf | dc | moments")
        ->required()
        ->check(CLI::IsMember({"rdf", "vacf", "dc", "moments"}));
    auto* rep = app.add_subcommand("reproduce", "End-to-end reproduction with a pass/fail summary");
    rep->add_option("name", name, "bench-tau05 | bench-tau01 | fluid-pipeline")
        ->required()
        ->check(CLI::IsMember({"bench-tau05", "bench-tau01", "fluid-pipeline"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitValidation;
    }
    set_num_threads(g.threads);

    try {
        if (sim->parsed())
            return cmd_simulate(g);
        if (fit->parsed())
            return cmd_fit(g, data, mode, t_instant);
        if (fr->parsed())
            return cmd_friction(g, data, mode, field);
        if (obs->parsed())
            return cmd_obs(g, data, which);
        if (rep->parsed())
            return cmd_reproduce(g, name);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what();
        for (const auto& k : e.keys())
            std::cerr << "\n  " << k;
        std::cerr << '\n';
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return 0;
}
