#include "tdcg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "tdcg/errors.hpp"
#include "tdcg/pair_forces.hpp"
#include "tdcg/rng.hpp"

#ifndef TDCG_VERSION
#define TDCG_VERSION "0.1.0"
#endif

namespace tdcg {

namespace fs = std::filesystem;

const ConfigSchema& config_schema()
{
    static const ConfigSchema schema = {
        {"gle", {"alpha", "eta", "tau", "beta", "q0", "p0", "mass", "initial"}},
        {"langevin", {"dt", "t_final", "record_stride", "n_paths", "seed", "scheme"}},
        {"basis_r", {"n_basis", "degree", "lo", "hi", "pad"}},
        {"basis_t", {"n_basis", "degree"}},
        {"fit", {"data_stride", "als_iters", "tol", "ridge", "ridge_scale", "eq_window_start", "instant_t"}},
        {"friction",
         {"qv_t_final", "qv_fine_steps", "qv_stride", "gk_paths", "gk_dt", "gk_t_final", "gk_record_stride",
          "gk_max_lag", "gk_t_upper", "origin", "t_upper", "max_lag", "alpha"}},
        {"reference",
         {"fcc_cell", "n_cells", "epsilon", "sigma", "r_lo", "r_cut", "knots", "zeta", "beta", "mass", "dt",
          "n_steps", "record_stride", "n_paths", "skin", "seed", "record", "keep_every"}},
        {"equilibrium", {"n_paths", "equilibration_steps", "n_steps"}},
        {"md",
         {"scheme", "n_paths", "field", "zeta", "beta", "mass", "dt", "n_steps", "record_stride", "seed", "fcc_cell",
          "n_cells", "skin", "record_forces"}},
        {"observables",
         {"rdf_bins", "rdf_r_max", "rdf_instants", "potential_instants", "potential_r_min",
          "potential_points", "vacf_max_lag"}},
        {"acceptance", {"qv_target", "qv_tol", "mean_rel_tol", "gk_rel_tol", "instant_rel_tol"}},
        {"io", {"write_ensemble"}},
    };
    return schema;
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& tag)
{
    return splitmix64_step(master ^ fnv1a64(tag));
}

std::string version_string() { return TDCG_VERSION; }

void write_manifest(const fs::path& dir, const Config& cfg, std::uint64_t seed, int threads,
                    const std::string& command)
{
    fs::create_directories(dir);
    const std::string canon = cfg.canonical();
    std::ofstream out(dir / "manifest.txt");
    if (!out)
        throw IoError("cannot write manifest in " + dir.string());
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canon);
    out << "version " << version_string() << '\n'
        << "command " << command << '\n'
        << "seed " << seed << '\n'
        << "threads " << threads << '\n'
        << "config_fnv1a64 " << hash.str() << '\n';
    std::ofstream src_out(dir / "config.source.toml");
    src_out << cfg.source();
    std::ofstream cfg_out(dir / "config.toml");
    cfg_out << cfg.to_toml();
    std::ofstream canon_out(dir / "config.canonical");
    canon_out << canon;
}

bool write_summary(const fs::path& dir, const std::vector<CriterionResult>& results)
{
    fs::create_directories(dir);
    std::ofstream txt(dir / "summary.txt"), csv(dir / "summary.csv");
    csv << "id,status,value,detail\n" << std::setprecision(10);
    bool all = true;
    for (const auto& r : results) {
        const std::string status = !r.evaluable ? "NOT-EVALUABLE" : (r.pass ? "PASS" : "FAIL");
        if (r.evaluable && !r.pass)
            all = false;
        txt << status << ' ' << r.id << ": " << r.description << " | " << r.detail << '\n';
        csv << r.id << ',' << status << ',' << r.value << ",\"" << r.detail << "\"\n";
    }
    return all;
}

namespace {

Scheme parse_scheme(const std::string& s)
{
    if (s == "em" || s == "euler-maruyama")
        return Scheme::EulerMaruyama;
    if (s == "baoab")
        return Scheme::BAOAB;
    throw ConfigError("unknown integrator scheme", {s});
}

std::size_t steps_for(double t_final, double dt)
{
    const double n = t_final / dt;
    const double nr = std::round(n);
    if (nr < 1.0 || std::abs(n - nr) > 1e-6 * std::max(1.0, n))
        throw ArgumentError("t_final is not a multiple of dt");
    return static_cast<std::size_t>(nr);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int prec = 6)
{
    std::ostringstream s;
    s << std::setprecision(prec) << x;
    return s.str();
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& ref)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        num += (a[i] - ref[i]) * (a[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

// ---------------------------------------------------------------- benchmark

BenchSetup BenchSetup::from_config(const Config& cfg)
{
    cfg.reject_unknown(config_schema());
    cfg.require({"gle.alpha", "gle.eta", "gle.tau", "gle.beta", "gle.q0", "gle.p0", "langevin.dt",
                 "langevin.t_final", "langevin.record_stride", "langevin.n_paths", "langevin.seed",
                 "basis_t.n_basis", "basis_t.degree", "basis_r.n_basis", "basis_r.degree"});
    BenchSetup s;
    s.gle.alpha = cfg.number("gle", "alpha");
    s.gle.eta = cfg.number("gle", "eta");
    s.gle.tau = cfg.number("gle", "tau");
    s.gle.beta = cfg.number("gle", "beta");
    s.gle.q0 = cfg.number("gle", "q0");
    s.gle.p0 = cfg.number("gle", "p0");
    s.gle.mass = cfg.number_or("gle", "mass", 1.0);
    const auto init = cfg.string_or("gle", "initial", "fixed");
    if (init == "fixed")
        s.gle.initial = InitialLaw::Fixed;
    else if (init == "equilibrium")
        s.gle.initial = InitialLaw::Equilibrium;
    else
        throw ConfigError("unknown initial law", {"gle.initial"});
    s.gle.validate();

    s.dt = cfg.number("langevin", "dt");
    s.t_final = cfg.number("langevin", "t_final");
    s.record_stride = static_cast<std::size_t>(cfg.integer("langevin", "record_stride"));
    s.n_paths = static_cast<std::size_t>(cfg.integer("langevin", "n_paths"));
    s.seed = static_cast<std::uint64_t>(cfg.integer("langevin", "seed"));
    s.model_scheme = parse_scheme(cfg.string_or("langevin", "scheme", "em"));

    s.d_grid = {0.0, s.t_final, static_cast<int>(cfg.integer("basis_t", "n_basis")),
                static_cast<int>(cfg.integer("basis_t", "degree"))};
    s.d_grid.validate();
    s.b_n_basis = static_cast<int>(cfg.integer("basis_r", "n_basis"));
    s.b_degree = static_cast<int>(cfg.integer("basis_r", "degree"));
    s.b_pad = cfg.number_or("basis_r", "pad", s.b_pad);
    s.fit_stride = static_cast<std::size_t>(cfg.integer_or("fit", "data_stride", 10));
    s.als_iters = static_cast<int>(cfg.integer_or("fit", "als_iters", s.als_iters));
    s.als_tol = cfg.number_or("fit", "tol", s.als_tol);
    s.ridge = cfg.number_or("fit", "ridge", s.ridge);

    s.qv_t_final = cfg.number_or("friction", "qv_t_final", s.qv_t_final);
    s.qv_fine_steps = static_cast<std::size_t>(cfg.integer_or("friction", "qv_fine_steps", 36000));
    s.qv_stride = static_cast<std::size_t>(cfg.integer_or("friction", "qv_stride", 200));
    s.gk_paths = static_cast<std::size_t>(cfg.integer_or("friction", "gk_paths", 400));
    s.gk_dt = cfg.number_or("friction", "gk_dt", s.gk_dt);
    s.gk_t_final = cfg.number_or("friction", "gk_t_final", s.gk_t_final);
    s.gk_record_stride = static_cast<std::size_t>(cfg.integer_or("friction", "gk_record_stride", 10));
    s.gk_max_lag = static_cast<std::size_t>(cfg.integer_or("friction", "gk_max_lag", 1000));
    s.gk_t_upper = cfg.number_or("friction", "gk_t_upper", 0.0);

    s.qv_target = cfg.number_or("acceptance", "qv_target", s.qv_target);
    s.qv_tol = cfg.number_or("acceptance", "qv_tol", s.qv_tol);
    s.mean_rel_tol = cfg.number_or("acceptance", "mean_rel_tol", s.mean_rel_tol);
    s.gk_rel_tol = cfg.number_or("acceptance", "gk_rel_tol", s.gk_rel_tol);
    s.n_steps();
    return s;
}

std::size_t BenchSetup::n_steps() const { return steps_for(t_final, dt); }

Ensemble simulate_bench_ensemble(const BenchSetup& s)
{
    IntegratorSpec spec{Scheme::EulerMaruyama, s.dt, s.n_steps(), s.record_stride, 0, true};
    const GLEParams gle = s.gle;
    return generate_ensemble(
        [&](std::uint64_t seed) {
            IntegratorSpec sp = spec;
            sp.seed = seed;
            return simulate_gle(gle, sp);
        },
        s.n_paths, derive_seed(s.seed, "gle"), s.gle.beta);
}

QvResult bench_quadratic_variation(const BenchSetup& s)
{
    IntegratorSpec spec{Scheme::EulerMaruyama, s.qv_t_final / static_cast<double>(s.qv_fine_steps), s.qv_fine_steps,
                        1, derive_seed(s.seed, "qv"), false};
    const Trajectory path = subsample(simulate_gle(s.gle, spec), s.qv_stride);
    QvResult r;
    r.sigma0 = sigma0_quadratic_variation(path);
    r.zeta0 = zeta_from_sigma(r.sigma0, s.gle.beta);
    r.n_increments = path.size() - 1;
    r.spacing = path.dt_nominal();
    return r;
}

MeanPathResult bench_mean_paths(const BenchSetup& s, const Ensemble& gle, const QvResult& qv)
{
    MeanPathResult r;
    double qmin = std::numeric_limits<double>::infinity(), qmax = -qmin;
    for (const auto& tr : gle.paths)
        for (std::size_t i = 0; i < tr.size(); ++i) {
            qmin = std::min(qmin, tr.positions(i)[0]);
            qmax = std::max(qmax, tr.positions(i)[0]);
        }
    const double pad = s.b_pad * (qmax - qmin);
    r.b_grid = {qmin - pad, qmax + pad, s.b_n_basis, s.b_degree};
    r.b_grid.validate();
    const SplineBasis1D d_basis(s.d_grid), b_basis(r.b_grid);
    r.fit = fit_separable(subsample(gle, s.fit_stride), d_basis, b_basis, s.als_iters, s.als_tol, s.ridge);

    LangevinTDParams model;
    model.force = std::make_shared<SeparableForce>(r.fit.force(d_basis, b_basis));
    model.zeta0 = qv.zeta0;
    model.sigma0 = qv.sigma0;
    model.beta = s.gle.beta;
    model.dim = 1;
    model.mass = {s.gle.mass};
    model.q0 = {s.gle.q0};
    model.p0 = {s.gle.p0};
    model.fdt = true;
    IntegratorSpec spec{s.model_scheme, s.dt, s.n_steps(), s.record_stride, 0, false};
    const Ensemble sim = generate_ensemble(
        [&](std::uint64_t seed) {
            IntegratorSpec sp = spec;
            sp.seed = seed;
            return simulate_langevin_td(model, sp);
        },
        s.n_paths, derive_seed(s.seed, "model"), s.gle.beta);

    r.reference = ensemble_moments(gle);
    r.model = ensemble_moments(sim);
    r.rel_l2_q = rel_l2(r.model.mean_q, r.reference.mean_q);
    r.rel_l2_p = rel_l2(r.model.mean_p, r.reference.mean_p);
    return r;
}

GreenKuboResult bench_green_kubo(const BenchSetup& s)
{
    GLEParams gle = s.gle;
    gle.initial = InitialLaw::Equilibrium;
    IntegratorSpec spec{Scheme::EulerMaruyama, s.gk_dt, steps_for(s.gk_t_final, s.gk_dt), s.gk_record_stride, 0, true};
    const Ensemble ens = generate_ensemble(
        [&](std::uint64_t seed) {
            IntegratorSpec sp = spec;
            sp.seed = seed;
            return simulate_gle(gle, sp);
        },
        s.gk_paths, derive_seed(s.seed, "gk"), gle.beta);

    const auto mapping = CGMapping::identity({gle.mass});
    const double alpha = gle.alpha;
    const ScalarForce model([alpha](double q, double) { return -alpha * q; });
    GreenKuboResult r;
    r.cvv = vacf(ens, mapping, Origin::Sliding, s.gk_max_lag);
    r.cfv = force_velocity_corr(ens, mapping, model, Origin::Sliding, s.gk_max_lag);
    r.t_upper = s.gk_t_upper > 0.0 ? s.gk_t_upper : first_zero_crossing(r.cvv);
    r.zeta0 = zeta0_from_green_kubo(r.cfv, r.cvv, r.t_upper);
    r.target = gle.eta * gle.eta * gle.tau;
    return r;
}

std::vector<CriterionResult> reproduce_bench(const Config& cfg, const fs::path& out)
{
    const BenchSetup s = BenchSetup::from_config(cfg);
    fs::create_directories(out);
    std::vector<CriterionResult> results;

    auto t0 = std::chrono::steady_clock::now();
    const QvResult qv = bench_quadratic_variation(s);
    const double t_qv = seconds_since(t0);
    {
        CriterionResult c{"A1", "quadratic-variation sigma0 on a subsampled GLE path", true, false, 0.0, {}};
        c.value = qv.sigma0;
        c.pass = std::abs(qv.sigma0 - s.qv_target) <= s.qv_tol && t_qv <= 60.0;
        c.detail = "sigma0=" + fmt(qv.sigma0) + " target=" + fmt(s.qv_target) + "+-" + fmt(s.qv_tol) +
                   " increments=" + std::to_string(qv.n_increments) + " spacing=" + fmt(qv.spacing) +
                   " runtime_s=" + fmt(t_qv, 3);
        results.push_back(c);
    }

    t0 = std::chrono::steady_clock::now();
    const Ensemble gle = simulate_bench_ensemble(s);
    const MeanPathResult mp = bench_mean_paths(s, gle, qv);
    const double t_mp = seconds_since(t0);
    {
        CriterionResult c{"A2", "mean paths of the fitted separable model vs the GLE", true, false, 0.0, {}};
        c.value = std::max(mp.rel_l2_q, mp.rel_l2_p);
        c.pass = c.value <= s.mean_rel_tol && t_mp <= 600.0;
        c.detail = "relL2(Q)=" + fmt(mp.rel_l2_q) + " relL2(P)=" + fmt(mp.rel_l2_p) + " tol=" + fmt(s.mean_rel_tol) +
                   " als_sweeps=" + std::to_string(mp.fit.sweeps) + " runtime_s=" + fmt(t_mp, 3);
        results.push_back(c);
    }
    export_moments_csv(mp.reference, out / "moments_gle.csv");
    export_moments_csv(mp.model, out / "moments_model.csv");
    {
        std::ofstream f(out / "separable_coefficients.csv");
        f << "# d_basis lo=" << s.d_grid.lo << " hi=" << s.d_grid.hi << " n=" << s.d_grid.n_basis
          << " degree=" << s.d_grid.degree << "\n# b_basis lo=" << mp.b_grid.lo << " hi=" << mp.b_grid.hi
          << " n=" << mp.b_grid.n_basis << " degree=" << mp.b_grid.degree << "\nfactor,index,coeff\n"
          << std::setprecision(17);
        for (std::size_t i = 0; i < mp.fit.theta1.size(); ++i)
            f << "D," << i << ',' << mp.fit.theta1[i] << '\n';
        for (std::size_t i = 0; i < mp.fit.theta2.size(); ++i)
            f << "B," << i << ',' << mp.fit.theta2[i] << '\n';
        std::ofstream tr(out / "als_residual_trace.csv");
        tr << "sweep,rms_residual\n" << std::setprecision(17);
        for (std::size_t i = 0; i < mp.fit.residual_trace.size(); ++i)
            tr << i << ',' << mp.fit.residual_trace[i] << '\n';
    }

    t0 = std::chrono::steady_clock::now();
    const GreenKuboResult gk = bench_green_kubo(s);
    const double t_gk = seconds_since(t0);
    {
        CriterionResult c{"A3", "Green-Kubo kernel integral on stationary GLE data", true, false, 0.0, {}};
        c.value = gk.zeta0;
        const double rel = std::abs(gk.zeta0 - gk.target) / gk.target;
        c.pass = rel <= s.gk_rel_tol && t_gk <= 120.0;
        c.detail = "zeta0=" + fmt(gk.zeta0) + " target=" + fmt(gk.target) + " rel_err=" + fmt(rel, 4) +
                   " t_upper=" + fmt(gk.t_upper) + " runtime_s=" + fmt(t_gk, 3);
        results.push_back(c);
    }
    export_series_csv(gk.cvv, out / "vacf.csv");
    export_series_csv(gk.cfv, out / "force_velocity_corr.csv");
    {
        std::ofstream f(out / "friction.txt");
        f << std::setprecision(10) << "sigma0_qv " << qv.sigma0 << "\nzeta0_fdt " << qv.zeta0 << "\nzeta0_green_kubo "
          << gk.zeta0 << "\nt_upper " << gk.t_upper << "\nkernel_integral " << gk.target << '\n';
    }
    write_summary(out, results);
    return results;
}

// ------------------------------------------------------------ synthetic fluid

FluidSetup FluidSetup::from_config(const Config& cfg)
{
    cfg.reject_unknown(config_schema());
    cfg.require({"reference.fcc_cell", "reference.n_cells", "reference.zeta", "reference.beta", "reference.dt",
                 "reference.n_steps", "reference.record_stride", "reference.n_paths", "reference.seed",
                 "basis_r.n_basis", "basis_r.degree", "basis_r.lo", "basis_r.hi", "basis_t.n_basis",
                 "basis_t.degree"});
    FluidSetup s;
    s.fcc_cell = cfg.number("reference", "fcc_cell");
    s.n_cells = static_cast<int>(cfg.integer("reference", "n_cells"));
    s.epsilon = cfg.number_or("reference", "epsilon", s.epsilon);
    s.sigma = cfg.number_or("reference", "sigma", s.sigma);
    s.fine_r_lo = cfg.number_or("reference", "r_lo", s.fine_r_lo);
    s.fine_r_cut = cfg.number_or("reference", "r_cut", s.fine_r_cut);
    s.fine_knots = static_cast<int>(cfg.integer_or("reference", "knots", s.fine_knots));
    s.zeta = cfg.number("reference", "zeta");
    s.beta = cfg.number("reference", "beta");
    s.mass = cfg.number_or("reference", "mass", s.mass);
    s.dt = cfg.number("reference", "dt");
    s.n_steps = static_cast<std::size_t>(cfg.integer("reference", "n_steps"));
    s.record_stride = static_cast<std::size_t>(cfg.integer("reference", "record_stride"));
    s.n_paths = static_cast<std::size_t>(cfg.integer("reference", "n_paths"));
    s.skin = cfg.number_or("reference", "skin", s.skin);
    s.seed = static_cast<std::uint64_t>(cfg.integer("reference", "seed"));
    const auto rec = cfg.string_or("reference", "record", "conservative");
    if (rec == "conservative")
        s.record = ForceRecord::Conservative;
    else if (rec == "total")
        s.record = ForceRecord::Total;
    else
        throw ConfigError("unknown force record", {"reference.record"});
    const auto keep = cfg.integer_or("reference", "keep_every", 1);
    if (keep < 1)
        throw ConfigError("keep_every must be >= 1", {"reference.keep_every"});
    s.keep_every = static_cast<std::size_t>(keep);

    s.r_grid = {cfg.number("basis_r", "lo"), cfg.number("basis_r", "hi"),
                static_cast<int>(cfg.integer("basis_r", "n_basis")), static_cast<int>(cfg.integer("basis_r", "degree"))};
    s.r_grid.validate();
    s.t_n_basis = static_cast<int>(cfg.integer("basis_t", "n_basis"));
    s.t_degree = static_cast<int>(cfg.integer("basis_t", "degree"));
    s.ridge_scale = cfg.number_or("fit", "ridge_scale", s.ridge_scale);
    s.eq_window_start = cfg.number_or("fit", "eq_window_start", s.eq_window_start);
    s.eq_paths = static_cast<std::size_t>(cfg.integer_or("equilibrium", "n_paths", 0));
    s.eq_equilibration_steps = static_cast<std::size_t>(
        cfg.integer_or("equilibrium", "equilibration_steps", static_cast<std::int64_t>(s.eq_equilibration_steps)));
    s.eq_n_steps =
        static_cast<std::size_t>(cfg.integer_or("equilibrium", "n_steps", static_cast<std::int64_t>(s.n_steps)));

    s.cg_scheme = parse_scheme(cfg.string_or("md", "scheme", "baoab"));
    s.cg_paths = static_cast<std::size_t>(cfg.integer_or("md", "n_paths", static_cast<std::int64_t>(s.n_paths)));

    s.rdf_bins = static_cast<std::size_t>(cfg.integer_or("observables", "rdf_bins", 60));
    s.rdf_r_max = cfg.number_or("observables", "rdf_r_max", s.rdf_r_max);
    if (cfg.has("observables", "rdf_instants"))
        s.rdf_instants = cfg.numbers("observables", "rdf_instants");
    if (cfg.has("observables", "potential_instants"))
        s.potential_instants = cfg.numbers("observables", "potential_instants");
    s.potential_r_min = cfg.number_or("observables", "potential_r_min", s.potential_r_min);
    s.potential_points = static_cast<std::size_t>(cfg.integer_or("observables", "potential_points", 200));
    s.vacf_max_lag = static_cast<std::size_t>(cfg.integer_or("observables", "vacf_max_lag", 50));
    s.instant_rel_tol = cfg.number_or("acceptance", "instant_rel_tol", s.instant_rel_tol);
    if (s.r_grid.hi > 0.5 * s.fcc_cell * s.n_cells)
        throw ArgumentError("basis_r.hi exceeds half the box length");
    return s;
}

PairForceField FluidSetup::fine_field() const
{
    const KnotGrid grid{fine_r_lo, fine_r_cut, fine_knots, 1};
    auto lj = [&](double r) {
        const double sr6 = std::pow(sigma / r, 6);
        return 24.0 * epsilon * (2.0 * sr6 * sr6 - sr6) / r;
    };
    const double shift = lj(fine_r_cut);
    std::vector<double> coeffs(static_cast<std::size_t>(fine_knots));
    for (int i = 0; i < fine_knots; ++i)
        coeffs[static_cast<std::size_t>(i)] = lj(grid.knot(i)) - shift;
    return PairForceField(SplineBasis1D(grid), std::move(coeffs), fine_r_cut);
}

CGMapping FluidSetup::cg_mapping(std::size_t fine_particles) const
{
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < fine_particles; i += keep_every)
        groups.push_back({i});
    return CGMapping(std::move(groups), std::vector<double>(fine_particles, mass));
}

double rdf_l2(const RdfResult& a, const RdfResult& b)
{
    if (a.g.size() != b.g.size())
        throw ArgumentError("RDFs have different binning");
    double s = 0.0;
    for (std::size_t k = 0; k < a.g.size(); ++k)
        s += (a.g[k] - b.g[k]) * (a.g[k] - b.g[k]);
    return std::sqrt(s / static_cast<double>(a.g.size()));
}

namespace {

std::vector<FrameRef> all_frames(const Ensemble& ens)
{
    std::vector<FrameRef> out;
    for (std::size_t p = 0; p < ens.n_paths(); ++p)
        for (std::size_t f = 0; f < ens.paths[p].size(); ++f)
            out.push_back({p, f});
    return out;
}

FitResult solve_scaled(const DesignAccumulator& acc, double ridge_scale)
{
    return solve(acc, ridge_scale > 0.0 ? ridge_scale * recommended_ridge(acc) : 0.0);
}

std::vector<RdfResult> rdf_at_instants(const Ensemble& ens, const CGMapping& mapping, const FluidSetup& s,
                                       double t_f)
{
    RdfSpec spec;
    spec.r_max = s.rdf_r_max;
    spec.n_bins = s.rdf_bins;
    spec.dim = 3;
    spec.box = s.box();
    std::vector<RdfResult> out;
    for (double frac : s.rdf_instants) {
        std::vector<std::vector<double>> frames;
        for (const auto& tr : ens.paths) {
            frames.push_back(map_positions(tr.frame(nearest_frame(tr, frac * t_f)), 3, mapping));
        }
        out.push_back(rdf(frames, spec));
    }
    return out;
}

double diffusion_of(const Ensemble& ens, const CGMapping& mapping, const FluidSetup& s)
{
    const auto c = vacf(ens, mapping, Origin::Sliding, s.vacf_max_lag);
    return diffusion_coefficient(c, first_zero_crossing(c));
}

std::string eq_window_label(const FluidSetup& s)
{
    if (s.eq_paths == 0)
        return fmt(s.eq_window_start * s.t_final(), 6) + ' ' + fmt(s.t_final(), 6);
    const double t0 = s.dt * static_cast<double>(s.eq_equilibration_steps);
    return fmt(t0, 6) + ' ' + fmt(t0 + s.dt * static_cast<double>(s.eq_n_steps), 6) + " (" +
           std::to_string(s.eq_paths) + " separate paths)";
}

}  // namespace

FluidResult run_fluid_pipeline(const FluidSetup& s, bool run_models)
{
    FluidResult res;
    const SimBox box = s.box();
    const double t_f = s.t_final();

    FineReferenceSpec fine;
    fine.box = box;
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
    res.reference = run_fine_reference(fine);
    if (s.eq_paths > 0) {
        FineReferenceSpec eq = fine;
        eq.integrator.n_steps = s.eq_n_steps;
        eq.equilibration_steps = s.eq_equilibration_steps;
        eq.n_paths = s.eq_paths;
        eq.master_seed = derive_seed(s.seed, "fine-eq");
        res.equilibrium = run_fine_reference(eq);
    } else {
        res.equilibrium = slice_time(res.reference, s.eq_window_start * t_f, t_f);
    }

    res.mapping = s.cg_mapping(res.reference.paths.front().particles());
    PairFitSetup setup{res.mapping, box, 0.0};
    const SplineBasis1D r_basis(s.r_grid);
    const SplineBasis1D t_basis(KnotGrid{0.0, t_f, s.t_n_basis, s.t_degree});
    const TensorBasis2D tensor(r_basis, t_basis);

    const auto td_fit = solve_scaled(accumulate_frames(res.reference, all_frames(res.reference), setup, r_basis, &t_basis), s.ridge_scale);
    res.td_field = TimeDependentPairForceField(tensor, td_fit.coeff_vector(), s.r_grid.hi, t_f);
    const auto eq_fit = solve_scaled(
        accumulate_frames(res.equilibrium, all_frames(res.equilibrium), setup, r_basis),
        s.ridge_scale);
    res.eq_field = PairForceField(r_basis, eq_fit.coeff_vector(), s.r_grid.hi);

    res.potential_grid = linspace(s.potential_r_min, s.r_grid.hi, s.potential_points);
    const auto& grid = res.potential_grid;

    // instantaneous fits against the time-dependent fit
    for (double frac : s.rdf_instants) {
        const double t = frac * t_f;
        std::vector<FrameRef> refs;
        for (std::size_t p = 0; p < res.reference.n_paths(); ++p)
            refs.push_back({p, nearest_frame(res.reference.paths[p], t)});
        const auto inst = solve_scaled(accumulate_frames(res.reference, refs, setup, r_basis), s.ridge_scale);
        const auto u_inst = potential_from_force(PairForceField(r_basis, inst.coeff_vector(), s.r_grid.hi), grid);
        const auto u_td = potential_from_force(res.td_field.at_time(t), grid);
        double depth = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            depth = std::max(depth, -u_td[i]);
            ss += (u_inst[i] - u_td[i]) * (u_inst[i] - u_td[i]);
        }
        res.instant_well_depth.push_back(depth);
        res.instant_rms.push_back(std::sqrt(ss / static_cast<double>(grid.size())) / depth);
    }

    // distance-weighted deviation of the time-dependent potential from the equilibrium fit
    const auto u_eq = potential_from_force(res.eq_field, grid);
    for (double frac : s.potential_instants) {
        const auto u_td = potential_from_force(res.td_field.at_time(frac * t_f), grid);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double w = grid[i] * grid[i];
            num += w * (u_td[i] - u_eq[i]) * (u_td[i] - u_eq[i]);
            den += w;
        }
        res.eq_deviation.push_back(std::sqrt(num / den));
    }

    // friction: equilibrium window with sliding origins, transient with fixed origins
    {
        const Ensemble& eq = res.equilibrium;
        const PairFieldForce model(res.eq_field, box);
        const auto cvv = vacf(eq, setup.mapping, Origin::Sliding, s.vacf_max_lag);
        const auto cfv = force_velocity_corr(eq, setup.mapping, model, Origin::Sliding, s.vacf_max_lag);
        res.zeta_eq = zeta0_from_green_kubo(cfv, cvv, first_zero_crossing(cvv));
    }
    {
        const TDPairFieldForce model(res.td_field, box);
        const auto cvv = vacf(res.reference, setup.mapping, Origin::FixedZero, s.vacf_max_lag);
        const auto cfv = force_velocity_corr(res.reference, setup.mapping, model, Origin::FixedZero, s.vacf_max_lag);
        res.zeta_transient = zeta0_from_green_kubo(cfv, cvv, first_zero_crossing(cvv));
    }

    res.reference_rdf = rdf_at_instants(res.reference, res.mapping, s, t_f);
    res.reference_diffusion = diffusion_of(res.reference, res.mapping, s);

    if (!run_models)
        return res;

    const std::vector<double> fcc =
        map_positions(res.reference.paths.front().frame(0), 3, res.mapping);
    struct Variant
    {
        std::string name;
        bool td;
        double zeta;
    };
    const std::vector<Variant> variants = {
        {"TD-fe", true, res.zeta_eq},   {"TD-ft", true, res.zeta_transient},   {"TD-0", true, 0.0},
        {"PMF-fe", false, res.zeta_eq}, {"PMF-ft", false, res.zeta_transient}, {"PMF-0", false, 0.0},
    };
    for (const auto& v : variants) {
        MDSystem sys;
        sys.box = box;
        sys.positions = fcc;
        sys.masses.assign(fcc.size() / 3, s.mass);
        if (v.td)
            sys.field = res.td_field;
        else
            sys.field = res.eq_field;
        sys.zeta0 = std::max(0.0, v.zeta);
        sys.beta = s.beta;
        sys.skin = s.skin;
        const IntegratorSpec spec{s.cg_scheme, s.dt, s.n_steps, s.record_stride, 0, false};
        FluidModel m;
        m.name = v.name;
        m.zeta = sys.zeta0;
        m.data = generate_ensemble(
            [&](std::uint64_t seed) {
                IntegratorSpec sp = spec;
                sp.seed = seed;
                return run_md(sys, sp);
            },
            s.cg_paths, derive_seed(s.seed, "cg-" + v.name), s.beta);
        const auto identity = CGMapping::identity(sys.masses);
        m.rdf = rdf_at_instants(m.data, identity, s, t_f);
        m.diffusion = diffusion_of(m.data, identity, s);
        res.models.push_back(std::move(m));
    }
    return res;
}

std::vector<CriterionResult> reproduce_fluid(const Config& cfg, const fs::path& out)
{
    const FluidSetup s = FluidSetup::from_config(cfg);
    fs::create_directories(out);
    const FluidResult r = run_fluid_pipeline(s, true);
    const double t_f = s.t_final();
    std::vector<CriterionResult> results;

    {
        CriterionResult c{"A5", "instantaneous fit vs time-dependent fit potentials", true, false, 0.0, {}};
        double worst = 0.0;
        std::string detail;
        for (std::size_t i = 0; i < r.instant_rms.size(); ++i) {
            worst = std::max(worst, r.instant_rms[i]);
            detail += "t=" + fmt(s.rdf_instants[i] * t_f, 4) + ":" + fmt(100.0 * r.instant_rms[i], 3) + "% ";
        }
        c.value = worst;
        c.pass = worst <= s.instant_rel_tol;
        c.detail = detail + "tol=" + fmt(100.0 * s.instant_rel_tol, 3) + "% of well depth";
        results.push_back(c);
    }
    {
        CriterionResult c{"A6", "time-dependent potential approaches the equilibrium fit", true, false, 0.0, {}};
        bool mono = true;
        std::string detail;
        for (std::size_t i = 0; i < r.eq_deviation.size(); ++i) {
            if (i > 0 && r.eq_deviation[i] > r.eq_deviation[i - 1])
                mono = false;
            detail += "t=" + fmt(s.potential_instants[i] * t_f, 4) + ":" + fmt(r.eq_deviation[i], 4) + " ";
        }
        c.pass = mono;
        c.value = r.eq_deviation.empty() ? 0.0 : r.eq_deviation.back();
        c.detail = detail;
        results.push_back(c);
    }
    const FluidModel* td_ft = nullptr;
    const FluidModel* pmf_fe = nullptr;
    for (const auto& m : r.models) {
        if (m.name == "TD-ft")
            td_ft = &m;
        if (m.name == "PMF-fe")
            pmf_fe = &m;
    }
    {
        CriterionResult c{"A8", "TD-ft RDF at least as close to the reference as PMF-fe (t >= t_f/2)", true, false, 0.0, {}};
        bool ok = true;
        std::string detail;
        for (std::size_t i = 0; i < s.rdf_instants.size(); ++i) {
            const double a = rdf_l2(td_ft->rdf[i], r.reference_rdf[i]);
            const double b = rdf_l2(pmf_fe->rdf[i], r.reference_rdf[i]);
            detail += "t=" + fmt(s.rdf_instants[i] * t_f, 4) + ": TD-ft " + fmt(a, 4) + " PMF-fe " + fmt(b, 4) + "; ";
            if (s.rdf_instants[i] >= 0.5 && a > b)
                ok = false;
        }
        c.pass = ok;
        c.detail = detail;
        results.push_back(c);
    }

    // artifacts
    export_field_csv(r.td_field, linspace(0.0, t_f, 11), r.potential_grid, out / "potential_td.csv");
    export_field_csv(r.eq_field, r.potential_grid, out / "potential_eq.csv");
    export_coefficients_csv(r.td_field.coeffs(), s.r_grid, &r.td_field.basis().t_basis().grid(), s.r_grid.hi,
                            out / "coefficients_td.csv");
    export_coefficients_csv(r.eq_field.coeffs(), s.r_grid, nullptr, s.r_grid.hi, out / "coefficients_eq.csv");
    for (std::size_t i = 0; i < s.rdf_instants.size(); ++i) {
        const std::string tag = "_t" + fmt(s.rdf_instants[i] * t_f, 4) + ".csv";
        export_rdf_csv(r.reference_rdf[i], out / ("rdf_reference" + tag));
        for (const auto& m : r.models)
            export_rdf_csv(m.rdf[i], out / ("rdf_" + m.name + tag));
    }
    {
        std::ofstream f(out / "rdf_comparison.csv");
        f << "model,t,l2_vs_reference\n" << std::setprecision(10);
        for (const auto& m : r.models)
            for (std::size_t i = 0; i < s.rdf_instants.size(); ++i)
                f << m.name << ',' << s.rdf_instants[i] * t_f << ',' << rdf_l2(m.rdf[i], r.reference_rdf[i]) << '\n';
        std::ofstream d(out / "diffusion.csv");
        d << "model,zeta,D\n" << std::setprecision(10) << "reference," << s.zeta << ',' << r.reference_diffusion << '\n';
        for (const auto& m : r.models)
            d << m.name << ',' << m.zeta << ',' << m.diffusion << '\n';
        std::ofstream z(out / "friction.txt");
        z << std::setprecision(10) << "zeta_eq " << r.zeta_eq << "\nzeta_transient " << r.zeta_transient
          << "\nwindow_eq " << eq_window_label(s) << "\nwindow_transient 0 " << t_f << '\n';
    }
    write_summary(out, results);
    return results;
}

}  // namespace tdcg
