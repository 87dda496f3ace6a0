#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tdcg/basis.hpp"
#include "tdcg/config.hpp"
#include "tdcg/friction.hpp"
#include "tdcg/md.hpp"
#include "tdcg/observables.hpp"
#include "tdcg/psfm.hpp"
#include "tdcg/stochastic.hpp"

namespace tdcg {

/// Keys accepted in experiment configs.
const ConfigSchema& config_schema();

/// Seed for a named sub-stream of a run.
std::uint64_t derive_seed(std::uint64_t master, const std::string& tag);

std::string version_string();

/// Run manifest: version, config hash, seed and the canonical config text.
void write_manifest(const std::filesystem::path& dir, const Config& cfg, std::uint64_t seed, int threads,
                    const std::string& command);

struct CriterionResult
{
    std::string id;
    std::string description;
    bool evaluable = true;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

/// Writes `summary.txt` and `summary.csv`; returns true when every
/// evaluable criterion passed.
bool write_summary(const std::filesystem::path& dir, const std::vector<CriterionResult>& results);

// ---------------------------------------------------------------- benchmark

struct BenchSetup
{
    GLEParams gle;
    double dt = 1e-3;
    double t_final = 5.0;
    std::size_t record_stride = 5;
    std::size_t n_paths = 2000;
    std::uint64_t seed = 1;
    Scheme model_scheme = Scheme::EulerMaruyama;

    KnotGrid d_grid;      // time factor D(t)
    int b_n_basis = 10;   // state factor B(Q)
    int b_degree = 3;
    double b_pad = 0.05;  // relative padding of the observed Q range
    std::size_t fit_stride = 10;  // recorded frames -> frames used by the fit
    int als_iters = 50;
    double als_tol = 1e-10;
    double ridge = 0.0;

    double qv_t_final = 150.0;
    std::size_t qv_fine_steps = 36000;
    std::size_t qv_stride = 200;

    std::size_t gk_paths = 400;
    double gk_dt = 1e-3;
    double gk_t_final = 20.0;
    std::size_t gk_record_stride = 10;
    std::size_t gk_max_lag = 1000;
    double gk_t_upper = 0.0;  // <= 0: first zero crossing of the VACF

    double qv_target = 0.097;
    double qv_tol = 0.03;
    double mean_rel_tol = 0.15;
    double gk_rel_tol = 0.25;

    static BenchSetup from_config(const Config& cfg);
    std::size_t n_steps() const;
};

Ensemble simulate_bench_ensemble(const BenchSetup& s);

struct QvResult
{
    double sigma0 = 0.0;
    double zeta0 = 0.0;
    std::size_t n_increments = 0;
    double spacing = 0.0;
};
/// Single long GLE path from the benchmark initial condition, subsampled.
QvResult bench_quadratic_variation(const BenchSetup& s);

struct MeanPathResult
{
    SeparableFit fit;
    KnotGrid b_grid;
    double rel_l2_q = 0.0;
    double rel_l2_p = 0.0;
    Moments reference;
    Moments model;
};
/// Separable fit on the GLE ensemble, simulation of the fitted Langevin
/// model with (zeta0, sigma0) from `qv`, and comparison of mean paths.
MeanPathResult bench_mean_paths(const BenchSetup& s, const Ensemble& gle, const QvResult& qv);

struct GreenKuboResult
{
    double zeta0 = 0.0;
    double t_upper = 0.0;
    double target = 0.0;  // eta^2 tau
    CorrelationSeries cvv;
    CorrelationSeries cfv;
};
/// Stationary GLE data, sliding origins, model force -alpha Q.
GreenKuboResult bench_green_kubo(const BenchSetup& s);

/// Full benchmark reproduction into `out`; returns the criteria results.
std::vector<CriterionResult> reproduce_bench(const Config& cfg, const std::filesystem::path& out);

// ------------------------------------------------------------ synthetic fluid

struct FluidSetup
{
    // fine reference
    double fcc_cell = 3.0;
    int n_cells = 5;
    double epsilon = 1.0;
    double sigma = 1.0;
    double fine_r_lo = 0.6;
    double fine_r_cut = 2.5;
    int fine_knots = 400;
    double zeta = 0.5;
    double beta = 1.0;
    double mass = 1.0;
    double dt = 0.005;
    std::size_t n_steps = 2000;
    std::size_t record_stride = 20;
    std::size_t n_paths = 10;
    double skin = 0.3;
    std::uint64_t seed = 7;
    ForceRecord record = ForceRecord::Conservative;
    /// CG sites are fine particles 0, k, 2k, ...; the others act as an unresolved bath.
    std::size_t keep_every = 1;

    // fits
    KnotGrid r_grid;
    int t_n_basis = 24;
    int t_degree = 1;
    double ridge_scale = 1.0;  // multiple of recommended_ridge
    double eq_window_start = 0.5;  // fraction of t_f used for the equilibrium fit when eq_paths == 0

    // equilibrium data: separate paths recorded after an unrecorded warm-up
    std::size_t eq_paths = 0;
    std::size_t eq_equilibration_steps = 20000;
    std::size_t eq_n_steps = 2000;

    // CG models
    Scheme cg_scheme = Scheme::BAOAB;
    std::size_t cg_paths = 10;

    // observables
    std::size_t rdf_bins = 60;
    double rdf_r_max = 5.0;
    std::vector<double> rdf_instants{0.1, 0.5, 1.0};
    std::vector<double> potential_instants{0.1, 0.3, 0.5, 0.8, 1.0};
    double potential_r_min = 0.95;
    std::size_t potential_points = 200;
    std::size_t vacf_max_lag = 50;

    double instant_rel_tol = 0.02;

    static FluidSetup from_config(const Config& cfg);
    double t_final() const { return dt * static_cast<double>(n_steps); }
    SimBox box() const { return SimBox::cubic(fcc_cell * n_cells); }
    PairForceField fine_field() const;
    CGMapping cg_mapping(std::size_t fine_particles) const;
};

struct FluidModel
{
    std::string name;  // TD-fe, TD-ft, TD-0, PMF-fe, PMF-ft, PMF-0
    double zeta = 0.0;
    Ensemble data;
    std::vector<RdfResult> rdf;  // at rdf_instants
    double diffusion = 0.0;
};

struct FluidResult
{
    Ensemble reference;
    /// Data for the equilibrium fit and the equilibrium friction estimate.
    Ensemble equilibrium;
    CGMapping mapping;
    TimeDependentPairForceField td_field;
    PairForceField eq_field;
    double zeta_eq = 0.0;
    double zeta_transient = 0.0;
    std::vector<RdfResult> reference_rdf;
    double reference_diffusion = 0.0;

    std::vector<double> instant_rms;         // A5, relative to well depth
    std::vector<double> instant_well_depth;
    std::vector<double> eq_deviation;        // A6
    std::vector<FluidModel> models;
    std::vector<double> potential_grid;
};

/// Fine reference, fits, friction estimates, potential comparisons.
/// With `run_models` the six CG variants are simulated and analyzed.
FluidResult run_fluid_pipeline(const FluidSetup& s, bool run_models);

double rdf_l2(const RdfResult& a, const RdfResult& b);

std::vector<CriterionResult> reproduce_fluid(const Config& cfg, const std::filesystem::path& out);

}  // namespace tdcg
