#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tdcg/basis.hpp"
#include "tdcg/force_model.hpp"
#include "tdcg/trajectory.hpp"

namespace tdcg {

enum class Scheme { EulerMaruyama, BAOAB };

struct IntegratorSpec
{
    Scheme scheme = Scheme::EulerMaruyama;
    double dt = 1e-3;
    std::size_t n_steps = 0;
    std::size_t record_stride = 1;
    std::uint64_t seed = 0;
    bool record_forces = false;

    void validate() const;
    /// Frames produced: steps 0, stride, 2*stride, ... <= n_steps.
    std::size_t n_frames() const { return n_steps / record_stride + 1; }
};

enum class InitialLaw {
    Fixed,       // (q0, p0) deterministic, auxiliary variable ~ N(0, 1/beta)
    Equilibrium  // all variables drawn from the stationary Gibbs law
};

/// Single particle in a harmonic well with exponential memory kernel
/// eta^2 exp(-t/tau) and matching colored noise.
struct GLEParams
{
    double alpha = 0.1;
    double eta = 0.1;
    double tau = 0.5;
    double beta = 1.0;
    double q0 = 0.0;
    double p0 = 0.1;
    double mass = 1.0;
    InitialLaw initial = InitialLaw::Fixed;

    void validate() const;
};

/// What a Langevin simulator stores as the frame force.
enum class ForceRecord {
    Conservative,  // F(Q, t)
    Total          // F(Q, t) - zeta0 v + thermostat noise impulse / dt of the step leaving the frame
};

struct LangevinTDParams
{
    std::shared_ptr<const ForceModel> force;
    double zeta0 = 0.0;
    double sigma0 = 0.0;
    double beta = 1.0;
    int dim = 1;
    std::vector<double> mass{1.0};  // per particle
    std::vector<double> q0{0.0};    // length dim * particles
    std::vector<double> p0{0.0};
    /// When set, sigma0^2 must equal 2 zeta0 / beta to 1e-12.
    bool fdt = false;
    ForceRecord record = ForceRecord::Conservative;

    std::size_t particles() const { return mass.size(); }
    void validate() const;
};

/// Euler-Maruyama on the Markovian embedding
///   dQ = P/m dt, dP = (-alpha Q + eta Z) dt, dZ = (-Z/tau - eta P/m) dt + sqrt(2/(beta tau)) dW.
/// Recorded force is the total force -alpha Q + eta Z.
Trajectory simulate_gle(const GLEParams& params, const IntegratorSpec& spec);

/// Langevin dynamics with a (possibly time-dependent) force:
///   dQ = P/m dt, dP = F(Q, t) dt - zeta0 P/m dt + sigma0 dW.
Trajectory simulate_langevin_td(const LangevinTDParams& params, const IntegratorSpec& spec);

using PathSimulator = std::function<Trajectory(std::uint64_t seed)>;

/// Path k uses seed splitmix64_step(master_seed + k); paths run in parallel
/// and the result does not depend on the thread count.
Ensemble generate_ensemble(const PathSimulator& simulate, std::size_t n_paths, std::uint64_t master_seed,
                           double beta);
/// Serial reference used to check the parallel version.
Ensemble generate_ensemble_serial(const PathSimulator& simulate, std::size_t n_paths, std::uint64_t master_seed,
                                  double beta);

struct GrowthWarning
{
    double r = 0.0;
    double t = 0.0;
    double slope = 0.0;
    int nearest_knot = -1;  // -1 when no knot grid was supplied
};

struct ForceGrowthReport
{
    double max_abs_force = 0.0;
    double max_slope = 0.0;
    std::vector<GrowthWarning> warnings;

    bool ok() const { return warnings.empty(); }
    std::string summary() const;
};

/// Samples f on r_grid x t_grid and reports the largest |f| and |df/dr|
/// (forward differences). Slopes above `slope_bound` produce warnings, not
/// errors. If `knot_grid` is given, each warning names the nearest knot.
ForceGrowthReport validate_force_growth(const std::function<double(double r, double t)>& force,
                                        std::span<const double> r_grid, std::span<const double> t_grid,
                                        double slope_bound, const KnotGrid* knot_grid = nullptr);

}  // namespace tdcg
