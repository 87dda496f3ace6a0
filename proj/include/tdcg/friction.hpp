#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "tdcg/cg_mapping.hpp"
#include "tdcg/force_model.hpp"
#include "tdcg/trajectory.hpp"

namespace tdcg {

/// Correlation function on a uniform lag grid starting at 0.
struct CorrelationSeries
{
    std::vector<double> lags;
    std::vector<double> values;
    std::vector<std::size_t> n_samples;
    /// Standard error from the spread of per-path averages (0 for a single path).
    std::vector<double> std_error;

    std::size_t size() const { return lags.size(); }
    void validate() const;
};

enum class Origin {
    FixedZero,  // v(0) of each path only
    Sliding     // every time origin within each path
};

/// max_lag = 0 means all lags up to the path length.
CorrelationSeries vacf(const Ensemble& ens, const CGMapping& mapping, Origin origin, std::size_t max_lag = 0);

/// (1/D) <dF(t) . v(0)> with dF = recorded (mapped) force - model(Q, t).
CorrelationSeries force_velocity_corr(const Ensemble& ens, const CGMapping& mapping, const ForceModel& model,
                                      Origin origin, std::size_t max_lag = 0);

/// First lag at which the series is <= 0; the last lag if it stays positive.
double first_zero_crossing(const CorrelationSeries& c);

/// Composite trapezoid of w(lag) * c(lag) over [0, t_upper]; a partial last
/// interval is integrated with the linearly interpolated integrand.
double integrate_series(const CorrelationSeries& c, double t_upper, double s = 0.0);

/// -int Cfv / int Cvv over [0, t_upper].
double zeta0_from_green_kubo(const CorrelationSeries& cfv, const CorrelationSeries& cvv, double t_upper);

/// -L[Cfv](s) / L[Cvv](s) on [0, t_upper] for each s.
std::vector<double> laplace_kernel(const CorrelationSeries& cfv, const CorrelationSeries& cvv,
                                   std::span<const double> s_grid, double t_upper);

/// sqrt(sum (dP)^2 / (n * Delta)), averaged over momentum components.
double sigma0_quadratic_variation(const Trajectory& traj);

/// zeta0 = beta sigma0^2 / 2
double zeta_from_sigma(double sigma0, double beta);
/// sigma0 = sqrt(2 zeta0 / beta)
double sigma_from_zeta(double zeta0, double beta);

/// CSV `lag,value,n_samples`.
void export_series_csv(const CorrelationSeries& c, const std::filesystem::path& dest);

}  // namespace tdcg
