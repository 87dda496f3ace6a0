#include "tdcg/friction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "tdcg/errors.hpp"

namespace tdcg {

void CorrelationSeries::validate() const
{
    if (lags.empty() || lags.front() != 0.0)
        throw InvariantError("correlation lags must start at 0");
    if (values.size() != lags.size() || n_samples.size() != lags.size())
        throw InvariantError("correlation series fields differ in length");
}

namespace {

struct PathSignals
{
    std::vector<std::vector<double>> a;  // signal correlated at t + lag
    std::vector<std::vector<double>> v;  // velocity at the origin
};

/// Shared correlation kernel: per path, averages (1/D) a(i + k) . v(i) over
/// origins i (only i = 0 for FixedZero) and CG particles.
template <typename SignalFn>
CorrelationSeries correlate(const Ensemble& ens, const CGMapping& mapping, Origin origin, std::size_t max_lag,
                            SignalFn&& signal)
{
    if (ens.paths.empty() || ens.n_frames() == 0)
        throw ArgumentError("empty ensemble");
    const int dim = ens.paths.front().dim();
    const std::size_t nf = ens.n_frames();
    const std::size_t nl = max_lag == 0 ? nf : std::min(nf, max_lag + 1);
    const std::size_t width = static_cast<std::size_t>(dim) * mapping.size();
    const double inv_d = 1.0 / dim;
    const double dt = ens.paths.front().dt_nominal();

    const auto np = static_cast<std::int64_t>(ens.n_paths());
    std::vector<std::vector<double>> per_path(ens.n_paths(), std::vector<double>(nl, 0.0));
    std::vector<std::exception_ptr> errors(ens.n_paths());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t pi = 0; pi < np; ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        try {
            const auto& tr = ens.paths[p];
            std::vector<std::vector<double>> a(nf), v(nf);
            for (std::size_t i = 0; i < nf; ++i) {
                v[i] = map_velocities(tr.frame(i), dim, mapping);
                a[i] = signal(tr, i, v[i]);
            }
            const std::size_t n_origin = origin == Origin::FixedZero ? 1 : nf;
            for (std::size_t k = 0; k < nl; ++k) {
                double s = 0.0;
                std::size_t count = 0;
                for (std::size_t i = 0; i < n_origin && i + k < nf; ++i) {
                    const auto& x = a[i + k];
                    const auto& y = v[i];
                    for (std::size_t c = 0; c < width; ++c)
                        s += x[c] * y[c];
                    ++count;
                }
                per_path[p][k] = count ? inv_d * s / static_cast<double>(count * mapping.size()) : 0.0;
            }
        } catch (...) {
            errors[p] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    CorrelationSeries out;
    const double n = static_cast<double>(ens.n_paths());
    for (std::size_t k = 0; k < nl; ++k) {
        double mean = 0.0;
        for (const auto& pp : per_path)
            mean += pp[k];
        mean /= n;
        double var = 0.0;
        for (const auto& pp : per_path)
            var += (pp[k] - mean) * (pp[k] - mean);
        out.lags.push_back(static_cast<double>(k) * dt);
        out.values.push_back(mean);
        const std::size_t origins = origin == Origin::FixedZero ? 1 : nf - k;
        out.n_samples.push_back(ens.n_paths() * mapping.size() * origins);
        out.std_error.push_back(ens.n_paths() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0);
    }
    return out;
}

}  // namespace

CorrelationSeries vacf(const Ensemble& ens, const CGMapping& mapping, Origin origin, std::size_t max_lag)
{
    return correlate(ens, mapping, origin, max_lag,
                     [](const Trajectory&, std::size_t, const std::vector<double>& v) { return v; });
}

CorrelationSeries force_velocity_corr(const Ensemble& ens, const CGMapping& mapping, const ForceModel& model,
                                      Origin origin, std::size_t max_lag)
{
    if (!ens.paths.empty() && !ens.paths.front().has_forces())
        throw PreconditionError("ensemble frames carry no forces");
    const int dim = ens.paths.empty() ? 1 : ens.paths.front().dim();
    return correlate(ens, mapping, origin, max_lag,
                     [&](const Trajectory& tr, std::size_t i, const std::vector<double>&) {
                         const auto fv = tr.frame(i);
                         auto f = map_forces(fv, dim, mapping);
                         const auto q = map_positions(fv, dim, mapping);
                         std::vector<double> model_f(q.size());
                         model.evaluate(q, fv.time, model_f);
                         for (std::size_t c = 0; c < f.size(); ++c)
                             f[c] -= model_f[c];
                         return f;
                     });
}

double first_zero_crossing(const CorrelationSeries& c)
{
    c.validate();
    for (std::size_t k = 0; k < c.size(); ++k)
        if (c.values[k] <= 0.0)
            return c.lags[k];
    return c.lags.back();
}

double integrate_series(const CorrelationSeries& c, double t_upper, double s)
{
    c.validate();
    if (!(t_upper >= 0.0) || t_upper > c.lags.back() * (1.0 + 1e-12))
        throw ArgumentError("integration limit outside the lag range");
    if (!(s >= 0.0) || !std::isfinite(s))
        throw ArgumentError("Laplace variable must be finite and non-negative");
    auto g = [&](std::size_t k) { return std::exp(-s * c.lags[k]) * c.values[k]; };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
        const double a = c.lags[k], b = c.lags[k + 1];
        if (a >= t_upper)
            break;
        if (b <= t_upper) {
            total += 0.5 * (b - a) * (g(k) + g(k + 1));
        } else {
            const double w = (t_upper - a) / (b - a);
            const double gu = g(k) + w * (g(k + 1) - g(k));
            total += 0.5 * (t_upper - a) * (g(k) + gu);
        }
    }
    return total;
}

namespace {

void check_grids(const CorrelationSeries& a, const CorrelationSeries& b)
{
    a.validate();
    b.validate();
    if (a.size() != b.size())
        throw ArgumentError("correlation series have different lag grids");
    for (std::size_t k = 0; k < a.size(); ++k)
        if (std::abs(a.lags[k] - b.lags[k]) > 1e-12 * std::max(1.0, std::abs(a.lags[k])))
            throw ArgumentError("correlation series have different lag grids");
}

double ratio(double num, double den)
{
    if (den == 0.0 || std::abs(den) < 1e-14 * std::abs(num))
        throw DegenerateError("velocity autocorrelation integral is degenerate");
    return -num / den;
}

}  // namespace

double zeta0_from_green_kubo(const CorrelationSeries& cfv, const CorrelationSeries& cvv, double t_upper)
{
    check_grids(cfv, cvv);
    return ratio(integrate_series(cfv, t_upper), integrate_series(cvv, t_upper));
}

std::vector<double> laplace_kernel(const CorrelationSeries& cfv, const CorrelationSeries& cvv,
                                   std::span<const double> s_grid, double t_upper)
{
    check_grids(cfv, cvv);
    std::vector<double> out;
    out.reserve(s_grid.size());
    for (double s : s_grid)
        out.push_back(ratio(integrate_series(cfv, t_upper, s), integrate_series(cvv, t_upper, s)));
    return out;
}

double sigma0_quadratic_variation(const Trajectory& traj)
{
    if (traj.size() < 2)
        throw ArgumentError("quadratic variation needs at least two frames");
    const std::size_t w = traj.width();
    double sum = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const auto p0 = traj.momenta(i - 1), p1 = traj.momenta(i);
        for (std::size_t c = 0; c < w; ++c)
            sum += (p1[c] - p0[c]) * (p1[c] - p0[c]);
    }
    const double n = static_cast<double>(traj.size() - 1);
    return std::sqrt(sum / (n * traj.dt_nominal() * static_cast<double>(w)));
}

double zeta_from_sigma(double sigma0, double beta)
{
    if (!(sigma0 >= 0.0) || !(beta > 0.0))
        throw ArgumentError("need sigma0 >= 0 and beta > 0");
    return beta * sigma0 * sigma0 / 2.0;
}

double sigma_from_zeta(double zeta0, double beta)
{
    if (!(zeta0 >= 0.0) || !(beta > 0.0))
        throw ArgumentError("need zeta0 >= 0 and beta > 0");
    return std::sqrt(2.0 * zeta0 / beta);
}

void export_series_csv(const CorrelationSeries& c, const std::filesystem::path& dest)
{
    std::ofstream out(dest);
    if (!out)
        throw IoError("cannot write " + dest.string());
    out << "lag,value,n_samples\n" << std::setprecision(17);
    for (std::size_t k = 0; k < c.size(); ++k)
        out << c.lags[k] << ',' << c.values[k] << ',' << c.n_samples[k] << '\n';
}

}  // namespace tdcg
