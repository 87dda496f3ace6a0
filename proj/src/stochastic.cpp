#include "tdcg/stochastic.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "tdcg/errors.hpp"
#include "tdcg/rng.hpp"

namespace tdcg {

void IntegratorSpec::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ArgumentError("integrator dt must be positive");
    if (record_stride < 1)
        throw ArgumentError("record_stride must be >= 1");
}

void GLEParams::validate() const
{
    if (!(tau > 0.0))
        throw ArgumentError("GLE tau must be positive");
    if (!(beta > 0.0))
        throw ArgumentError("GLE beta must be positive");
    if (!(mass > 0.0))
        throw ArgumentError("GLE mass must be positive");
    if (initial == InitialLaw::Equilibrium && !(alpha > 0.0))
        throw ArgumentError("equilibrium initial law needs a confining potential (alpha > 0)");
}

void LangevinTDParams::validate() const
{
    if (!force)
        throw ArgumentError("Langevin model needs a force");
    if (!(zeta0 >= 0.0) || !(sigma0 >= 0.0))
        throw ArgumentError("zeta0 and sigma0 must be non-negative");
    if (!(beta > 0.0))
        throw ArgumentError("beta must be positive");
    if (dim < 1 || mass.empty())
        throw ArgumentError("Langevin model needs dim >= 1 and at least one particle");
    for (double m : mass)
        if (!(m > 0.0))
            throw ArgumentError("masses must be positive");
    const std::size_t w = static_cast<std::size_t>(dim) * mass.size();
    if (q0.size() != w || p0.size() != w)
        throw ArgumentError("initial state must have length dim * particles");
    if (fdt && std::abs(sigma0 * sigma0 - 2.0 * zeta0 / beta) > 1e-12)
        throw ArgumentError("sigma0^2 != 2 zeta0 / beta although the FDT flag is set");
}

Trajectory simulate_gle(const GLEParams& params, const IntegratorSpec& spec)
{
    params.validate();
    spec.validate();
    if (spec.scheme != Scheme::EulerMaruyama)
        throw ArgumentError("the GLE embedding is integrated with Euler-Maruyama only");

    const CounterNormal normal(spec.seed);
    const double m = params.mass;
    double q = params.q0, p = params.p0;
    double z = normal(0, 0) / std::sqrt(params.beta);
    if (params.initial == InitialLaw::Equilibrium) {
        q = normal(0, 1) / std::sqrt(params.alpha * params.beta);
        p = normal(0, 2) * std::sqrt(m / params.beta);
    }

    const double dt = spec.dt;
    const double noise = std::sqrt(2.0 * dt / (params.beta * params.tau));
    Trajectory traj(1, 1, dt * static_cast<double>(spec.record_stride), {m}, spec.record_forces);
    traj.reserve(spec.n_frames());

    auto record = [&](std::size_t n) {
        const double f = -params.alpha * q + params.eta * z;
        const double t = static_cast<double>(n) * dt;
        if (spec.record_forces)
            traj.append(t, std::span(&q, 1), std::span(&p, 1), std::span(&f, 1));
        else
            traj.append(t, std::span(&q, 1), std::span(&p, 1));
    };

    for (std::size_t n = 0; n < spec.n_steps; ++n) {
        if (n % spec.record_stride == 0)
            record(n);
        const double v = p / m;
        const double q1 = q + v * dt;
        const double p1 = p + (-params.alpha * q + params.eta * z) * dt;
        const double z1 = z + (-z / params.tau - params.eta * v) * dt + noise * normal(n + 1, 0);
        q = q1;
        p = p1;
        z = z1;
        if (!std::isfinite(q) || !std::isfinite(p) || !std::isfinite(z))
            throw DivergenceError(n + 1);
    }
    if (spec.n_steps % spec.record_stride == 0)
        record(spec.n_steps);
    return traj;
}

Trajectory simulate_langevin_td(const LangevinTDParams& params, const IntegratorSpec& spec)
{
    params.validate();
    spec.validate();

    const std::size_t w = params.q0.size();
    const auto dim = static_cast<std::size_t>(params.dim);
    const CounterNormal normal(spec.seed);
    const double dt = spec.dt;
    const double zeta = params.zeta0, sigma = params.sigma0;

    std::vector<double> inv_m(w);
    for (std::size_t i = 0; i < w; ++i)
        inv_m[i] = 1.0 / params.mass[i / dim];

    std::vector<double> q = params.q0, p = params.p0, f(w), xi(w), rec(w);
    Trajectory traj(params.dim, params.particles(), dt * static_cast<double>(spec.record_stride), params.mass,
                    spec.record_forces);
    traj.reserve(spec.n_frames());

    auto record = [&](std::size_t n, bool have_noise) {
        const double t = static_cast<double>(n) * dt;
        if (!spec.record_forces) {
            traj.append(t, q, p);
            return;
        }
        for (std::size_t i = 0; i < w; ++i) {
            rec[i] = f[i];
            if (params.record == ForceRecord::Total) {
                rec[i] -= zeta * p[i] * inv_m[i];
                if (have_noise)
                    rec[i] += sigma * xi[i] / std::sqrt(dt);
            }
        }
        traj.append(t, q, p, rec);
    };
    auto check = [&](std::size_t step) {
        for (std::size_t i = 0; i < w; ++i)
            if (!std::isfinite(q[i]) || !std::isfinite(p[i]))
                throw DivergenceError(step);
    };

    params.force->evaluate(q, 0.0, f);

    if (spec.scheme == Scheme::EulerMaruyama) {
        const double sq = std::sqrt(dt);
        for (std::size_t n = 0; n < spec.n_steps; ++n) {
            for (std::size_t i = 0; i < w; ++i)
                xi[i] = normal(n + 1, i);
            if (n % spec.record_stride == 0)
                record(n, true);
            for (std::size_t i = 0; i < w; ++i) {
                const double v = p[i] * inv_m[i];
                q[i] += v * dt;
                p[i] += (f[i] - zeta * v) * dt + sigma * sq * xi[i];
            }
            check(n + 1);
            params.force->evaluate(q, static_cast<double>(n + 1) * dt, f);
        }
    } else {
        std::vector<double> c(w), s(w);
        for (std::size_t i = 0; i < w; ++i) {
            const double m = 1.0 / inv_m[i];
            if (zeta > 0.0) {
                c[i] = std::exp(-zeta * dt * inv_m[i]);
                s[i] = sigma * std::sqrt(m * (1.0 - c[i] * c[i]) / (2.0 * zeta));
            } else {
                c[i] = 1.0;
                s[i] = sigma * std::sqrt(dt);
            }
        }
        for (std::size_t n = 0; n < spec.n_steps; ++n) {
            for (std::size_t i = 0; i < w; ++i)
                xi[i] = normal(n + 1, i);
            if (n % spec.record_stride == 0)
                record(n, true);
            for (std::size_t i = 0; i < w; ++i) {
                p[i] += 0.5 * dt * f[i];
                q[i] += 0.5 * dt * p[i] * inv_m[i];
                p[i] = c[i] * p[i] + s[i] * xi[i];
                q[i] += 0.5 * dt * p[i] * inv_m[i];
            }
            params.force->evaluate(q, static_cast<double>(n + 1) * dt, f);
            for (std::size_t i = 0; i < w; ++i)
                p[i] += 0.5 * dt * f[i];
            check(n + 1);
        }
    }
    if (spec.n_steps % spec.record_stride == 0) {
        for (std::size_t i = 0; i < w; ++i)
            xi[i] = normal(spec.n_steps + 1, i);
        record(spec.n_steps, true);
    }
    return traj;
}

namespace {

Ensemble assemble(std::vector<Trajectory> paths, double beta)
{
    Ensemble ens{std::move(paths), beta};
    ens.validate();
    return ens;
}

}  // namespace

Ensemble generate_ensemble(const PathSimulator& simulate, std::size_t n_paths, std::uint64_t master_seed,
                           double beta)
{
    if (n_paths < 1)
        throw ArgumentError("ensemble needs at least one path");
    std::vector<Trajectory> paths(n_paths);
    std::vector<std::exception_ptr> errors(n_paths);
    const auto n = static_cast<std::int64_t>(n_paths);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < n; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        try {
            paths[kk] = simulate(path_seed(master_seed, kk));
        } catch (...) {
            errors[kk] = std::current_exception();
        }
    }
    for (std::size_t k = 0; k < n_paths; ++k) {
        if (!errors[k])
            continue;
        try {
            std::rethrow_exception(errors[k]);
        } catch (const std::exception& e) {
            throw PathError(k, e.what());
        }
    }
    return assemble(std::move(paths), beta);
}

Ensemble generate_ensemble_serial(const PathSimulator& simulate, std::size_t n_paths, std::uint64_t master_seed,
                                  double beta)
{
    if (n_paths < 1)
        throw ArgumentError("ensemble needs at least one path");
    std::vector<Trajectory> paths;
    paths.reserve(n_paths);
    for (std::size_t k = 0; k < n_paths; ++k) {
        try {
            paths.push_back(simulate(path_seed(master_seed, k)));
        } catch (const std::exception& e) {
            throw PathError(k, e.what());
        }
    }
    return assemble(std::move(paths), beta);
}

std::string ForceGrowthReport::summary() const
{
    std::ostringstream out;
    out << "max|f| = " << max_abs_force << ", max|df/dr| = " << max_slope;
    for (const auto& w : warnings) {
        out << "\nwarning: slope " << w.slope << " at r = " << w.r << ", t = " << w.t;
        if (w.nearest_knot >= 0)
            out << " (knot " << w.nearest_knot << ")";
    }
    return out.str();
}

ForceGrowthReport validate_force_growth(const std::function<double(double r, double t)>& force,
                                        std::span<const double> r_grid, std::span<const double> t_grid,
                                        double slope_bound, const KnotGrid* knot_grid)
{
    ForceGrowthReport report;
    for (double t : t_grid) {
        double prev = 0.0;
        for (std::size_t i = 0; i < r_grid.size(); ++i) {
            const double f = force(r_grid[i], t);
            report.max_abs_force = std::max(report.max_abs_force, std::abs(f));
            if (i > 0) {
                const double slope = std::abs((f - prev) / (r_grid[i] - r_grid[i - 1]));
                report.max_slope = std::max(report.max_slope, slope);
                if (slope > slope_bound) {
                    GrowthWarning w{0.5 * (r_grid[i] + r_grid[i - 1]), t, slope, -1};
                    if (knot_grid) {
                        const double s = (w.r - knot_grid->lo) / knot_grid->spacing();
                        w.nearest_knot = std::clamp(static_cast<int>(std::lround(s)), 0, knot_grid->n_intervals());
                    }
                    report.warnings.push_back(w);
                }
            }
            prev = f;
        }
    }
    return report;
}

}  // namespace tdcg
