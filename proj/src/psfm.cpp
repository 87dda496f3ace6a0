#include "tdcg/psfm.hpp"

#include <algorithm>
#include <cmath>

#include "tdcg/errors.hpp"

namespace tdcg {

void accumulate(DesignAccumulator& acc, const FrameView& frame, int dim, const CGMapping& mapping,
                const SimBox& box, const SplineBasis1D& basis)
{
    if (acc.n_r() != basis.size() || acc.n_t() != 1)
        throw ArgumentError("accumulator size does not match the basis");
    acc.add(frame_stats(frame, dim, mapping, box, basis));
}

void accumulate(DesignAccumulator& acc, const FrameView& frame, int dim, const CGMapping& mapping,
                const SimBox& box, const TensorBasis2D& basis, double t)
{
    if (acc.n_r() != basis.r_basis().size() || acc.n_t() != basis.t_basis().size())
        throw ArgumentError("accumulator size does not match the tensor basis");
    if (!basis.t_basis().contains(t))
        throw ArgumentError("frame time " + std::to_string(t) + " lies outside the time basis");
    const auto chi = basis.t_basis().eval(t);
    acc.add(frame_stats(frame, dim, mapping, box, basis.r_basis()), &chi);
}

DesignAccumulator accumulate_frames(const Ensemble& ens, const std::vector<FrameRef>& frames,
                                    const PairFitSetup& setup, const SplineBasis1D& r_basis,
                                    const SplineBasis1D* t_basis)
{
    if (ens.paths.empty())
        throw ArgumentError("empty ensemble");
    const int dim = ens.paths.front().dim();
    DesignAccumulator acc(r_basis.size(), t_basis ? t_basis->size() : 1);

    std::vector<FrameRef> order = frames;
    std::sort(order.begin(), order.end(), [](const FrameRef& a, const FrameRef& b) {
        return a.path != b.path ? a.path < b.path : a.frame < b.frame;
    });
    for (const auto& fr : order) {
        if (fr.path >= ens.n_paths() || fr.frame >= ens.paths[fr.path].size())
            throw ArgumentError("frame reference out of range");
        if (!ens.paths[fr.path].has_forces())
            throw PreconditionError("ensemble frames carry no forces");
        if (t_basis && !t_basis->contains(ens.paths[fr.path].times()[fr.frame]))
            throw ArgumentError("frame time lies outside the time basis");
    }

    constexpr std::size_t kBatch = 64;
    std::vector<FrameStats> batch;
    for (std::size_t start = 0; start < order.size(); start += kBatch) {
        const std::size_t n = std::min(kBatch, order.size() - start);
        batch.assign(n, FrameStats{});
        std::vector<std::exception_ptr> errors(n);
        const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < ni; ++i) {
            const auto& fr = order[start + static_cast<std::size_t>(i)];
            try {
                batch[static_cast<std::size_t>(i)] =
                    frame_stats(ens.paths[fr.path].frame(fr.frame), dim, setup.mapping, setup.box, r_basis);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (errors[i])
                std::rethrow_exception(errors[i]);
            const auto& fr = order[start + i];
            if (t_basis) {
                const auto chi = t_basis->eval(ens.paths[fr.path].times()[fr.frame]);
                acc.add(batch[i], &chi);
            } else {
                acc.add(batch[i]);
            }
        }
    }
    return acc;
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

}  // namespace

FitResult fit_equilibrium(const Ensemble& ens, const PairFitSetup& setup, const SplineBasis1D& basis)
{
    return solve(accumulate_frames(ens, all_frames(ens), setup, basis), setup.ridge);
}

std::size_t nearest_frame(const Trajectory& traj, double t)
{
    const auto& times = traj.times();
    if (times.empty())
        throw ArgumentError("no frame near t = " + std::to_string(t));
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    std::size_t best = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - times.begin(),
                                                                          static_cast<std::ptrdiff_t>(times.size()) - 1));
    if (best > 0 && std::abs(times[best - 1] - t) <= std::abs(times[best] - t))
        --best;
    if (std::abs(times[best] - t) > 0.5 * traj.dt_nominal() * (1.0 + 1e-9))
        throw ArgumentError("no frame within half a spacing of t = " + std::to_string(t));
    return best;
}

FitResult fit_instant(const Ensemble& ens, double t, const PairFitSetup& setup, const SplineBasis1D& basis)
{
    std::vector<FrameRef> refs;
    for (std::size_t p = 0; p < ens.n_paths(); ++p)
        refs.push_back({p, nearest_frame(ens.paths[p], t)});
    return solve(accumulate_frames(ens, refs, setup, basis), setup.ridge);
}

FitResult fit_time_dependent(const Ensemble& ens, const PairFitSetup& setup, const TensorBasis2D& basis)
{
    return solve(accumulate_frames(ens, all_frames(ens), setup, basis.r_basis(), &basis.t_basis()), setup.ridge);
}

SeparableForce::SeparableForce(SplineBasis1D d_basis, std::vector<double> theta1, SplineBasis1D b_basis,
                               std::vector<double> theta2)
    : d_basis_(std::move(d_basis)), theta1_(std::move(theta1)), b_basis_(std::move(b_basis)),
      theta2_(std::move(theta2))
{
    if (static_cast<int>(theta1_.size()) != d_basis_.size() || static_cast<int>(theta2_.size()) != b_basis_.size())
        throw ArgumentError("separable coefficients do not match their bases");
}

namespace {

double expand(const SplineBasis1D& basis, const std::vector<double>& coeffs, double x)
{
    const auto v = basis.eval(std::clamp(x, basis.lo(), basis.hi()));
    double s = 0.0;
    for (int k = 0; k < v.count; ++k)
        s += coeffs[static_cast<std::size_t>(v.index[k])] * v.value[k];
    return s;
}

}  // namespace

double SeparableForce::d_factor(double t) const { return expand(d_basis_, theta1_, t); }
double SeparableForce::b_factor(double q) const { return expand(b_basis_, theta2_, q); }

void SeparableForce::evaluate(std::span<const double> positions, double t, std::span<double> forces) const
{
    const double d = d_factor(t);
    for (std::size_t i = 0; i < positions.size(); ++i)
        forces[i] = -d * b_factor(positions[i]);
}

namespace {

struct Sample
{
    double t = 0.0;  // clamped into the time basis
    double q = 0.0;
    double f = 0.0;
};

/// Builds one accumulator per path in parallel and merges them in path order.
template <typename RowFn>
DesignAccumulator reduce_paths(const std::vector<std::vector<Sample>>& samples, int k, RowFn&& row)
{
    const auto np = static_cast<std::int64_t>(samples.size());
    std::vector<DesignAccumulator> parts(samples.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < np; ++p) {
        DesignAccumulator acc(k);
        std::array<int, 4> idx{};
        std::array<double, 4> val{};
        for (const auto& s : samples[static_cast<std::size_t>(p)]) {
            const int n = row(s, idx, val);
            acc.add_row(std::span(idx.data(), static_cast<std::size_t>(n)),
                        std::span(val.data(), static_cast<std::size_t>(n)), s.f);
        }
        parts[static_cast<std::size_t>(p)] = std::move(acc);
    }
    DesignAccumulator total(k);
    for (const auto& part : parts)
        total.merge(part);
    return total;
}

double dot(const SparseBasisValues& v, const std::vector<double>& c)
{
    double s = 0.0;
    for (int k = 0; k < v.count; ++k)
        s += c[static_cast<std::size_t>(v.index[k])] * v.value[k];
    return s;
}

}  // namespace

SeparableFit fit_separable(const Ensemble& ens, const SplineBasis1D& d_basis, const SplineBasis1D& b_basis,
                           int als_iters, double tol, double ridge)
{
    if (als_iters < 1)
        throw ArgumentError("als_iters must be >= 1");
    if (ens.paths.empty())
        throw ArgumentError("empty ensemble");
    if (ens.paths.front().width() != 1)
        throw ArgumentError("separable fits expect one-dimensional single-particle data");
    if (!ens.paths.front().has_forces())
        throw PreconditionError("ensemble frames carry no forces");

    SeparableFit out;
    std::vector<std::vector<Sample>> samples(ens.n_paths());
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        const auto& tr = ens.paths[p];
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const double q = tr.positions(i)[0];
            if (!b_basis.contains(q)) {
                ++out.n_excluded;
                continue;
            }
            const double t = std::clamp(tr.times()[i], d_basis.lo(), d_basis.hi());
            samples[p].push_back({t, q, tr.forces(i)[0]});
        }
    }

    const int nd = d_basis.size(), nb = b_basis.size();
    std::vector<double> theta1(static_cast<std::size_t>(nd), 1.0), theta2(static_cast<std::size_t>(nb), 0.0);

    auto solve_theta2 = [&]() {
        const auto acc = reduce_paths(samples, nb, [&](const Sample& s, auto& idx, auto& val) {
            const double d = dot(d_basis.eval(s.t), theta1);
            const auto phi = b_basis.eval(s.q);
            for (int k = 0; k < phi.count; ++k) {
                idx[static_cast<std::size_t>(k)] = phi.index[k];
                val[static_cast<std::size_t>(k)] = -d * phi.value[k];
            }
            return phi.count;
        });
        const auto fit = solve(acc, ridge);
        theta2 = fit.coeff_vector();
        out.n_rows = fit.n_rows;
        return fit.rms_residual;
    };
    auto solve_theta1 = [&]() {
        const auto acc = reduce_paths(samples, nd, [&](const Sample& s, auto& idx, auto& val) {
            const double b = dot(b_basis.eval(s.q), theta2);
            const auto chi = d_basis.eval(s.t);
            for (int k = 0; k < chi.count; ++k) {
                idx[static_cast<std::size_t>(k)] = chi.index[k];
                val[static_cast<std::size_t>(k)] = -b * chi.value[k];
            }
            return chi.count;
        });
        const auto fit = solve(acc, ridge);
        theta1 = fit.coeff_vector();
        return fit.rms_residual;
    };
    auto normalize = [&]() {
        double n2 = 0.0;
        for (double v : theta2)
            n2 += v * v;
        const double norm = std::sqrt(n2);
        if (!(norm > 0.0))
            throw DegenerateError("separable fit collapsed to B = 0");
        for (double& v : theta2)
            v /= norm;
        for (double& v : theta1)
            v *= norm;
    };

    // static fit with D = 1 (partition of unity)
    const double r0 = solve_theta2();
    double n2 = 0.0;
    for (double v : theta2)
        n2 += v * v;
    if (!(n2 > 0.0))
        throw DegenerateError("static initialization of the separable fit is zero");
    normalize();
    out.residual_trace.push_back(r0);

    double prev = r0;
    for (int it = 0; it < als_iters; ++it) {
        solve_theta1();
        const double r = solve_theta2();
        normalize();
        out.residual_trace.push_back(r);
        ++out.sweeps;
        if (std::abs(prev - r) <= tol * std::max(prev, 1e-300)) {
            out.converged = true;
            break;
        }
        prev = r;
    }
    out.theta1 = std::move(theta1);
    out.theta2 = std::move(theta2);
    return out;
}

}  // namespace tdcg
