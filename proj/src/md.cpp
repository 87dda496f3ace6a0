#include "tdcg/md.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdcg/errors.hpp"
#include "tdcg/pair_forces.hpp"
#include "tdcg/rng.hpp"

namespace tdcg {

PairForceField field_at(const AnyPairField& field, double t)
{
    if (const auto* f = std::get_if<PairForceField>(&field))
        return *f;
    return std::get<TimeDependentPairForceField>(field).at_time(t);
}

double field_cutoff(const AnyPairField& field)
{
    return std::visit([](const auto& f) { return f.cutoff(); }, field);
}

double MDSystem::sigma() const
{
    return sigma0 ? *sigma0 : std::sqrt(2.0 * zeta0 / beta);
}

void MDSystem::validate() const
{
    box.validate();
    const std::size_t m = particles();
    if (m == 0)
        throw ArgumentError("MD system has no particles");
    if (positions.size() != 3 * m)
        throw ArgumentError("positions must have length 3 * particles");
    if (!momenta.empty() && momenta.size() != 3 * m)
        throw ArgumentError("momenta must be empty or have length 3 * particles");
    for (double x : masses)
        if (!(x > 0.0))
            throw ArgumentError("masses must be positive");
    for (double x : positions)
        if (!std::isfinite(x))
            throw ArgumentError("positions must be finite");
    if (!(zeta0 >= 0.0) || !(beta > 0.0))
        throw ArgumentError("need zeta0 >= 0 and beta > 0");
    if (sigma0 && !(*sigma0 >= 0.0))
        throw ArgumentError("sigma0 must be non-negative");
    if (!(skin >= 0.0))
        throw ArgumentError("skin must be non-negative");
    const double rc = field_cutoff(field);
    if (!(rc > 0.0))
        throw ArgumentError("force field cutoff must be positive");
    if (box.periodic() && rc + skin > 0.5 * box.min_length())
        throw ArgumentError("cutoff plus skin exceeds half the box length");
}

double MDRunLog::max_relative_drift() const
{
    if (times.empty())
        return 0.0;
    const double e0 = kinetic.front() + potential.front();
    const double scale = std::max(std::abs(e0), 1e-300);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        worst = std::max(worst, std::abs(kinetic[i] + potential[i] - e0) / scale);
    return worst;
}

std::vector<double> maxwell_boltzmann(const std::vector<double>& masses, double beta, std::uint64_t seed)
{
    const CounterNormal normal(seed);
    std::vector<double> p(3 * masses.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = normal(0, i) * std::sqrt(masses[i / 3] / beta);
    return p;
}

std::vector<double> init_fcc(const SimBox& box, double cell_length)
{
    box.validate();
    if (!(cell_length > 0.0))
        throw ArgumentError("FCC cell length must be positive");
    std::array<std::size_t, 3> n{};
    for (std::size_t a = 0; a < 3; ++a) {
        const double k = box.lengths[a] / cell_length;
        const double kr = std::round(k);
        if (kr < 1.0 || std::abs(k - kr) > 1e-9 * std::max(1.0, k))
            throw ArgumentError("box length is not a multiple of the FCC cell length");
        n[a] = static_cast<std::size_t>(kr);
    }
    static constexpr double basis[4][3] = {{0.0, 0.0, 0.0}, {0.5, 0.5, 0.0}, {0.5, 0.0, 0.5}, {0.0, 0.5, 0.5}};
    std::vector<double> q;
    q.reserve(12 * n[0] * n[1] * n[2]);
    for (std::size_t x = 0; x < n[0]; ++x)
        for (std::size_t y = 0; y < n[1]; ++y)
            for (std::size_t z = 0; z < n[2]; ++z)
                for (const auto& b : basis) {
                    q.push_back((static_cast<double>(x) + b[0]) * cell_length);
                    q.push_back((static_cast<double>(y) + b[1]) * cell_length);
                    q.push_back((static_cast<double>(z) + b[2]) * cell_length);
                }
    return q;
}

namespace {

double kinetic_energy(const std::vector<double>& p, const std::vector<double>& inv_m)
{
    double k = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        k += 0.5 * p[i] * p[i] * inv_m[i];
    return k;
}

/// Cell list (plus Verlet lists when skinned); tracks displacements since the last build.
class ForceEngine
{
public:
    ForceEngine(const MDSystem& sys, std::size_t n_coords) : sys_(sys), moved_(n_coords, 0.0) {}

    void displaced(std::size_t i, double dx) { moved_[i] += dx; }

    PairForceResult compute(const std::vector<double>& q, double t, bool energy, MDRunLog* log)
    {
        if (!built_ || needs_rebuild()) {
            cells_ = CellList(q, sys_.box, field_cutoff(sys_.field) + sys_.skin);
            if (sys_.skin > 0.0)
                cells_.build_neighbors(q, sys_.box, field_cutoff(sys_.field) + sys_.skin);
            std::fill(moved_.begin(), moved_.end(), 0.0);
            built_ = true;
            if (log)
                ++log->rebuilds;
        }
        const PairForceField ff = field_at(sys_.field, t);
        if (energy) {
            const PotentialTable table(ff);
            return compute_pair_forces(q, sys_.box, ff, cells_, &table);
        }
        return compute_pair_forces(q, sys_.box, ff, cells_);
    }

private:
    bool needs_rebuild() const
    {
        if (sys_.skin == 0.0)
            return true;
        double worst = 0.0;
        for (std::size_t i = 0; i < moved_.size(); i += 3) {
            const double d2 = moved_[i] * moved_[i] + moved_[i + 1] * moved_[i + 1] + moved_[i + 2] * moved_[i + 2];
            worst = std::max(worst, d2);
        }
        return std::sqrt(worst) > 0.5 * sys_.skin;
    }

    const MDSystem& sys_;
    CellList cells_;
    std::vector<double> moved_;
    bool built_ = false;
};

}  // namespace

Trajectory run_md(const MDSystem& system, const IntegratorSpec& spec, MDRunLog* log)
{
    system.validate();
    spec.validate();

    const std::size_t m = system.particles();
    const std::size_t w = 3 * m;
    const CounterNormal normal(spec.seed);
    const double dt = spec.dt;
    const double zeta = system.zeta0, sigma = system.sigma();

    std::vector<double> inv_m(w);
    for (std::size_t i = 0; i < w; ++i)
        inv_m[i] = 1.0 / system.masses[i / 3];

    std::vector<double> q = system.positions;
    if (system.box.periodic())
        for (std::size_t i = 0; i < w; ++i)
            q[i] = system.box.wrap_position(q[i], static_cast<int>(i % 3));
    std::vector<double> p = system.momenta.empty() ? maxwell_boltzmann(system.masses, system.beta, spec.seed)
                                                   : system.momenta;
    std::vector<double> xi(w), rec(w);

    ForceEngine engine(system, w);
    const bool want_energy = log != nullptr;
    PairForceResult fr = engine.compute(q, 0.0, want_energy, log);
    std::vector<double> f = fr.forces;

    Trajectory traj(3, m, dt * static_cast<double>(spec.record_stride), system.masses, spec.record_forces);
    traj.reserve(spec.n_frames());

    auto draw = [&](std::size_t step) {
        const auto n = static_cast<std::int64_t>(w);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i)
            xi[static_cast<std::size_t>(i)] = normal(step, static_cast<std::uint64_t>(i));
    };
    auto record = [&](std::size_t n) {
        const double t = static_cast<double>(n) * dt;
        if (log) {
            if (n != 0)
                fr = engine.compute(q, t, true, log);
            log->times.push_back(t);
            log->kinetic.push_back(kinetic_energy(p, inv_m));
            log->potential.push_back(fr.energy);
        }
        if (!spec.record_forces) {
            traj.append(t, q, p);
            return;
        }
        for (std::size_t i = 0; i < w; ++i) {
            rec[i] = f[i];
            if (system.record == ForceRecord::Total)
                rec[i] += -zeta * p[i] * inv_m[i] + sigma * xi[i] / std::sqrt(dt);
        }
        traj.append(t, q, p, rec);
    };
    auto drift = [&](double h) {
        for (std::size_t i = 0; i < w; ++i) {
            const double dx = h * p[i] * inv_m[i];
            q[i] += dx;
            engine.displaced(i, dx);
        }
    };
    auto wrap_and_check = [&](std::size_t step) {
        for (std::size_t i = 0; i < w; ++i) {
            if (!std::isfinite(q[i]) || !std::isfinite(p[i]))
                throw DivergenceError(step);
            if (system.box.periodic())
                q[i] = system.box.wrap_position(q[i], static_cast<int>(i % 3));
        }
    };

    std::vector<double> c(w, 1.0), s(w, sigma * std::sqrt(dt));
    if (spec.scheme == Scheme::BAOAB && zeta > 0.0)
        for (std::size_t i = 0; i < w; ++i) {
            c[i] = std::exp(-zeta * dt * inv_m[i]);
            s[i] = sigma * std::sqrt((1.0 - c[i] * c[i]) / (2.0 * zeta * inv_m[i]));
        }
    const double sq = std::sqrt(dt);

    for (std::size_t n = 0; n < spec.n_steps; ++n) {
        draw(n + 1);
        if (n % spec.record_stride == 0)
            record(n);
        const double t1 = static_cast<double>(n + 1) * dt;
        if (spec.scheme == Scheme::EulerMaruyama) {
            std::vector<double> v(w);
            for (std::size_t i = 0; i < w; ++i)
                v[i] = p[i] * inv_m[i];
            for (std::size_t i = 0; i < w; ++i)
                p[i] += (f[i] - zeta * v[i]) * dt + sigma * sq * xi[i];
            for (std::size_t i = 0; i < w; ++i) {
                q[i] += v[i] * dt;
                engine.displaced(i, v[i] * dt);
            }
            wrap_and_check(n + 1);
            f = engine.compute(q, t1, false, nullptr).forces;
        } else {
            for (std::size_t i = 0; i < w; ++i)
                p[i] += 0.5 * dt * f[i];
            drift(0.5 * dt);
            for (std::size_t i = 0; i < w; ++i)
                p[i] = c[i] * p[i] + s[i] * xi[i];
            drift(0.5 * dt);
            wrap_and_check(n + 1);
            f = engine.compute(q, t1, false, nullptr).forces;
            for (std::size_t i = 0; i < w; ++i)
                p[i] += 0.5 * dt * f[i];
            wrap_and_check(n + 1);
        }
    }
    if (spec.n_steps % spec.record_stride == 0) {
        draw(spec.n_steps + 1);
        record(spec.n_steps);
    }

    if (log && zeta == 0.0 && sigma == 0.0) {
        const double d = log->max_relative_drift();
        if (d > log->energy_tolerance) {
            std::ostringstream msg;
            msg << "energy check failed: relative drift " << d << " exceeds " << log->energy_tolerance;
            log->messages.push_back(msg.str());
        }
    }
    return traj;
}

Ensemble run_fine_reference(const FineReferenceSpec& spec)
{
    MDSystem sys;
    sys.box = spec.box;
    sys.positions = init_fcc(spec.box, spec.fcc_cell);
    sys.masses.assign(sys.positions.size() / 3, spec.mass);
    sys.field = spec.field;
    sys.zeta0 = spec.zeta;
    sys.beta = spec.beta;
    sys.skin = spec.skin;
    sys.record = spec.record;
    sys.validate();
    IntegratorSpec integrator = spec.integrator;
    integrator.record_forces = true;
    return generate_ensemble(
        [&](std::uint64_t seed) {
            IntegratorSpec s = integrator;
            s.seed = seed;
            if (spec.equilibration_steps == 0)
                return run_md(sys, s);
            IntegratorSpec pre = integrator;
            pre.n_steps = spec.equilibration_steps;
            pre.record_stride = spec.equilibration_steps;
            pre.record_forces = false;
            pre.seed = seed;
            const Trajectory warm = run_md(sys, pre);
            MDSystem cont = sys;
            const auto q = warm.positions(warm.size() - 1);
            const auto p = warm.momenta(warm.size() - 1);
            cont.positions.assign(q.begin(), q.end());
            cont.momenta.assign(p.begin(), p.end());
            s.seed = splitmix64_step(seed);
            return run_md(cont, s);
        },
        spec.n_paths, spec.master_seed, spec.beta);
}

}  // namespace tdcg
