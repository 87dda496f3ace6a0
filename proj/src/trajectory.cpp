#include "tdcg/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "tdcg/errors.hpp"

namespace tdcg {

Trajectory::Trajectory(int dim, std::size_t particles, double dt_nominal, std::vector<double> masses,
                       bool has_forces)
    : dim_(dim), particles_(particles), dt_(dt_nominal), has_forces_(has_forces), masses_(std::move(masses))
{
    if (dim < 1)
        throw ArgumentError("trajectory dimension must be >= 1");
    if (particles < 1)
        throw ArgumentError("trajectory needs at least one particle");
    if (masses_.size() != particles)
        throw ArgumentError("mass vector length " + std::to_string(masses_.size()) + " != particle count " +
                            std::to_string(particles));
}

void Trajectory::reserve(std::size_t n)
{
    times_.reserve(n);
    q_.reserve(n * width());
    p_.reserve(n * width());
    if (has_forces_)
        f_.reserve(n * width());
}

void Trajectory::append(double time, std::span<const double> positions, std::span<const double> momenta,
                        std::span<const double> forces)
{
    const std::size_t w = width();
    if (positions.size() != w || momenta.size() != w)
        throw InvariantError("frame vectors must have length D*M = " + std::to_string(w));
    if (has_forces_ && forces.size() != w)
        throw InvariantError("trajectory records forces; frame force vector must have length " +
                             std::to_string(w));
    if (!has_forces_ && !forces.empty())
        throw InvariantError("trajectory was created without forces");
    times_.push_back(time);
    q_.insert(q_.end(), positions.begin(), positions.end());
    p_.insert(p_.end(), momenta.begin(), momenta.end());
    if (has_forces_)
        f_.insert(f_.end(), forces.begin(), forces.end());
}

std::span<const double> Trajectory::positions(std::size_t i) const
{
    return {q_.data() + i * width(), width()};
}

std::span<const double> Trajectory::momenta(std::size_t i) const
{
    return {p_.data() + i * width(), width()};
}

std::span<const double> Trajectory::forces(std::size_t i) const
{
    if (!has_forces_)
        return {};
    return {f_.data() + i * width(), width()};
}

FrameView Trajectory::frame(std::size_t i) const
{
    if (i >= size())
        throw ArgumentError("frame index " + std::to_string(i) + " out of range");
    return {times_[i], positions(i), momenta(i), forces(i)};
}

void Trajectory::validate() const
{
    if (!(dt_ > 0.0) || !std::isfinite(dt_))
        throw InvariantError("dt_nominal must be positive and finite");
    for (double m : masses_)
        if (!(m > 0.0) || !std::isfinite(m))
            throw InvariantError("masses must be positive and finite");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        const double t = times_[i];
        if (!std::isfinite(t) || t < 0.0)
            throw InvariantError("frame " + std::to_string(i) + ": time must be finite and non-negative");
        if (i > 0) {
            const double step = t - times_[i - 1];
            if (!(step > 0.0))
                throw InvariantError("frame times must be strictly increasing (frame " + std::to_string(i) + ")");
            if (std::abs(step - dt_) > 1e-9 * dt_)
                throw InvariantError("frame " + std::to_string(i) + ": spacing " + std::to_string(step) +
                                     " differs from dt_nominal");
        }
    }
}

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b)
{
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

bool bitwise_equal(const Trajectory& a, const Trajectory& b)
{
    const double da = a.dt_nominal(), db = b.dt_nominal();
    return a.dim() == b.dim() && a.particles() == b.particles() && a.has_forces() == b.has_forces() &&
           std::memcmp(&da, &db, sizeof(double)) == 0 && same_bits(a.masses(), b.masses()) &&
           same_bits(a.times(), b.times()) && [&] {
               for (std::size_t i = 0; i < a.size(); ++i) {
                   auto eq = [](std::span<const double> x, std::span<const double> y) {
                       return x.size() == y.size() &&
                              (x.empty() || std::memcmp(x.data(), y.data(), x.size_bytes()) == 0);
                   };
                   if (!eq(a.positions(i), b.positions(i)) || !eq(a.momenta(i), b.momenta(i)) ||
                       !eq(a.forces(i), b.forces(i)))
                       return false;
               }
               return true;
           }();
}

bool bitwise_equal(const Ensemble& a, const Ensemble& b)
{
    if (a.paths.size() != b.paths.size() || std::memcmp(&a.beta, &b.beta, sizeof(double)) != 0)
        return false;
    for (std::size_t k = 0; k < a.paths.size(); ++k)
        if (!bitwise_equal(a.paths[k], b.paths[k]))
            return false;
    return true;
}

void Ensemble::validate() const
{
    if (!(beta > 0.0))
        throw InvariantError("ensemble beta must be positive");
    for (const auto& p : paths)
        p.validate();
    if (paths.empty())
        return;
    const Trajectory& ref = paths.front();
    for (std::size_t k = 1; k < paths.size(); ++k) {
        const Trajectory& p = paths[k];
        if (p.dim() != ref.dim() || p.particles() != ref.particles() || p.size() != ref.size() ||
            p.dt_nominal() != ref.dt_nominal() || p.times() != ref.times())
            throw InvariantError("path " + std::to_string(k) + " is not aligned with path 0");
    }
}

Trajectory subsample(const Trajectory& traj, std::size_t stride)
{
    if (stride == 0)
        throw ArgumentError("subsample stride must be >= 1");
    Trajectory out(traj.dim(), traj.particles(), traj.dt_nominal() * static_cast<double>(stride), traj.masses(),
                   traj.has_forces());
    out.reserve((traj.size() + stride - 1) / stride);
    for (std::size_t i = 0; i < traj.size(); i += stride)
        out.append(traj.times()[i], traj.positions(i), traj.momenta(i), traj.forces(i));
    return out;
}

Ensemble subsample(const Ensemble& ens, std::size_t stride)
{
    Ensemble out{{}, ens.beta};
    out.paths.reserve(ens.paths.size());
    for (const auto& p : ens.paths)
        out.paths.push_back(subsample(p, stride));
    return out;
}

Trajectory slice_time(const Trajectory& traj, double t0, double t1)
{
    if (!(t0 < t1))
        throw ArgumentError("slice window requires t0 < t1");
    const double tol = 1e-9 * traj.dt_nominal();
    Trajectory out(traj.dim(), traj.particles(), traj.dt_nominal(), traj.masses(), traj.has_forces());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.times()[i];
        if (t >= t0 - tol && t <= t1 + tol)
            out.append(t, traj.positions(i), traj.momenta(i), traj.forces(i));
    }
    if (out.empty())
        throw ArgumentError("no frames in window [" + std::to_string(t0) + ", " + std::to_string(t1) + "]");
    return out;
}

Ensemble slice_time(const Ensemble& ens, double t0, double t1)
{
    Ensemble out{{}, ens.beta};
    out.paths.reserve(ens.paths.size());
    for (const auto& p : ens.paths)
        out.paths.push_back(slice_time(p, t0, t1));
    if (out.paths.empty())
        throw ArgumentError("no frames in window: ensemble is empty");
    return out;
}

Ensemble drop_initial_frame(const Ensemble& ens)
{
    Ensemble out{{}, ens.beta};
    for (const auto& p : ens.paths) {
        if (p.size() < 2)
            throw ArgumentError("cannot drop the initial frame of a path with fewer than 2 frames");
        Trajectory q(p.dim(), p.particles(), p.dt_nominal(), p.masses(), p.has_forces());
        q.reserve(p.size() - 1);
        for (std::size_t i = 1; i < p.size(); ++i)
            q.append(p.times()[i], p.positions(i), p.momenta(i), p.forces(i));
        out.paths.push_back(std::move(q));
    }
    return out;
}

}  // namespace tdcg
