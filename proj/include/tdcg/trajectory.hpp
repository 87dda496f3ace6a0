#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tdcg {

/// Read-only view of one recorded configuration.
struct FrameView
{
    double time = 0.0;
    std::span<const double> positions;
    std::span<const double> momenta;
    std::span<const double> forces;  // empty when the trajectory carries no forces

    bool has_forces() const { return !forces.empty(); }
};

/// One sample path on a uniform time grid. Per-frame data is stored
/// contiguously (frame-major), so ensembles of thousands of short paths stay
/// compact.
class Trajectory
{
public:
    Trajectory() = default;
    Trajectory(int dim, std::size_t particles, double dt_nominal, std::vector<double> masses,
               bool has_forces);

    /// Appends a frame. Lengths are checked here; time ordering is checked by validate().
    void append(double time, std::span<const double> positions, std::span<const double> momenta,
                std::span<const double> forces = {});
    void reserve(std::size_t n_frames);

    int dim() const { return dim_; }
    std::size_t particles() const { return particles_; }
    /// D * M
    std::size_t width() const { return static_cast<std::size_t>(dim_) * particles_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    double dt_nominal() const { return dt_; }
    bool has_forces() const { return has_forces_; }
    const std::vector<double>& masses() const { return masses_; }
    const std::vector<double>& times() const { return times_; }

    FrameView frame(std::size_t i) const;
    std::span<const double> positions(std::size_t i) const;
    std::span<const double> momenta(std::size_t i) const;
    std::span<const double> forces(std::size_t i) const;

    /// Throws InvariantError if any Trajectory invariant is violated.
    void validate() const;

private:
    int dim_ = 1;
    std::size_t particles_ = 1;
    double dt_ = 1.0;
    bool has_forces_ = false;
    std::vector<double> masses_;
    std::vector<double> times_;
    std::vector<double> q_, p_, f_;
};

/// Compares every stored real as a raw 64-bit pattern.
bool bitwise_equal(const Trajectory& a, const Trajectory& b);

/// Independent sample paths on a shared time grid.
struct Ensemble
{
    std::vector<Trajectory> paths;
    double beta = 1.0;

    std::size_t n_paths() const { return paths.size(); }
    std::size_t n_frames() const { return paths.empty() ? 0 : paths.front().size(); }
    /// Throws InvariantError unless all paths share D, M, dt and frame times.
    void validate() const;
};

bool bitwise_equal(const Ensemble& a, const Ensemble& b);

/// Frames 0, stride, 2*stride, ...; dt_nominal is scaled by stride.
Trajectory subsample(const Trajectory& traj, std::size_t stride);
Ensemble subsample(const Ensemble& ens, std::size_t stride);

/// Frames with t0 <= time <= t1 (inclusive, with a 1e-9*dt tolerance on both ends).
Trajectory slice_time(const Trajectory& traj, double t0, double t1);
Ensemble slice_time(const Ensemble& ens, double t0, double t1);

/// Drops the first frame of every path; used when a data set counts
/// observations after the initial configuration.
Ensemble drop_initial_frame(const Ensemble& ens);

}  // namespace tdcg
