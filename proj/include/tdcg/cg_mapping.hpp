#pragma once

#include <cstddef>
#include <vector>

#include "tdcg/trajectory.hpp"

namespace tdcg {

/// Partition of (a subset of) fine particles into CG groups; each CG site
/// sits at its group's center of mass.
class CGMapping
{
public:
    CGMapping() = default;
    CGMapping(std::vector<std::vector<std::size_t>> groups, std::vector<double> fine_masses);

    /// Singleton groups over all particles.
    static CGMapping identity(const std::vector<double>& masses);
    /// Consecutive groups of k particles; M must be divisible by k.
    static CGMapping consecutive(const std::vector<double>& masses, std::size_t k);

    std::size_t size() const { return groups_.size(); }
    const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }
    const std::vector<double>& group_masses() const { return group_mass_; }
    const std::vector<double>& fine_masses() const { return fine_masses_; }
    std::size_t max_index() const { return max_index_; }

private:
    std::vector<std::vector<std::size_t>> groups_;
    std::vector<double> fine_masses_;
    std::vector<double> group_mass_;
    std::size_t max_index_ = 0;
};

/// Mass-weighted group centers, length dim * groups.
std::vector<double> map_positions(const FrameView& frame, int dim, const CGMapping& mapping);
/// Group-summed forces; PreconditionError if the frame has no forces.
std::vector<double> map_forces(const FrameView& frame, int dim, const CGMapping& mapping);
/// Group momentum over group mass.
std::vector<double> map_velocities(const FrameView& frame, int dim, const CGMapping& mapping);

}  // namespace tdcg
