#include "tdcg/cg_mapping.hpp"

#include <algorithm>

#include "tdcg/errors.hpp"

namespace tdcg {

CGMapping::CGMapping(std::vector<std::vector<std::size_t>> groups, std::vector<double> fine_masses)
    : groups_(std::move(groups)), fine_masses_(std::move(fine_masses))
{
    if (groups_.empty())
        throw ArgumentError("mapping needs at least one group");
    std::vector<char> seen(fine_masses_.size(), 0);
    for (const auto& g : groups_) {
        if (g.empty())
            throw ArgumentError("mapping groups must be nonempty");
        double m = 0.0;
        for (std::size_t i : g) {
            if (i >= fine_masses_.size())
                throw ArgumentError("mapping index " + std::to_string(i) + " has no mass");
            if (seen[i])
                throw ArgumentError("mapping groups overlap at index " + std::to_string(i));
            seen[i] = 1;
            m += fine_masses_[i];
            max_index_ = std::max(max_index_, i);
        }
        if (!(m > 0.0))
            throw ArgumentError("mapping group mass must be positive");
        group_mass_.push_back(m);
    }
}

CGMapping CGMapping::identity(const std::vector<double>& masses)
{
    std::vector<std::vector<std::size_t>> groups(masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i)
        groups[i] = {i};
    return CGMapping(std::move(groups), masses);
}

CGMapping CGMapping::consecutive(const std::vector<double>& masses, std::size_t k)
{
    if (k == 0 || masses.size() % k != 0)
        throw ArgumentError("particle count is not divisible by the group size");
    std::vector<std::vector<std::size_t>> groups(masses.size() / k);
    for (std::size_t i = 0; i < masses.size(); ++i)
        groups[i / k].push_back(i);
    return CGMapping(std::move(groups), masses);
}

namespace {

void check_frame(const FrameView& frame, int dim, const CGMapping& mapping)
{
    if (dim < 1 || frame.positions.size() % static_cast<std::size_t>(dim) != 0)
        throw ArgumentError("frame length is not a multiple of the dimension");
    if (mapping.max_index() >= frame.positions.size() / static_cast<std::size_t>(dim))
        throw ArgumentError("mapping index " + std::to_string(mapping.max_index()) + " exceeds the frame's particles");
}

}  // namespace

std::vector<double> map_positions(const FrameView& frame, int dim, const CGMapping& mapping)
{
    check_frame(frame, dim, mapping);
    const auto d = static_cast<std::size_t>(dim);
    std::vector<double> out(d * mapping.size(), 0.0);
    const auto& m = mapping.fine_masses();
    for (std::size_t g = 0; g < mapping.size(); ++g) {
        for (std::size_t i : mapping.groups()[g])
            for (std::size_t a = 0; a < d; ++a)
                out[g * d + a] += m[i] * frame.positions[i * d + a];
        for (std::size_t a = 0; a < d; ++a)
            out[g * d + a] /= mapping.group_masses()[g];
    }
    return out;
}

std::vector<double> map_forces(const FrameView& frame, int dim, const CGMapping& mapping)
{
    if (!frame.has_forces())
        throw PreconditionError("frame carries no forces");
    check_frame(frame, dim, mapping);
    const auto d = static_cast<std::size_t>(dim);
    std::vector<double> out(d * mapping.size(), 0.0);
    for (std::size_t g = 0; g < mapping.size(); ++g)
        for (std::size_t i : mapping.groups()[g])
            for (std::size_t a = 0; a < d; ++a)
                out[g * d + a] += frame.forces[i * d + a];
    return out;
}

std::vector<double> map_velocities(const FrameView& frame, int dim, const CGMapping& mapping)
{
    check_frame(frame, dim, mapping);
    const auto d = static_cast<std::size_t>(dim);
    std::vector<double> out(d * mapping.size(), 0.0);
    for (std::size_t g = 0; g < mapping.size(); ++g) {
        for (std::size_t i : mapping.groups()[g])
            for (std::size_t a = 0; a < d; ++a)
                out[g * d + a] += frame.momenta[i * d + a];
        for (std::size_t a = 0; a < d; ++a)
            out[g * d + a] /= mapping.group_masses()[g];
    }
    return out;
}

}  // namespace tdcg
