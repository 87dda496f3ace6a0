#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tdcg/basis.hpp"
#include "tdcg/force_model.hpp"
#include "tdcg/geometry.hpp"

namespace tdcg {

/// Linked-cell binning of 3-D particle positions. Every particle sits in
/// exactly one cell; the 27-cell stencil around a particle's cell (with
/// duplicates removed for small periodic boxes) contains every neighbor
/// closer than the cell size.
class CellList
{
public:
    CellList() = default;
    CellList(std::span<const double> positions, const SimBox& box, double cell_size);

    std::size_t particles() const { return cell_of_.size(); }
    std::size_t n_cells() const { return cell_start_.empty() ? 0 : cell_start_.size() - 1; }
    std::array<int, 3> dims() const { return dims_; }
    double cell_size() const { return cell_size_; }
    std::size_t cell_of(std::size_t i) const { return cell_of_[i]; }

    /// Restricts candidates to stencil particles within `radius` of each
    /// particle at the given positions (Verlet lists). The stencil order is kept.
    void build_neighbors(std::span<const double> positions, const SimBox& box, double radius);
    bool has_neighbors() const { return !nbr_start_.empty(); }

    /// Calls fn(j) for every particle j != i in the stencil of i's cell,
    /// in a fixed order (ascending cell id, then ascending particle id).
    template <typename Fn>
    void for_each_candidate(std::size_t i, Fn&& fn) const
    {
        if (!nbr_start_.empty()) {
            for (std::size_t k = nbr_start_[i]; k < nbr_start_[i + 1]; ++k)
                fn(nbr_[k]);
            return;
        }
        const std::size_t c = cell_of_[i];
        for (std::size_t k = stencil_start_[c]; k < stencil_start_[c + 1]; ++k) {
            const std::size_t nc = stencil_[k];
            for (std::size_t s = cell_start_[nc]; s < cell_start_[nc + 1]; ++s) {
                const std::size_t j = sorted_[s];
                if (j != i)
                    fn(j);
            }
        }
    }

    /// All unordered pairs (i < j) with minimum-image distance <= cutoff.
    std::vector<std::pair<std::size_t, std::size_t>> pairs_within(std::span<const double> positions,
                                                                  const SimBox& box, double cutoff) const;

private:
    std::array<int, 3> dims_{1, 1, 1};
    double cell_size_ = 0.0;
    std::vector<std::size_t> cell_of_;
    std::vector<std::size_t> cell_start_;  // CSR offsets into sorted_
    std::vector<std::size_t> sorted_;
    std::vector<std::size_t> stencil_start_;
    std::vector<std::size_t> stencil_;
    std::vector<std::size_t> nbr_start_;
    std::vector<std::size_t> nbr_;
};

/// Brute-force reference for CellList::pairs_within.
std::vector<std::pair<std::size_t, std::size_t>> pairs_within_all_pairs(std::span<const double> positions,
                                                                        const SimBox& box, double cutoff);

struct PairForceResult
{
    std::vector<double> forces;  // 3M
    double energy = 0.0;
};

/// Pair forces via the cell list, parallel over particles. Each particle's
/// force is summed in cell-stencil order, so the result is independent of
/// the thread count. `table` (optional) supplies the pair potential for the
/// energy; without it energy is reported as 0.
PairForceResult compute_pair_forces(std::span<const double> positions, const SimBox& box,
                                    const PairForceField& field, const CellList& cells,
                                    const PotentialTable* table = nullptr);

/// Serial O(M^2) reference using i < j pairs and Newton's third law.
PairForceResult compute_pair_forces_all_pairs(std::span<const double> positions, const SimBox& box,
                                              const PairForceField& field, const PotentialTable* table = nullptr);

/// Pair-field force model over CG positions (3-D); rebuilds a cell list
/// on every evaluation.
class PairFieldForce final : public ForceModel
{
public:
    PairFieldForce(PairForceField field, SimBox box) : field_(std::move(field)), box_(box) {}
    void evaluate(std::span<const double> positions, double t, std::span<double> forces) const override;
    const PairForceField& field() const { return field_; }

private:
    PairForceField field_;
    SimBox box_;
};

class TDPairFieldForce final : public ForceModel
{
public:
    TDPairFieldForce(TimeDependentPairForceField field, SimBox box) : field_(std::move(field)), box_(box) {}
    void evaluate(std::span<const double> positions, double t, std::span<double> forces) const override;
    const TimeDependentPairForceField& field() const { return field_; }

private:
    TimeDependentPairForceField field_;
    SimBox box_;
};

}  // namespace tdcg
