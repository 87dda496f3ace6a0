#include "tdcg/pair_forces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tdcg/errors.hpp"

namespace tdcg {

namespace {

constexpr double kOverlap = 1e-12;

}  // namespace

CellList::CellList(std::span<const double> positions, const SimBox& box, double cell_size)
    : cell_size_(cell_size)
{
    if (positions.size() % 3 != 0)
        throw ArgumentError("cell list expects 3-D positions");
    if (!(cell_size > 0.0))
        throw ArgumentError("cell size must be positive");
    const std::size_t n = positions.size() / 3;

    std::array<double, 3> origin{0.0, 0.0, 0.0}, width{};
    for (int a = 0; a < 3; ++a) {
        const auto aa = static_cast<std::size_t>(a);
        if (box.periodic()) {
            width[aa] = box.lengths[aa];
        } else {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = 0; i < n; ++i) {
                lo = std::min(lo, positions[3 * i + aa]);
                hi = std::max(hi, positions[3 * i + aa]);
            }
            if (n == 0)
                lo = hi = 0.0;
            origin[aa] = lo;
            width[aa] = hi - lo;
        }
        dims_[aa] = std::max(1, static_cast<int>(std::floor(width[aa] / cell_size)));
    }

    const std::size_t nc = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    auto cell_index = [&](int x, int y, int z) {
        return static_cast<std::size_t>((z * dims_[1] + y) * dims_[0] + x);
    };

    cell_of_.resize(n);
    std::vector<std::size_t> counts(nc + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a) {
            const auto aa = static_cast<std::size_t>(a);
            double x = positions[3 * i + aa];
            if (box.periodic())
                x = box.wrap_position(x, a);
            const double s = (x - origin[aa]) / width[aa] * dims_[aa];
            c[aa] = std::clamp(width[aa] > 0.0 ? static_cast<int>(std::floor(s)) : 0, 0, dims_[aa] - 1);
        }
        cell_of_[i] = cell_index(c[0], c[1], c[2]);
        ++counts[cell_of_[i] + 1];
    }
    cell_start_.assign(nc + 1, 0);
    for (std::size_t c = 0; c < nc; ++c)
        cell_start_[c + 1] = cell_start_[c] + counts[c + 1];
    sorted_.resize(n);
    std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i)
        sorted_[fill[cell_of_[i]]++] = i;

    stencil_start_.assign(nc + 1, 0);
    std::vector<std::size_t> nb;
    for (int z = 0; z < dims_[2]; ++z)
        for (int y = 0; y < dims_[1]; ++y)
            for (int x = 0; x < dims_[0]; ++x) {
                nb.clear();
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            std::array<int, 3> c{x + dx, y + dy, z + dz};
                            bool inside = true;
                            for (int a = 0; a < 3; ++a) {
                                auto& v = c[static_cast<std::size_t>(a)];
                                const int d = dims_[static_cast<std::size_t>(a)];
                                if (box.periodic())
                                    v = (v % d + d) % d;
                                else if (v < 0 || v >= d)
                                    inside = false;
                            }
                            if (inside)
                                nb.push_back(cell_index(c[0], c[1], c[2]));
                        }
                std::sort(nb.begin(), nb.end());
                nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
                const std::size_t self = cell_index(x, y, z);
                stencil_start_[self + 1] = nb.size();
                stencil_.insert(stencil_.end(), nb.begin(), nb.end());
            }
    for (std::size_t c = 0; c < nc; ++c)
        stencil_start_[c + 1] += stencil_start_[c];
}

void CellList::build_neighbors(std::span<const double> positions, const SimBox& box, double radius)
{
    if (positions.size() != 3 * particles())
        throw ArgumentError("cell list was built for a different particle count");
    nbr_start_.clear();
    nbr_.clear();
    std::vector<std::size_t> start(particles() + 1, 0);
    std::vector<std::size_t> list;
    const double r2max = radius * radius;
    for (std::size_t i = 0; i < particles(); ++i) {
        const double* qi = positions.data() + 3 * i;
        for_each_candidate(i, [&](std::size_t j) {
            const double* qj = positions.data() + 3 * j;
            double r2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double d = box.wrap_delta(qi[a] - qj[a], a);
                r2 += d * d;
            }
            if (r2 <= r2max)
                list.push_back(j);
        });
        start[i + 1] = list.size();
    }
    nbr_start_ = std::move(start);
    nbr_ = std::move(list);
}

std::vector<std::pair<std::size_t, std::size_t>> CellList::pairs_within(std::span<const double> positions,
                                                                        const SimBox& box, double cutoff) const
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::array<double, 3> d{};
    for (std::size_t i = 0; i < particles(); ++i)
        for_each_candidate(i, [&](std::size_t j) {
            if (j > i && pair_delta(box, 3, positions.subspan(3 * i, 3), positions.subspan(3 * j, 3), d) <= cutoff)
                out.emplace_back(i, j);
        });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_within_all_pairs(std::span<const double> positions,
                                                                        const SimBox& box, double cutoff)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::array<double, 3> d{};
    const std::size_t n = positions.size() / 3;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (pair_delta(box, 3, positions.subspan(3 * i, 3), positions.subspan(3 * j, 3), d) <= cutoff)
                out.emplace_back(i, j);
    return out;
}

PairForceResult compute_pair_forces(std::span<const double> positions, const SimBox& box,
                                    const PairForceField& field, const CellList& cells, const PotentialTable* table)
{
    const std::size_t n = positions.size() / 3;
    if (cells.particles() != n)
        throw ArgumentError("cell list was built for a different particle count");
    if (cells.cell_size() < field.cutoff())
        throw ArgumentError("cell size is smaller than the force cutoff");
    if (box.periodic() && field.cutoff() > 0.5 * box.min_length())
        throw ArgumentError("cutoff exceeds half the box length");

    PairForceResult out;
    out.forces.assign(3 * n, 0.0);
    std::vector<double> energy(table ? n : 0, 0.0);
    const double rc = field.cutoff();
    const double rc2 = rc * rc;
    const auto ni = static_cast<std::int64_t>(n);
    std::int64_t bad_i = ni, bad_j = 0;

#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < ni; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        std::array<double, 3> d{};
        double fx = 0.0, fy = 0.0, fz = 0.0, e = 0.0;
        const double* qi = positions.data() + 3 * i;
        cells.for_each_candidate(i, [&](std::size_t j) {
            const double* qj = positions.data() + 3 * j;
            double r2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                d[static_cast<std::size_t>(a)] = box.wrap_delta(qi[a] - qj[a], a);
                r2 += d[static_cast<std::size_t>(a)] * d[static_cast<std::size_t>(a)];
            }
            if (r2 > rc2)
                return;
            const double r = std::sqrt(r2);
            if (r > rc)
                return;
            if (r < kOverlap) {
#pragma omp critical(tdcg_overlap)
                if (ii < bad_i) {
                    bad_i = ii;
                    bad_j = static_cast<std::int64_t>(j);
                }
                return;
            }
            const double f = field.eval_unchecked(r) / r;
            fx += f * d[0];
            fy += f * d[1];
            fz += f * d[2];
            if (table)
                e += 0.5 * (*table)(r);
        });
        out.forces[3 * i] = fx;
        out.forces[3 * i + 1] = fy;
        out.forces[3 * i + 2] = fz;
        if (table)
            energy[i] = e;
    }
    if (bad_i < ni)
        throw SingularityError(static_cast<std::size_t>(std::min(bad_i, bad_j)),
                               static_cast<std::size_t>(std::max(bad_i, bad_j)));
    for (double e : energy)
        out.energy += e;
    return out;
}

PairForceResult compute_pair_forces_all_pairs(std::span<const double> positions, const SimBox& box,
                                              const PairForceField& field, const PotentialTable* table)
{
    const std::size_t n = positions.size() / 3;
    PairForceResult out;
    out.forces.assign(3 * n, 0.0);
    std::array<double, 3> d{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = pair_delta(box, 3, positions.subspan(3 * i, 3), positions.subspan(3 * j, 3), d);
            if (r > field.cutoff())
                continue;
            if (r < kOverlap)
                throw SingularityError(i, j);
            const double f = field.eval_unchecked(r) / r;
            for (std::size_t a = 0; a < 3; ++a) {
                out.forces[3 * i + a] += f * d[a];
                out.forces[3 * j + a] -= f * d[a];
            }
            if (table)
                out.energy += (*table)(r);
        }
    return out;
}

void PairFieldForce::evaluate(std::span<const double> positions, double, std::span<double> forces) const
{
    const CellList cells(positions, box_, field_.cutoff());
    const auto res = compute_pair_forces(positions, box_, field_, cells);
    std::copy(res.forces.begin(), res.forces.end(), forces.begin());
}

void TDPairFieldForce::evaluate(std::span<const double> positions, double t, std::span<double> forces) const
{
    const auto frozen = field_.at_time(t);
    const CellList cells(positions, box_, frozen.cutoff());
    const auto res = compute_pair_forces(positions, box_, frozen, cells);
    std::copy(res.forces.begin(), res.forces.end(), forces.begin());
}

}  // namespace tdcg
