#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "tdcg/errors.hpp"
#include "tdcg/md.hpp"
#include "tdcg/observables.hpp"
#include "tdcg/pair_forces.hpp"
#include "tdcg/parallel.hpp"
#include "tdcg/rng.hpp"

using namespace tdcg;

namespace {

PairForceField sampled_field(const std::function<double(double)>& f, double lo, double hi, int knots)
{
    const KnotGrid grid{lo, hi, knots, 1};
    std::vector<double> c;
    for (int i = 0; i < knots; ++i)
        c.push_back(f(grid.knot(i)));
    return PairForceField(SplineBasis1D(grid), std::move(c), hi);
}

PairForceField lj_field(double rc = 2.5)
{
    auto lj = [](double r) {
        const double s6 = std::pow(1.0 / r, 6);
        return 24.0 * (2.0 * s6 * s6 - s6) / r;
    };
    const double shift = lj(rc);
    return sampled_field([&](double r) { return lj(r) - shift; }, 0.6, rc, 300);
}

std::vector<double> random_positions(std::size_t m, double length, std::uint64_t seed)
{
    std::vector<double> q(3 * m);
    for (std::size_t i = 0; i < q.size(); ++i)
        q[i] = length * static_cast<double>(mix64(seed * 7919 + i) >> 11) * 0x1.0p-53;
    return q;
}

// random positions with a minimum separation, so the LJ core stays finite
std::vector<double> spaced_positions(std::size_t m, double length, double min_dist, std::uint64_t seed)
{
    const SimBox box = SimBox::cubic(length);
    std::vector<double> q;
    std::uint64_t k = 0;
    while (q.size() < 3 * m) {
        std::array<double, 3> x{};
        for (auto& v : x)
            v = length * static_cast<double>(mix64(seed * 104729 + k++) >> 11) * 0x1.0p-53;
        bool ok = true;
        std::array<double, 3> d{};
        for (std::size_t j = 0; ok && j < q.size() / 3; ++j)
            ok = pair_delta(box, 3, std::span<const double>(x), std::span<const double>(q).subspan(3 * j, 3), d) >=
                 min_dist;
        if (ok)
            q.insert(q.end(), x.begin(), x.end());
    }
    return q;
}

double momentum_variance(const Ensemble& ens, std::size_t first_frame, const std::vector<double>& masses)
{
    double ss = 0.0;
    std::size_t n = 0;
    for (const auto& tr : ens.paths)
        for (std::size_t f = first_frame; f < tr.size(); ++f) {
            const auto p = tr.momenta(f);
            for (std::size_t i = 0; i < p.size(); ++i) {
                ss += p[i] * p[i] / masses[i / 3];
                ++n;
            }
        }
    return ss / static_cast<double>(n);
}

}  // namespace

TEST_CASE("FCC lattice")
{
    const double a = 1.7;
    CHECK(init_fcc(SimBox::cubic(2 * a), a).size() == 3 * 32);
    const auto unit = init_fcc(SimBox::cubic(a), a);
    REQUIRE(unit.size() == 12);
    const std::vector<double> expected{0, 0, 0, 0.5, 0.5, 0, 0.5, 0, 0.5, 0, 0.5, 0.5};
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(unit[i] == doctest::Approx(expected[i] * a).epsilon(1e-15));

    for (double cell : {1.0, 2.3, 3.0}) {
        const SimBox box = SimBox::cubic(3 * cell);
        const auto q = init_fcc(box, cell);
        double nearest = 1e300;
        std::array<double, 3> d{};
        for (std::size_t i = 0; i < q.size() / 3; ++i)
            for (std::size_t j = i + 1; j < q.size() / 3; ++j)
                nearest = std::min(nearest, pair_delta(box, 3, std::span<const double>(q).subspan(3 * i, 3),
                                                       std::span<const double>(q).subspan(3 * j, 3), d));
        CHECK(nearest == doctest::Approx(cell / std::sqrt(2.0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(init_fcc(SimBox::cubic(5.0), 2.0), ArgumentError);
    CHECK_THROWS_AS(init_fcc(SimBox::cubic(5.0), 0.0), ArgumentError);
}

TEST_CASE("cell list completeness")
{
    for (double length : {10.0, 6.0}) {
        const SimBox box = SimBox::cubic(length);
        for (std::uint64_t s = 0; s < 100; ++s) {
            const auto q = random_positions(120, length, s + 1);
            const CellList cells(q, box, 2.5);
            const auto expected = pairs_within_all_pairs(q, box, 2.5);
            CHECK(cells.pairs_within(q, box, 2.5) == expected);
            CellList verlet = cells;
            verlet.build_neighbors(q, box, 2.5);
            CHECK(verlet.pairs_within(q, box, 2.5) == expected);
        }
    }
    SUBCASE("open box")
    {
        const auto q = random_positions(150, 7.0, 99);
        const CellList cells(q, SimBox::open(), 1.5);
        CHECK(cells.pairs_within(q, SimBox::open(), 1.5) == pairs_within_all_pairs(q, SimBox::open(), 1.5));
        for (std::size_t i = 0; i < cells.particles(); ++i)
            CHECK(cells.cell_of(i) < cells.n_cells());
    }
}

TEST_CASE("pair forces")
{
    SUBCASE("unit force magnitude on a dimer obeys Newton's third law")
    {
        const auto ff = sampled_field([](double) { return 1.0; }, 0.5, 2.0, 4);
        const std::vector<double> q{0.0, 0.0, 0.0, 0.6, 0.8, 0.0};
        const auto res = compute_pair_forces(q, SimBox::open(), ff, CellList(q, SimBox::open(), 2.0));
        CHECK(res.forces[0] == doctest::Approx(-0.6).epsilon(1e-15));
        CHECK(res.forces[1] == doctest::Approx(-0.8).epsilon(1e-15));
        CHECK(res.forces[3] == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(res.forces[4] == doctest::Approx(0.8).epsilon(1e-15));
        for (int a = 0; a < 3; ++a)
            CHECK(res.forces[a] + res.forces[3 + a] == 0.0);
    }

    SUBCASE("pairs beyond the cutoff give zero force and energy")
    {
        const auto ff = lj_field();
        const std::vector<double> q{0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 3.0, 0.0};
        const PotentialTable table(ff);
        const auto res = compute_pair_forces(q, SimBox::open(), ff, CellList(q, SimBox::open(), 2.5), &table);
        for (double f : res.forces)
            CHECK(f == 0.0);
        CHECK(res.energy == 0.0);
    }

    SUBCASE("cell-list and Verlet forces match the all-pairs reference")
    {
        const SimBox box = SimBox::cubic(9.0);
        const auto q = spaced_positions(200, 9.0, 0.8, 3);
        const auto ff = lj_field();
        const PotentialTable table(ff);
        const auto ref = compute_pair_forces_all_pairs(q, box, ff, &table);
        CellList cells(q, box, 2.8);
        const auto a = compute_pair_forces(q, box, ff, cells, &table);
        cells.build_neighbors(q, box, 2.8);
        const auto b = compute_pair_forces(q, box, ff, cells, &table);
        double scale = 0.0;
        for (double f : ref.forces)
            scale = std::max(scale, std::abs(f));
        for (std::size_t i = 0; i < ref.forces.size(); ++i) {
            CHECK(std::abs(a.forces[i] - ref.forces[i]) <= 1e-12 * scale);
            CHECK(b.forces[i] == a.forces[i]);
        }
        CHECK(a.energy == doctest::Approx(ref.energy).epsilon(1e-12));
    }

    SUBCASE("overlapping particles name the pair")
    {
        const auto ff = lj_field();
        const std::vector<double> q{0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 1.5, 0.0, 0.0};
        try {
            compute_pair_forces(q, SimBox::open(), ff, CellList(q, SimBox::open(), 2.5));
            FAIL("expected a singularity error");
        } catch (const SingularityError& e) {
            CHECK(e.first() == 1);
            CHECK(e.second() == 2);
        }
    }

    SUBCASE("cell size below the cutoff is rejected")
    {
        const auto q = random_positions(10, 9.0, 1);
        CHECK_THROWS_AS(compute_pair_forces(q, SimBox::cubic(9.0), lj_field(), CellList(q, SimBox::cubic(9.0), 2.0)),
                        ArgumentError);
    }
}

TEST_CASE("MD integration")
{
    SUBCASE("harmonic dimer conserves energy under BAOAB without friction")
    {
        MDSystem sys;
        sys.positions = {0.0, 0.0, 0.0, 1.2, 0.0, 0.0};
        sys.momenta.assign(6, 0.0);
        sys.masses = {1.0, 1.0};
        sys.field = sampled_field([](double r) { return -(r - 1.0); }, 0.5, 2.0, 4);
        sys.zeta0 = 0.0;
        MDRunLog log;
        const auto tr = run_md(sys, {Scheme::BAOAB, 0.01, 100000, 1000, 1, false}, &log);
        CHECK(tr.size() == 101);
        CHECK(log.max_relative_drift() <= 1e-4);
        CHECK(log.messages.empty());
        const double r_end = std::abs(tr.positions(100)[3] - tr.positions(100)[0]);
        CHECK(r_end > 0.79);
        CHECK(r_end < 1.21);
    }

    SUBCASE("open-box cluster conserves total momentum")
    {
        MDSystem sys;
        sys.positions = init_fcc(SimBox::cubic(3.4), 1.7);
        for (std::size_t i = 0; i < sys.positions.size(); ++i)
            sys.positions[i] += 0.05 * CounterNormal(4)(0, i);
        sys.masses.assign(sys.positions.size() / 3, 1.0);
        sys.field = lj_field();
        sys.zeta0 = 0.0;
        sys.beta = 2.0;
        const auto tr = run_md(sys, {Scheme::BAOAB, 0.002, 10000, 10000, 8, false});
        std::array<double, 3> p0{}, p1{};
        double scale = 0.0;
        for (std::size_t i = 0; i < tr.width(); ++i) {
            p0[i % 3] += tr.momenta(0)[i];
            p1[i % 3] += tr.momenta(1)[i];
            scale += std::abs(tr.momenta(0)[i]);
        }
        for (int a = 0; a < 3; ++a)
            CHECK(std::abs(p1[a] - p0[a]) <= 1e-10 * scale);
    }

    SUBCASE("FDT thermostat gives momentum variance m / beta")
    {
        MDSystem sys;
        sys.box = SimBox::cubic(8.0);
        sys.positions = init_fcc(sys.box, 2.0);
        sys.masses.assign(sys.positions.size() / 3, 1.5);
        sys.field = lj_field();
        sys.zeta0 = 1.0;
        sys.beta = 2.0;
        sys.skin = 0.3;
        const auto run = [&](std::uint64_t seed) { return run_md(sys, {Scheme::BAOAB, 0.005, 8000, 100, seed, false}); };
        const auto ens = generate_ensemble(run, 4, 12, sys.beta);
        CHECK(momentum_variance(ens, 20, sys.masses) == doctest::Approx(1.0 / sys.beta).epsilon(0.05));
    }

    SUBCASE("trajectories do not depend on the thread count")
    {
        MDSystem sys;
        sys.box = SimBox::cubic(8.0);
        sys.positions = init_fcc(sys.box, 2.0);
        sys.masses.assign(sys.positions.size() / 3, 1.0);
        sys.field = lj_field();
        sys.zeta0 = 0.5;
        sys.skin = 0.3;
        const IntegratorSpec spec{Scheme::BAOAB, 0.005, 400, 20, 5, true};
        set_num_threads(1);
        const auto a = run_md(sys, spec);
        set_num_threads(4);
        const auto b = run_md(sys, spec);
        set_num_threads(0);
        CHECK(bitwise_equal(a, b));
        sys.skin = 0.0;
        const auto c = run_md(sys, spec);
        double worst = 0.0;
        for (std::size_t f = 0; f < a.size(); ++f)
            for (std::size_t i = 0; i < a.width(); ++i)
                worst = std::max(worst, std::abs(a.positions(f)[i] - c.positions(f)[i]));
        CHECK(worst < 1e-9);
    }

    SUBCASE("time-dependent field is evaluated at the step time")
    {
        const SplineBasis1D rb(KnotGrid{0.5, 2.0, 4, 1});
        const SplineBasis1D tb(KnotGrid{0.0, 1.0, 2, 1});
        // f(r, t) = t, a repulsion switched on linearly in time
        const TimeDependentPairForceField td(TensorBasis2D(rb, tb), {0, 1, 0, 1, 0, 1, 0, 1}, 2.0, 1.0);
        MDSystem sys;
        sys.positions = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0};
        sys.momenta.assign(6, 0.0);
        sys.masses = {1.0, 1.0};
        sys.field = td;
        const auto tr = run_md(sys, {Scheme::BAOAB, 1e-3, 100, 100, 1, true});
        // p_x of particle 2 after t = 0.1 is the time integral of t, i.e. 0.005
        CHECK(tr.momenta(1)[3] == doctest::Approx(0.005).epsilon(1e-6));
        CHECK(tr.forces(1)[3] == doctest::Approx(0.1).epsilon(1e-12));
    }

    SUBCASE("invalid systems")
    {
        MDSystem sys;
        CHECK_THROWS_AS(sys.validate(), ArgumentError);
        sys.positions = {0.0, 0.0, 0.0};
        sys.masses = {1.0};
        sys.field = lj_field();
        sys.box = SimBox::cubic(5.0);
        sys.skin = 0.5;
        CHECK_THROWS_AS(sys.validate(), ArgumentError);
        sys.positions = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
        sys.masses = {1.0, 1.0};
        sys.box = SimBox::cubic(8.0);
        CHECK_THROWS_AS(run_md(sys, {Scheme::BAOAB, 0.01, 10, 1, 1, false}), SingularityError);
    }
}

TEST_CASE("fine reference")
{
    FineReferenceSpec spec;
    spec.box = SimBox::cubic(9.0);
    spec.fcc_cell = 3.0;
    spec.field = lj_field();
    spec.mass = 1.0;
    spec.skin = 0.3;
    spec.record = ForceRecord::Conservative;
    spec.master_seed = 21;

    SUBCASE("strong friction thermalizes momenta to m / beta")
    {
        spec.zeta = 5.0;
        spec.beta = 2.0;
        spec.n_paths = 2;
        spec.integrator = {Scheme::BAOAB, 0.005, 2000, 20, 0, true};
        const auto ens = run_fine_reference(spec);
        CHECK(ens.n_paths() == 2);
        CHECK(ens.paths[0].has_forces());
        const std::vector<double> masses(ens.paths[0].particles(), 1.0);
        CHECK(momentum_variance(ens, 20, masses) == doctest::Approx(0.5).epsilon(0.05));
    }

    SUBCASE("attractive field: the first RDF peak grows from the dilute lattice")
    {
        spec.zeta = 1.0;
        spec.beta = 1.5;
        spec.n_paths = 4;
        spec.integrator = {Scheme::BAOAB, 0.005, 4000, 1000, 0, true};
        const auto ens = run_fine_reference(spec);
        RdfSpec rs;
        rs.r_max = 4.0;
        rs.n_bins = 40;
        rs.box = spec.box;
        auto peak = [&](std::size_t f) {
            std::vector<std::vector<double>> frames;
            for (const auto& tr : ens.paths) {
                const auto q = tr.positions(f);
                frames.emplace_back(q.begin(), q.end());
            }
            const auto g = rdf(frames, rs);
            double best = 0.0;
            for (std::size_t k = 0; k < g.g.size(); ++k)
                if (g.centers[k] > 0.9 && g.centers[k] < 1.6)
                    best = std::max(best, g.g[k]);
            return best;
        };
        CHECK(peak(0) == 0.0);
        CHECK(peak(2) > 1.0);
        CHECK(peak(4) > peak(1));
    }

    SUBCASE("warm-up steps shift the recorded window")
    {
        spec.zeta = 1.0;
        spec.beta = 1.0;
        spec.n_paths = 1;
        spec.integrator = {Scheme::BAOAB, 0.005, 100, 10, 0, true};
        const auto cold = run_fine_reference(spec);
        spec.equilibration_steps = 200;
        const auto warm = run_fine_reference(spec);
        CHECK(warm.paths[0].size() == cold.paths[0].size());
        CHECK(warm.paths[0].times() == cold.paths[0].times());
        CHECK(warm.paths[0].positions(0)[0] != cold.paths[0].positions(0)[0]);
    }
}
