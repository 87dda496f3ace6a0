// Serial reference vs OpenMP kernels. Prints one line per kernel with both
// timings and the speedup; `--quick` shrinks every workload.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>

#include "tdcg/md.hpp"
#include "tdcg/pair_forces.hpp"
#include "tdcg/parallel.hpp"
#include "tdcg/psfm.hpp"
#include "tdcg/stochastic.hpp"

using namespace tdcg;

namespace {

double time_it(const std::function<void()>& fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial, double parallel)
{
    std::cout << std::left << std::setw(28) << name << std::right << std::fixed << std::setprecision(4)
              << " serial " << std::setw(9) << serial << " s   parallel(" << max_threads() << ") " << std::setw(9)
              << parallel << " s   speedup " << std::setprecision(2) << serial / parallel << "x\n";
}

PairForceField lj_field(double r_lo, double rc)
{
    const KnotGrid grid{r_lo, rc, 400, 1};
    std::vector<double> c(400);
    for (int i = 0; i < 400; ++i) {
        const double r = grid.knot(i), s6 = std::pow(r, -6.0);
        c[static_cast<std::size_t>(i)] = 24.0 * (2.0 * s6 * s6 - s6) / r;
    }
    return PairForceField(SplineBasis1D(grid), c, rc);
}

std::vector<double> cubic_lattice(int n, double a)
{
    std::vector<double> q;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z) {
                q.push_back((x + 0.5) * a);
                q.push_back((y + 0.5) * a);
                q.push_back((z + 0.5) * a);
            }
    return q;
}

}  // namespace

int main(int argc, char** argv)
{
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const int threads = max_threads();

    // pair forces: O(M^2) serial reference vs cell list over threads
    {
        const int n = 10;
        const SimBox box = SimBox::cubic(11.0);
        const auto q = cubic_lattice(n, 1.1);
        const auto field = lj_field(0.6, 2.5);
        const int reps = quick ? 5 : 50;
        const double serial = time_it([&] {
            for (int r = 0; r < reps; ++r)
                compute_pair_forces_all_pairs(q, box, field);
        });
        const double parallel = time_it([&] {
            for (int r = 0; r < reps; ++r)
                compute_pair_forces(q, box, field, CellList(q, box, field.cutoff()));
        });
        report("pair forces M=1000", serial, parallel);
    }

    // ensemble generation on the GLE benchmark workload
    {
        const GLEParams gle;
        const IntegratorSpec spec{Scheme::EulerMaruyama, 1e-3, 5000, 5, 0, true};
        const PathSimulator sim = [&](std::uint64_t seed) {
            IntegratorSpec sp = spec;
            sp.seed = seed;
            return simulate_gle(gle, sp);
        };
        const std::size_t paths = quick ? 200 : 2000;
        const double serial = time_it([&] { generate_ensemble_serial(sim, paths, 7, 1.0); });
        const double parallel = time_it([&] { generate_ensemble(sim, paths, 7, 1.0); });
        report("GLE ensemble", serial, parallel);
    }

    // PSFM accumulation over a small fluid ensemble, 1 thread vs all
    {
        FineReferenceSpec fine;
        fine.box = SimBox::cubic(12.0);
        fine.fcc_cell = 3.0;
        fine.field = lj_field(0.6, 2.5);
        fine.zeta = 0.5;
        fine.skin = 0.3;
        fine.integrator = {Scheme::BAOAB, 0.005, quick ? 200u : 1000u, 10, 0, true};
        fine.n_paths = 2;
        fine.master_seed = 3;
        const Ensemble ens = run_fine_reference(fine);
        std::vector<FrameRef> frames;
        for (std::size_t p = 0; p < ens.n_paths(); ++p)
            for (std::size_t f = 0; f < ens.paths[p].size(); ++f)
                frames.push_back({p, f});
        const PairFitSetup setup{CGMapping::identity(ens.paths.front().masses()), fine.box, 0.0};
        const SplineBasis1D r_basis(KnotGrid{0.8, 2.5, 30, 3});
        const SplineBasis1D t_basis(KnotGrid{0.0, ens.paths.front().times().back(), 12, 1});
        set_num_threads(1);
        const double serial = time_it([&] { accumulate_frames(ens, frames, setup, r_basis, &t_basis); });
        set_num_threads(threads);
        const double parallel = time_it([&] { accumulate_frames(ens, frames, setup, r_basis, &t_basis); });
        report("PSFM accumulation", serial, parallel);
    }

    // CG MD throughput: M = 1000, cutoff <= L/4, 10^4 steps
    {
        MDSystem sys;
        sys.box = SimBox::cubic(11.0);
        sys.positions = cubic_lattice(10, 1.1);
        sys.masses.assign(1000, 1.0);
        sys.field = lj_field(0.6, 2.5);
        sys.zeta0 = 1.0;
        sys.skin = 0.3;
        const IntegratorSpec spec{Scheme::BAOAB, 0.002, quick ? 1000u : 10000u, 100, 11, false};
        const double t = time_it([&] { run_md(sys, spec); });
        std::cout << "CG MD M=1000 " << spec.n_steps << " steps: " << std::fixed << std::setprecision(2) << t
                  << " s on " << threads << " thread(s)\n";
    }
    return 0;
}
