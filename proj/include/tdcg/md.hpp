#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tdcg/basis.hpp"
#include "tdcg/geometry.hpp"
#include "tdcg/stochastic.hpp"
#include "tdcg/trajectory.hpp"

namespace tdcg {

using AnyPairField = std::variant<PairForceField, TimeDependentPairForceField>;

/// Frozen field at time t (static fields are returned unchanged).
PairForceField field_at(const AnyPairField& field, double t);
double field_cutoff(const AnyPairField& field);

/// Many-particle Langevin system in 3-D with a pair force field.
struct MDSystem
{
    SimBox box = SimBox::open();
    std::vector<double> positions;  // 3M
    std::vector<double> momenta;    // 3M; empty means Maxwell-Boltzmann draw from the run seed
    std::vector<double> masses;     // M
    AnyPairField field;
    double zeta0 = 0.0;
    double beta = 1.0;
    /// Noise amplitude; derived from (zeta0, beta) by the FDT when unset.
    std::optional<double> sigma0;
    /// Cell margin; 0 rebuilds the cell list every step.
    double skin = 0.0;
    ForceRecord record = ForceRecord::Conservative;

    std::size_t particles() const { return masses.size(); }
    double sigma() const;
    void validate() const;
};

struct MDRunLog
{
    std::vector<double> times;
    std::vector<double> kinetic;
    std::vector<double> potential;
    std::size_t rebuilds = 0;
    /// Relative total-energy drift that triggers a message for runs
    /// without friction and noise.
    double energy_tolerance = 1e-4;
    std::vector<std::string> messages;

    double max_relative_drift() const;
};

/// Momenta with per-component variance m/beta, drawn from `seed` at counter step 0.
std::vector<double> maxwell_boltzmann(const std::vector<double>& masses, double beta, std::uint64_t seed);

/// 4 sites per conventional cell, tiled over the box.
std::vector<double> init_fcc(const SimBox& box, double cell_length);

/// Integrates the system; recorded forces follow `system.record`. Energies
/// are logged at every recorded frame when `log` is given.
Trajectory run_md(const MDSystem& system, const IntegratorSpec& spec, MDRunLog* log = nullptr);

/// Transient ground-truth data: FCC start, known pair field, Langevin thermostat.
struct FineReferenceSpec
{
    SimBox box = SimBox::cubic(10.0);
    double fcc_cell = 2.0;
    PairForceField field;
    double zeta = 1.0;
    double beta = 1.0;
    double mass = 1.0;
    double skin = 0.0;
    ForceRecord record = ForceRecord::Total;
    IntegratorSpec integrator;
    /// Unrecorded steps before `integrator` starts; recorded times restart at zero.
    std::size_t equilibration_steps = 0;
    std::size_t n_paths = 1;
    std::uint64_t master_seed = 0;
};

Ensemble run_fine_reference(const FineReferenceSpec& spec);

}  // namespace tdcg
