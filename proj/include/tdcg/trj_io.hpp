#pragma once

#include <filesystem>

#include "tdcg/trajectory.hpp"

namespace tdcg {

/// TRJ1 layout (all little-endian):
///   "TRJ1" | u32 version=1 | u32 D | u64 M | u64 n_frames | f64 dt_nominal |
///   u8 has_forces | u8[7] padding | M x f64 masses |
///   per frame: f64 time, D*M f64 positions, D*M f64 momenta, [D*M f64 forces]
inline constexpr std::uint32_t kTrj1Version = 1;
inline constexpr std::size_t kTrj1HeaderBytes = 44;

/// Validates `traj` first; nothing is written if an invariant fails.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& destination);
Trajectory read_trajectory(const std::filesystem::path& source);

/// Ensembles are stored as one TRJ1 file per path plus a small text index
/// (`ensemble.txt`: beta and the path file names) inside `directory`.
void write_ensemble(const Ensemble& ens, const std::filesystem::path& directory);
Ensemble read_ensemble(const std::filesystem::path& directory);

/// Rows `time,particle,axis,q,p,f` (f empty when forces are absent).
void export_trajectory_csv(const Trajectory& traj, const std::filesystem::path& destination);

}  // namespace tdcg
