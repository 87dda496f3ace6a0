#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "tdcg/friction.hpp"
#include "tdcg/geometry.hpp"
#include "tdcg/trajectory.hpp"

namespace tdcg {

struct RdfSpec
{
    double r_max = 1.0;
    std::size_t n_bins = 50;
    int dim = 3;
    SimBox box = SimBox::open();
    /// Number density used for normalization; <= 0 means M / box volume.
    double density = 0.0;

    void validate() const;
};

struct RdfResult
{
    std::vector<double> centers;
    std::vector<double> g;
    std::vector<std::uint64_t> counts;  // ordered pairs per bin, summed over frames
    double density = 0.0;
    std::size_t n_frames = 0;
};

/// Pair-distance histogram over ordered pairs, bin k normalized by
/// n_frames * M * rho * V_shell(k).
RdfResult rdf(std::span<const std::vector<double>> frames, const RdfSpec& spec);

struct Moments
{
    std::vector<double> times;
    std::size_t width = 0;
    /// frame-major, width entries per frame
    std::vector<double> mean_q, var_q, mean_p, var_p;
};

/// Unbiased per-time sample mean and variance over paths.
Moments ensemble_moments(const Ensemble& ens);

/// int_0^{t_upper} C(t) dt by trapezoid.
double diffusion_coefficient(const CorrelationSeries& cvv, double t_upper);

/// CSV `r,g`.
void export_rdf_csv(const RdfResult& r, const std::filesystem::path& dest);
/// CSV `t,mean_q,var_q,mean_p,var_p` (coordinate-averaged when width > 1).
void export_moments_csv(const Moments& m, const std::filesystem::path& dest);

}  // namespace tdcg
