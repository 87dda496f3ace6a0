#pragma once

#include <cstdint>
#include <vector>

#include "tdcg/basis.hpp"
#include "tdcg/cg_mapping.hpp"
#include "tdcg/design.hpp"
#include "tdcg/force_model.hpp"
#include "tdcg/geometry.hpp"
#include "tdcg/trajectory.hpp"

namespace tdcg {

/// Shared inputs of the pair-force fits.
struct PairFitSetup
{
    CGMapping mapping;
    SimBox box = SimBox::open();
    double ridge = 0.0;
};

/// Adds one frame with a time-independent basis.
void accumulate(DesignAccumulator& acc, const FrameView& frame, int dim, const CGMapping& mapping,
                const SimBox& box, const SplineBasis1D& basis);
/// Adds one frame with time weights chi_b(t); t must lie in the time basis domain.
void accumulate(DesignAccumulator& acc, const FrameView& frame, int dim, const CGMapping& mapping,
                const SimBox& box, const TensorBasis2D& basis, double t);

/// Frames (path, frame) accumulated in parallel batches and merged in
/// (path, frame) order; the result does not depend on the thread count.
struct FrameRef
{
    std::size_t path = 0;
    std::size_t frame = 0;
};
DesignAccumulator accumulate_frames(const Ensemble& ens, const std::vector<FrameRef>& frames,
                                    const PairFitSetup& setup, const SplineBasis1D& r_basis,
                                    const SplineBasis1D* t_basis = nullptr);

/// phi* over every frame of every path.
FitResult fit_equilibrium(const Ensemble& ens, const PairFitSetup& setup, const SplineBasis1D& basis);
/// phi*_t from the frame nearest to t in each path (within dt/2).
FitResult fit_instant(const Ensemble& ens, double t, const PairFitSetup& setup, const SplineBasis1D& basis);
/// theta* over every frame with the tensor basis; coefficient s = d * N_b + b.
FitResult fit_time_dependent(const Ensemble& ens, const PairFitSetup& setup, const TensorBasis2D& basis);

/// Index of the frame within dt/2 of t; ArgumentError naming t otherwise.
std::size_t nearest_frame(const Trajectory& traj, double t);

/// F(Q, t) = -D(t; theta1) B(Q; theta2) for one-dimensional single-particle
/// data. Arguments outside a basis domain are clamped to its edge.
class SeparableForce final : public ForceModel
{
public:
    SeparableForce(SplineBasis1D d_basis, std::vector<double> theta1, SplineBasis1D b_basis,
                   std::vector<double> theta2);

    double d_factor(double t) const;
    double b_factor(double q) const;
    double operator()(double q, double t) const { return -d_factor(t) * b_factor(q); }
    void evaluate(std::span<const double> positions, double t, std::span<double> forces) const override;

    const std::vector<double>& theta1() const { return theta1_; }
    const std::vector<double>& theta2() const { return theta2_; }
    const SplineBasis1D& d_basis() const { return d_basis_; }
    const SplineBasis1D& b_basis() const { return b_basis_; }

private:
    SplineBasis1D d_basis_;
    std::vector<double> theta1_;
    SplineBasis1D b_basis_;
    std::vector<double> theta2_;
};

struct SeparableFit
{
    std::vector<double> theta1;
    std::vector<double> theta2;
    /// rms residual after initialization, then after every sweep.
    std::vector<double> residual_trace;
    int sweeps = 0;
    bool converged = false;
    std::size_t n_rows = 0;
    std::size_t n_excluded = 0;

    SeparableForce force(const SplineBasis1D& d_basis, const SplineBasis1D& b_basis) const
    {
        return SeparableForce(d_basis, theta1, b_basis, theta2);
    }
};

/// Alternating least squares for -D(t) B(Q); ||theta2|| = 1 after each sweep.
/// Frame times are clamped into the d_basis domain; samples with Q outside
/// b_basis are counted as excluded. DegenerateError when the static
/// initialization is zero.
SeparableFit fit_separable(const Ensemble& ens, const SplineBasis1D& d_basis, const SplineBasis1D& b_basis,
                           int als_iters, double tol, double ridge = 0.0);

}  // namespace tdcg
