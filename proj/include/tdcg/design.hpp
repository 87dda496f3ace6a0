#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tdcg/basis.hpp"
#include "tdcg/cg_mapping.hpp"
#include "tdcg/dd.hpp"
#include "tdcg/geometry.hpp"
#include "tdcg/trajectory.hpp"

namespace tdcg {

/// Sufficient statistics of one frame for an r-only pair basis: the Gram
/// matrix G = R^T R of the frame's rows, the projection R^T F, and sum F^2.
struct FrameStats
{
    int n_r = 0;
    std::vector<DD> gram;  // n_r x n_r, row-major, upper triangle filled
    std::vector<DD> proj;  // n_r
    DD sum_sq;
    std::size_t rows = 0;
    std::size_t excluded = 0;  // unordered CG pairs outside the basis domain
};

/// Builds the rows J_{I,a;d} = sum_{J != I} psi_d(r_IJ) (Q_I - Q_J)_a / r_IJ
/// of one frame (CG-mapped) and reduces them to FrameStats.
FrameStats frame_stats(const FrameView& frame, int dim, const CGMapping& mapping, const SimBox& box,
                       const SplineBasis1D& r_basis);

/// Dense rows of one frame (D*M x N_d) and their targets; the literal
/// design matrix used as a reference for the streaming path.
struct DenseRows
{
    Eigen::MatrixXd rows;
    Eigen::VectorXd targets;
    std::size_t excluded = 0;
};
DenseRows frame_rows(const FrameView& frame, int dim, const CGMapping& mapping, const SimBox& box,
                     const SplineBasis1D& r_basis);

/// Streaming normal equations A = J^T J, b = J^T F with extended-precision sums.
class DesignAccumulator
{
public:
    DesignAccumulator() = default;
    /// K = n_r * n_t; n_t = 1 for time-independent bases.
    explicit DesignAccumulator(int n_r, int n_t = 1);

    int size() const { return n_r_ * n_t_; }
    int n_r() const { return n_r_; }
    int n_t() const { return n_t_; }
    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_excluded() const { return n_excluded_; }

    /// Adds a frame's statistics with time weights chi (empty means n_t == 1).
    void add(const FrameStats& stats, const SparseBasisValues* chi = nullptr);
    /// Adds one explicit row with target F.
    void add_row(std::span<const int> index, std::span<const double> value, double target);
    /// Counts an excluded sample without a row.
    void add_excluded(std::size_t n) { n_excluded_ += n; }
    void merge(const DesignAccumulator& other);

    Eigen::MatrixXd A() const;
    Eigen::VectorXd b() const;
    double sum_sq_F() const { return sum_sq_.value(); }

    /// (sum F^2 - 2 theta^T b + theta^T A theta) / n_rows in extended precision.
    double objective(const Eigen::VectorXd& theta) const;
    /// b - A theta in extended precision.
    Eigen::VectorXd residual_rhs(const Eigen::VectorXd& theta) const;

private:
    DD& a(int i, int j) { return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(size()) + j]; }
    const DD& a(int i, int j) const
    {
        return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(size()) + j];
    }

    int n_r_ = 0;
    int n_t_ = 1;
    std::vector<DD> a_;  // upper triangle used
    std::vector<DD> b_;
    DD sum_sq_;
    std::size_t n_rows_ = 0;
    std::size_t n_excluded_ = 0;
};

struct FitResult
{
    Eigen::VectorXd coeffs;
    double rms_residual = 0.0;
    double condition_estimate = 0.0;
    double regularization_used = 0.0;
    bool eigen_fallback = false;
    std::size_t n_rows = 0;
    std::size_t n_excluded = 0;

    std::vector<double> coeff_vector() const { return {coeffs.data(), coeffs.data() + coeffs.size()}; }
};

/// Solves (A + ridge I) theta = b; falls back to a minimal-norm eigen
/// solution when the factorization fails or the condition estimate exceeds 1e12.
FitResult solve(const DesignAccumulator& acc, double ridge = 0.0);

/// 1e-8 * trace(A) / K, a mild ridge for designs with thin distance bins.
double recommended_ridge(const DesignAccumulator& acc);

}  // namespace tdcg
