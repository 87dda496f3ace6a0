#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace tdcg {

/// Uniform knot layout for a spline family on [lo, hi].
struct KnotGrid
{
    double lo = 0.0;
    double hi = 1.0;
    int n_basis = 2;
    int degree = 1;  // 0: interval indicators, 1: hat functions, 3: clamped cubic B-splines

    /// Throws ArgumentError unless lo < hi, n_basis >= degree + 1, degree in {0, 1, 3}.
    void validate() const;
    /// Width of one knot interval.
    double spacing() const;
    int n_intervals() const { return degree == 0 ? n_basis : n_basis - degree; }
    /// Position of the i-th distinct knot, i in [0, n_intervals].
    double knot(int i) const { return lo + spacing() * i; }
};

/// Nonzero basis values at one point (at most 4 entries).
struct SparseBasisValues
{
    std::array<int, 4> index{};
    std::array<double, 4> value{};
    int count = 0;

    void push(int i, double v)
    {
        index[count] = i;
        value[count] = v;
        ++count;
    }
};

class SplineBasis1D
{
public:
    SplineBasis1D() = default;
    explicit SplineBasis1D(KnotGrid grid);

    const KnotGrid& grid() const { return grid_; }
    int size() const { return grid_.n_basis; }
    double lo() const { return grid_.lo; }
    double hi() const { return grid_.hi; }
    bool contains(double x) const { return x >= grid_.lo && x <= grid_.hi; }

    /// Nonzero basis values at x; empty outside [lo, hi].
    SparseBasisValues eval(double x) const;

private:
    SparseBasisValues eval_linear(double x) const;
    SparseBasisValues eval_cubic(double x) const;

    KnotGrid grid_;
    std::vector<double> knots_;  // full clamped knot vector (cubic only)
};

/// Product functions psi_d(r) * chi_b(t); flattened index s = d * N_b + b.
class TensorBasis2D
{
public:
    TensorBasis2D() = default;
    TensorBasis2D(SplineBasis1D r_basis, SplineBasis1D t_basis);

    const SplineBasis1D& r_basis() const { return r_; }
    const SplineBasis1D& t_basis() const { return t_; }
    int size() const { return r_.size() * t_.size(); }
    int flat_index(int d, int b) const { return d * t_.size() + b; }

private:
    SplineBasis1D r_, t_;
};

/// Static pair force f(r) = sum_d phi_d psi_d(r), zero outside [lo, cutoff].
class PairForceField
{
public:
    PairForceField() = default;
    PairForceField(SplineBasis1D basis, std::vector<double> coeffs, double cutoff);

    const SplineBasis1D& basis() const { return basis_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double cutoff() const { return cutoff_; }
    double lo() const { return basis_.lo(); }

    /// Throws ArgumentError for r <= 0.
    double eval(double r) const;
    /// Same as eval without the r > 0 check; callers guarantee r > 0.
    double eval_unchecked(double r) const;

private:
    SplineBasis1D basis_;
    std::vector<double> coeffs_;
    double cutoff_ = 0.0;
    double spacing_ = 1.0;
};

/// f(r, t) = sum_{d,b} theta_{db} psi_d(r) chi_b(t); t is clamped to [0, t_f].
class TimeDependentPairForceField
{
public:
    TimeDependentPairForceField() = default;
    TimeDependentPairForceField(TensorBasis2D basis, std::vector<double> coeffs, double cutoff, double t_final);

    const TensorBasis2D& basis() const { return basis_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double cutoff() const { return cutoff_; }
    double t_final() const { return t_final_; }
    double clamp_time(double t) const;

    double eval(double r, double t) const;
    /// The static field obtained by freezing time at t.
    PairForceField at_time(double t) const;

private:
    TensorBasis2D basis_;
    std::vector<double> coeffs_;
    double cutoff_ = 0.0;
    double t_final_ = 0.0;
};

/// Cumulative Simpson integral of a pair force from the cutoff inwards,
/// on a refinement with 16 sub-intervals per knot interval.
class PotentialTable
{
public:
    explicit PotentialTable(const PairForceField& ff);

    /// u(r) = integral_r^{r_c} f(s) ds for r in [lo, r_c]; 0 beyond the cutoff.
    double operator()(double r) const;

private:
    double simpson(double a, double b) const;

    PairForceField ff_;
    double step_ = 0.0;
    std::vector<double> nodes_;  // ascending, last = cutoff
    std::vector<double> cum_;    // integral from node to cutoff
};

/// u on each grid point; throws ArgumentError if the grid is not strictly
/// increasing or leaves [lo, r_c].
std::vector<double> potential_from_force(const PairForceField& ff, std::span<const double> r_grid);

/// CSV `r,f,u`.
void export_field_csv(const PairForceField& ff, std::span<const double> r_grid, const std::filesystem::path& dest);
/// CSV `t,r,f,u`.
void export_field_csv(const TimeDependentPairForceField& ff, std::span<const double> t_grid,
                      std::span<const double> r_grid, const std::filesystem::path& dest);

/// Coefficients with a `# key=value` metadata header describing the basis.
void export_coefficients_csv(const std::vector<double>& coeffs, const KnotGrid& r_grid, const KnotGrid* t_grid,
                             double cutoff, const std::filesystem::path& dest);

struct CoefficientFile
{
    KnotGrid r_grid;
    std::optional<KnotGrid> t_grid;
    double cutoff = 0.0;
    std::vector<double> coeffs;
};

/// Reads a file written by export_coefficients_csv. Throws FormatError on a
/// malformed header or row.
CoefficientFile read_coefficients_csv(const std::filesystem::path& source);

/// Uniform grid of n points on [a, b].
std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace tdcg
