#include "tdcg/basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

#include "tdcg/errors.hpp"

namespace tdcg {

void KnotGrid::validate() const
{
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ArgumentError("knot grid requires finite lo < hi");
    if (degree != 0 && degree != 1 && degree != 3)
        throw ArgumentError("spline degree must be 0, 1 or 3, got " + std::to_string(degree));
    if (n_basis < degree + 1)
        throw ArgumentError("degree-" + std::to_string(degree) + " basis needs at least " +
                            std::to_string(degree + 1) + " functions");
}

double KnotGrid::spacing() const { return (hi - lo) / n_intervals(); }

SplineBasis1D::SplineBasis1D(KnotGrid grid) : grid_(grid)
{
    grid_.validate();
    if (grid_.degree == 3) {
        const int n_int = grid_.n_intervals();
        knots_.reserve(static_cast<std::size_t>(grid_.n_basis) + 4);
        for (int i = 0; i < 3; ++i)
            knots_.push_back(grid_.lo);
        for (int i = 0; i <= n_int; ++i)
            knots_.push_back(i == n_int ? grid_.hi : grid_.knot(i));
        for (int i = 0; i < 3; ++i)
            knots_.push_back(grid_.hi);
    }
}

namespace {

// Interval index and fractional position of x; positions within 1e-12 of a
// knot snap onto it so that evaluation exactly at a knot is cardinal.
std::pair<int, double> locate(const KnotGrid& g, double x)
{
    double s = (x - g.lo) / g.spacing();
    const double r = std::round(s);
    if (std::abs(s - r) <= 1e-12 * std::max(1.0, std::abs(s)))
        s = r;
    int i = static_cast<int>(std::floor(s));
    const int last = g.n_intervals() - 1;
    if (i > last)
        i = last;
    if (i < 0)
        i = 0;
    return {i, s - i};
}

}  // namespace

SparseBasisValues SplineBasis1D::eval(double x) const
{
    if (!(x >= grid_.lo && x <= grid_.hi))
        return {};
    if (grid_.degree == 0) {
        SparseBasisValues out;
        out.push(locate(grid_, x).first, 1.0);
        return out;
    }
    return grid_.degree == 1 ? eval_linear(x) : eval_cubic(x);
}

SparseBasisValues SplineBasis1D::eval_linear(double x) const
{
    SparseBasisValues out;
    const auto [i, frac] = locate(grid_, x);
    if (frac < 1.0)
        out.push(i, 1.0 - frac);
    if (frac > 0.0)
        out.push(i + 1, frac);
    return out;
}

// Cox-de Boor recursion on the clamped knot vector (basis functions
// nonzero on knot span [knots_[j], knots_[j+1]) are j-3 .. j).
SparseBasisValues SplineBasis1D::eval_cubic(double x) const
{
    const auto [interval, frac] = locate(grid_, x);
    const int j = interval + 3;
    const double u = grid_.lo + (interval + frac) * grid_.spacing();

    std::array<double, 4> n{1.0, 0.0, 0.0, 0.0};
    std::array<double, 4> left{}, right{};
    for (int k = 1; k <= 3; ++k) {
        left[k] = u - knots_[j + 1 - k];
        right[k] = knots_[j + k] - u;
        double saved = 0.0;
        for (int r = 0; r < k; ++r) {
            const double denom = right[r + 1] + left[k - r];
            const double temp = denom != 0.0 ? n[r] / denom : 0.0;
            n[r] = saved + right[r + 1] * temp;
            saved = left[k - r] * temp;
        }
        n[k] = saved;
    }
    SparseBasisValues out;
    for (int r = 0; r < 4; ++r) {
        const double v = n[r] < 0.0 ? 0.0 : n[r];
        if (v != 0.0)
            out.push(j - 3 + r, v);
    }
    return out;
}

TensorBasis2D::TensorBasis2D(SplineBasis1D r_basis, SplineBasis1D t_basis)
    : r_(std::move(r_basis)), t_(std::move(t_basis))
{
}

PairForceField::PairForceField(SplineBasis1D basis, std::vector<double> coeffs, double cutoff)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)), cutoff_(cutoff)
{
    if (static_cast<int>(coeffs_.size()) != basis_.size())
        throw ArgumentError("pair field has " + std::to_string(coeffs_.size()) + " coefficients for " +
                            std::to_string(basis_.size()) + " basis functions");
    if (!(cutoff_ <= basis_.hi()) || !(cutoff_ > basis_.lo()))
        throw ArgumentError("pair field cutoff must lie in (lo, hi] of its basis");
    spacing_ = basis_.grid().spacing();
}

double PairForceField::eval_unchecked(double r) const
{
    if (r > cutoff_ || r < basis_.lo())
        return 0.0;
    if (basis_.grid().degree == 1) {
        const double s = (r - basis_.lo()) / spacing_;
        const int i = std::min(static_cast<int>(s), basis_.grid().n_intervals() - 1);
        const double frac = s - i;
        const auto k = static_cast<std::size_t>(i);
        return coeffs_[k] * (1.0 - frac) + coeffs_[k + 1] * frac;
    }
    const auto v = basis_.eval(r);
    double f = 0.0;
    for (int k = 0; k < v.count; ++k)
        f += coeffs_[static_cast<std::size_t>(v.index[k])] * v.value[k];
    return f;
}

double PairForceField::eval(double r) const
{
    if (!(r > 0.0))
        throw ArgumentError("pair distance must be positive");
    return eval_unchecked(r);
}

TimeDependentPairForceField::TimeDependentPairForceField(TensorBasis2D basis, std::vector<double> coeffs,
                                                         double cutoff, double t_final)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)), cutoff_(cutoff), t_final_(t_final)
{
    if (static_cast<int>(coeffs_.size()) != basis_.size())
        throw ArgumentError("time-dependent field has " + std::to_string(coeffs_.size()) +
                            " coefficients for " + std::to_string(basis_.size()) + " basis functions");
    if (!(cutoff_ <= basis_.r_basis().hi()) || !(cutoff_ > basis_.r_basis().lo()))
        throw ArgumentError("pair field cutoff must lie in (lo, hi] of its basis");
    if (!(t_final_ >= 0.0))
        throw ArgumentError("t_final must be non-negative");
}

double TimeDependentPairForceField::clamp_time(double t) const { return std::clamp(t, 0.0, t_final_); }

double TimeDependentPairForceField::eval(double r, double t) const
{
    if (!(r > 0.0))
        throw ArgumentError("pair distance must be positive");
    if (r > cutoff_ || r < basis_.r_basis().lo())
        return 0.0;
    const auto vr = basis_.r_basis().eval(r);
    const auto vt = basis_.t_basis().eval(clamp_time(t));
    double f = 0.0;
    for (int i = 0; i < vr.count; ++i)
        for (int k = 0; k < vt.count; ++k)
            f += coeffs_[static_cast<std::size_t>(basis_.flat_index(vr.index[i], vt.index[k]))] * vr.value[i] *
                 vt.value[k];
    return f;
}

PairForceField TimeDependentPairForceField::at_time(double t) const
{
    const int nd = basis_.r_basis().size();
    std::vector<double> phi(static_cast<std::size_t>(nd), 0.0);
    const auto vt = basis_.t_basis().eval(clamp_time(t));
    for (int d = 0; d < nd; ++d)
        for (int k = 0; k < vt.count; ++k)
            phi[static_cast<std::size_t>(d)] +=
                coeffs_[static_cast<std::size_t>(basis_.flat_index(d, vt.index[k]))] * vt.value[k];
    return PairForceField(basis_.r_basis(), std::move(phi), cutoff_);
}

PotentialTable::PotentialTable(const PairForceField& ff) : ff_(ff)
{
    const double lo = ff.lo();
    const double rc = ff.cutoff();
    step_ = ff.basis().grid().spacing() / 16.0;
    for (std::size_t k = 0;; ++k) {
        const double x = lo + step_ * static_cast<double>(k);
        if (x >= rc - 1e-12 * step_)
            break;
        nodes_.push_back(x);
    }
    nodes_.push_back(rc);
    cum_.assign(nodes_.size(), 0.0);
    for (std::size_t k = nodes_.size() - 1; k-- > 0;) {
        const double a = nodes_[k], b = nodes_[k + 1];
        // b == rc: use the left limit of f at the cutoff
        cum_[k] = cum_[k + 1] + simpson(a, b);
    }
}

double PotentialTable::operator()(double r) const
{
    if (r >= ff_.cutoff())
        return 0.0;
    if (r <= nodes_.front())
        return cum_.front() + (nodes_.front() - r) * ff_.eval_unchecked(nodes_.front());
    auto k = static_cast<std::size_t>(std::floor((r - nodes_.front()) / step_));
    if (k + 1 >= nodes_.size())
        k = nodes_.size() - 2;
    while (k > 0 && nodes_[k] > r)
        --k;
    while (k + 2 < nodes_.size() && nodes_[k + 1] <= r)
        ++k;
    const double b = nodes_[k + 1];
    if (r == nodes_[k])
        return cum_[k];
    return cum_[k + 1] + simpson(r, b);
}

double PotentialTable::simpson(double a, double b) const
{
    return (b - a) / 6.0 *
           (ff_.eval_unchecked(a) + 4.0 * ff_.eval_unchecked(0.5 * (a + b)) + ff_.eval_unchecked(b));
}

std::vector<double> potential_from_force(const PairForceField& ff, std::span<const double> r_grid)
{
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        if (r_grid[i] < ff.lo() || r_grid[i] > ff.cutoff())
            throw ArgumentError("potential grid point " + std::to_string(r_grid[i]) + " outside [" +
                                std::to_string(ff.lo()) + ", " + std::to_string(ff.cutoff()) + "]");
        if (i > 0 && !(r_grid[i] > r_grid[i - 1]))
            throw ArgumentError("potential grid must be strictly increasing");
    }
    PotentialTable table(ff);
    std::vector<double> u(r_grid.size());
    for (std::size_t i = 0; i < r_grid.size(); ++i)
        u[i] = table(r_grid[i]);
    return u;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& dest)
{
    std::ofstream out(dest);
    if (!out)
        throw IoError("cannot open " + dest.string() + " for writing");
    out << std::setprecision(12);
    return out;
}

}  // namespace

void export_field_csv(const PairForceField& ff, std::span<const double> r_grid, const std::filesystem::path& dest)
{
    const auto u = potential_from_force(ff, r_grid);
    auto out = open_csv(dest);
    out << "r,f,u\n";
    for (std::size_t i = 0; i < r_grid.size(); ++i)
        out << r_grid[i] << ',' << ff.eval(r_grid[i]) << ',' << u[i] << '\n';
}

void export_field_csv(const TimeDependentPairForceField& ff, std::span<const double> t_grid,
                      std::span<const double> r_grid, const std::filesystem::path& dest)
{
    auto out = open_csv(dest);
    out << "t,r,f,u\n";
    for (double t : t_grid) {
        const auto frozen = ff.at_time(t);
        const auto u = potential_from_force(frozen, r_grid);
        for (std::size_t i = 0; i < r_grid.size(); ++i)
            out << t << ',' << r_grid[i] << ',' << frozen.eval(r_grid[i]) << ',' << u[i] << '\n';
    }
}

void export_coefficients_csv(const std::vector<double>& coeffs, const KnotGrid& r_grid, const KnotGrid* t_grid,
                             double cutoff, const std::filesystem::path& dest)
{
    auto out = open_csv(dest);
    out << std::setprecision(17);
    out << "# r_lo=" << r_grid.lo << " r_hi=" << r_grid.hi << " n_d=" << r_grid.n_basis
        << " r_degree=" << r_grid.degree << " cutoff=" << cutoff << '\n';
    if (t_grid)
        out << "# t_lo=" << t_grid->lo << " t_hi=" << t_grid->hi << " n_b=" << t_grid->n_basis
            << " t_degree=" << t_grid->degree << '\n';
    out << "index,d,b,coeff\n";
    const int nb = t_grid ? t_grid->n_basis : 1;
    for (std::size_t s = 0; s < coeffs.size(); ++s)
        out << s << ',' << s / static_cast<std::size_t>(nb) << ',' << s % static_cast<std::size_t>(nb) << ','
            << coeffs[s] << '\n';
}

CoefficientFile read_coefficients_csv(const std::filesystem::path& source)
{
    std::ifstream in(source);
    if (!in)
        throw IoError("cannot open " + source.string());
    std::map<std::string, double> meta;
    CoefficientFile out;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos)
                    throw FormatError(source.string() + ":" + std::to_string(lineno) + ": bad metadata token");
                meta[tok.substr(0, eq)] = std::stod(tok.substr(eq + 1));
            }
            continue;
        }
        if (!header_seen) {
            if (line != "index,d,b,coeff")
                throw FormatError(source.string() + ":" + std::to_string(lineno) + ": unexpected header");
            header_seen = true;
            continue;
        }
        const auto comma = line.rfind(',');
        try {
            out.coeffs.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw FormatError(source.string() + ":" + std::to_string(lineno) + ": bad coefficient");
        }
    }
    auto need = [&](const char* key) {
        const auto it = meta.find(key);
        if (it == meta.end())
            throw FormatError(source.string() + ": missing metadata " + key);
        return it->second;
    };
    out.r_grid = {need("r_lo"), need("r_hi"), static_cast<int>(need("n_d")), static_cast<int>(need("r_degree"))};
    out.r_grid.validate();
    out.cutoff = need("cutoff");
    std::size_t expected = static_cast<std::size_t>(out.r_grid.n_basis);
    if (meta.count("n_b")) {
        out.t_grid = KnotGrid{need("t_lo"), need("t_hi"), static_cast<int>(need("n_b")), static_cast<int>(need("t_degree"))};
        out.t_grid->validate();
        expected *= static_cast<std::size_t>(out.t_grid->n_basis);
    }
    if (out.coeffs.size() != expected)
        throw FormatError(source.string() + ": expected " + std::to_string(expected) + " coefficients");
    return out;
}

std::vector<double> linspace(double a, double b, std::size_t n)
{
    std::vector<double> xs(n);
    if (n == 1) {
        xs[0] = a;
        return xs;
    }
    for (std::size_t i = 0; i < n; ++i)
        xs[i] = (i + 1 == n) ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return xs;
}

}  // namespace tdcg
