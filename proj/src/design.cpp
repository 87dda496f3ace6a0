#include "tdcg/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tdcg/errors.hpp"
#include "tdcg/pair_forces.hpp"

namespace tdcg {

namespace {

constexpr double kOverlap = 1e-12;

struct MappedFrame
{
    std::vector<double> q;
    std::vector<double> f;
    std::size_t m = 0;
};

MappedFrame map_frame(const FrameView& frame, int dim, const CGMapping& mapping)
{
    MappedFrame out;
    out.q = map_positions(frame, dim, mapping);
    out.f = map_forces(frame, dim, mapping);
    out.m = mapping.size();
    return out;
}

/// Calls fn(i, j, r, delta) for every unordered CG pair with lo <= r <= hi
/// and returns the number of such pairs.
template <typename Fn>
std::size_t for_each_domain_pair(const std::vector<double>& q, int dim, const SimBox& box, double lo, double hi,
                                 Fn&& fn)
{
    const auto d = static_cast<std::size_t>(dim);
    const std::size_t m = q.size() / d;
    const std::span<const double> qs(q);
    std::array<double, 3> delta{};
    std::size_t count = 0;
    auto visit = [&](std::size_t i, std::size_t j) {
        const double r = pair_delta(box, dim, qs.subspan(i * d, d), qs.subspan(j * d, d), delta);
        if (r < lo || r > hi)
            return;
        if (r < kOverlap)
            throw SingularityError(i, j);
        ++count;
        fn(i, j, r, delta);
    };
    if (box.periodic() && hi > 0.5 * box.min_length(dim))
        throw ArgumentError("basis range exceeds half the box length");
    if (dim == 3 && m > 64) {
        const CellList cells(qs, box, hi);
        for (std::size_t i = 0; i < m; ++i)
            cells.for_each_candidate(i, [&](std::size_t j) {
                if (j > i)
                    visit(i, j);
            });
    } else {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                visit(i, j);
    }
    return count;
}

std::size_t pair_total(std::size_t m) { return m * (m - 1) / 2; }

}  // namespace

DenseRows frame_rows(const FrameView& frame, int dim, const CGMapping& mapping, const SimBox& box,
                     const SplineBasis1D& r_basis)
{
    const MappedFrame mf = map_frame(frame, dim, mapping);
    const auto d = static_cast<std::size_t>(dim);
    DenseRows out;
    out.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mf.q.size()), r_basis.size());
    out.targets = Eigen::Map<const Eigen::VectorXd>(mf.f.data(), static_cast<Eigen::Index>(mf.f.size()));
    const std::size_t inside = for_each_domain_pair(
        mf.q, dim, box, r_basis.lo(), r_basis.hi(),
        [&](std::size_t i, std::size_t j, double r, const std::array<double, 3>& delta) {
            const auto sb = r_basis.eval(r);
            for (int k = 0; k < sb.count; ++k)
                for (std::size_t a = 0; a < d; ++a) {
                    const double v = sb.value[k] * delta[a] / r;
                    out.rows(static_cast<Eigen::Index>(i * d + a), sb.index[k]) += v;
                    out.rows(static_cast<Eigen::Index>(j * d + a), sb.index[k]) -= v;
                }
        });
    out.excluded = pair_total(mf.m) - inside;
    return out;
}

FrameStats frame_stats(const FrameView& frame, int dim, const CGMapping& mapping, const SimBox& box,
                       const SplineBasis1D& r_basis)
{
    const MappedFrame mf = map_frame(frame, dim, mapping);
    const auto d = static_cast<std::size_t>(dim);
    const auto nr = static_cast<std::size_t>(r_basis.size());
    const std::size_t w = mf.q.size();

    std::vector<double> rows(w * nr, 0.0);
    std::vector<std::vector<int>> touched(w);
    const std::size_t inside = for_each_domain_pair(
        mf.q, dim, box, r_basis.lo(), r_basis.hi(),
        [&](std::size_t i, std::size_t j, double r, const std::array<double, 3>& delta) {
            const auto sb = r_basis.eval(r);
            for (int k = 0; k < sb.count; ++k) {
                const auto col = static_cast<std::size_t>(sb.index[k]);
                for (std::size_t a = 0; a < d; ++a) {
                    const double v = sb.value[k] * delta[a] / r;
                    rows[(i * d + a) * nr + col] += v;
                    rows[(j * d + a) * nr + col] -= v;
                    touched[i * d + a].push_back(sb.index[k]);
                    touched[j * d + a].push_back(sb.index[k]);
                }
            }
        });

    FrameStats st;
    st.n_r = r_basis.size();
    st.gram.assign(nr * nr, DD{});
    st.proj.assign(nr, DD{});
    st.rows = w;
    st.excluded = pair_total(mf.m) - inside;
    for (std::size_t row = 0; row < w; ++row) {
        const double F = mf.f[row];
        st.sum_sq = dd_add_prod(st.sum_sq, F, F);
        auto& cols = touched[row];
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        const double* rv = &rows[row * nr];
        for (std::size_t p = 0; p < cols.size(); ++p) {
            const auto k = static_cast<std::size_t>(cols[p]);
            st.proj[k] = dd_add_prod(st.proj[k], rv[k], F);
            for (std::size_t s = p; s < cols.size(); ++s) {
                const auto l = static_cast<std::size_t>(cols[s]);
                st.gram[k * nr + l] = dd_add_prod(st.gram[k * nr + l], rv[k], rv[l]);
            }
        }
    }
    return st;
}

DesignAccumulator::DesignAccumulator(int n_r, int n_t) : n_r_(n_r), n_t_(n_t)
{
    if (n_r < 1 || n_t < 1)
        throw ArgumentError("design dimensions must be positive");
    const auto k = static_cast<std::size_t>(size());
    a_.assign(k * k, DD{});
    b_.assign(k, DD{});
}

void DesignAccumulator::add(const FrameStats& st, const SparseBasisValues* chi)
{
    if (st.n_r != n_r_)
        throw ArgumentError("frame statistics do not match the accumulator's r basis");
    if (!chi && n_t_ != 1)
        throw ArgumentError("time weights required for a tensor design");
    const auto nr = static_cast<std::size_t>(n_r_);
    SparseBasisValues one;
    one.push(0, 1.0);
    const SparseBasisValues& c = chi ? *chi : one;
    for (int b = 0; b < c.count; ++b)
        if (c.index[b] < 0 || c.index[b] >= n_t_)
            throw ArgumentError("time weight index out of range");

    for (std::size_t k = 0; k < nr; ++k) {
        for (int x = 0; x < c.count; ++x) {
            const int s1 = static_cast<int>(k) * n_t_ + c.index[x];
            b_[static_cast<std::size_t>(s1)] = dd_add(b_[static_cast<std::size_t>(s1)], dd_mul(st.proj[k], c.value[x]));
        }
        for (std::size_t l = k; l < nr; ++l) {
            const DD g = st.gram[k * nr + l];
            if (g.hi == 0.0 && g.lo == 0.0)
                continue;
            for (int x = 0; x < c.count; ++x)
                for (int y = 0; y < c.count; ++y) {
                    if (l == k && c.index[y] < c.index[x])
                        continue;
                    const int s1 = static_cast<int>(k) * n_t_ + c.index[x];
                    const int s2 = static_cast<int>(l) * n_t_ + c.index[y];
                    a(s1, s2) = dd_add(a(s1, s2), dd_mul(dd_mul(g, c.value[x]), c.value[y]));
                }
        }
    }
    sum_sq_ = dd_add(sum_sq_, st.sum_sq);
    n_rows_ += st.rows;
    n_excluded_ += st.excluded;
}

void DesignAccumulator::add_row(std::span<const int> index, std::span<const double> value, double target)
{
    if (index.size() != value.size())
        throw ArgumentError("row index/value length mismatch");
    for (std::size_t p = 0; p < index.size(); ++p) {
        if (index[p] < 0 || index[p] >= size())
            throw ArgumentError("row index out of range");
        b_[static_cast<std::size_t>(index[p])] = dd_add_prod(b_[static_cast<std::size_t>(index[p])], value[p], target);
        for (std::size_t q = 0; q < index.size(); ++q) {
            if (index[q] < index[p] || (index[q] == index[p] && q != p))
                continue;
            a(index[p], index[q]) = dd_add_prod(a(index[p], index[q]), value[p], value[q]);
        }
    }
    sum_sq_ = dd_add_prod(sum_sq_, target, target);
    ++n_rows_;
}

void DesignAccumulator::merge(const DesignAccumulator& other)
{
    if (other.n_r_ != n_r_ || other.n_t_ != n_t_)
        throw ArgumentError("cannot merge accumulators of different shape");
    for (std::size_t i = 0; i < a_.size(); ++i)
        a_[i] = dd_add(a_[i], other.a_[i]);
    for (std::size_t i = 0; i < b_.size(); ++i)
        b_[i] = dd_add(b_[i], other.b_[i]);
    sum_sq_ = dd_add(sum_sq_, other.sum_sq_);
    n_rows_ += other.n_rows_;
    n_excluded_ += other.n_excluded_;
}

Eigen::MatrixXd DesignAccumulator::A() const
{
    const int k = size();
    Eigen::MatrixXd out(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j)
            out(i, j) = out(j, i) = a(i, j).value();
    return out;
}

Eigen::VectorXd DesignAccumulator::b() const
{
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i)
        out(i) = b_[static_cast<std::size_t>(i)].value();
    return out;
}

double DesignAccumulator::objective(const Eigen::VectorXd& theta) const
{
    if (n_rows_ == 0)
        throw DegenerateError("empty design");
    DD acc = sum_sq_;
    const int k = size();
    for (int i = 0; i < k; ++i) {
        acc = dd_add(acc, dd_mul(b_[static_cast<std::size_t>(i)], -2.0 * theta(i)));
        for (int j = i; j < k; ++j) {
            const DD& aij = a(i, j);
            if (aij.hi == 0.0 && aij.lo == 0.0)
                continue;
            const DD t = dd_mul(dd_mul(aij, theta(i)), theta(j));
            acc = dd_add(acc, j == i ? t : dd_mul(t, 2.0));
        }
    }
    return acc.value() / static_cast<double>(n_rows_);
}

Eigen::VectorXd DesignAccumulator::residual_rhs(const Eigen::VectorXd& theta) const
{
    const int k = size();
    std::vector<DD> r(b_.begin(), b_.end());
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
            const DD& aij = a(i, j);
            if (aij.hi == 0.0 && aij.lo == 0.0)
                continue;
            r[static_cast<std::size_t>(i)] = dd_add(r[static_cast<std::size_t>(i)], dd_mul(aij, -theta(j)));
            if (j != i)
                r[static_cast<std::size_t>(j)] = dd_add(r[static_cast<std::size_t>(j)], dd_mul(aij, -theta(i)));
        }
    Eigen::VectorXd out(k);
    for (int i = 0; i < k; ++i)
        out(i) = r[static_cast<std::size_t>(i)].value();
    return out;
}

double recommended_ridge(const DesignAccumulator& acc)
{
    return 1e-8 * acc.A().trace() / acc.size();
}

FitResult solve(const DesignAccumulator& acc, double ridge)
{
    if (acc.n_rows() == 0)
        throw DegenerateError("empty design: no rows accumulated");
    if (!(ridge >= 0.0) || !std::isfinite(ridge))
        throw ArgumentError("ridge must be finite and non-negative");

    const int k = acc.size();
    Eigen::MatrixXd M = acc.A();
    M.diagonal().array() += ridge;
    const Eigen::VectorXd b = acc.b();

    FitResult out;
    out.regularization_used = ridge;
    out.n_rows = acc.n_rows();
    out.n_excluded = acc.n_excluded();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    double cond = std::numeric_limits<double>::infinity();
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
        const double rc = ldlt.rcond();
        cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        ok = cond <= 1e12 && (ldlt.vectorD().array() > 0.0).all();
    }

    if (ok) {
        Eigen::VectorXd theta = ldlt.solve(b);
        for (int it = 0; it < 2; ++it) {
            Eigen::VectorXd r = acc.residual_rhs(theta) - ridge * theta;
            theta += ldlt.solve(r);
        }
        out.coeffs = theta;
        out.condition_estimate = cond;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
        if (eig.info() != Eigen::Success)
            throw DegenerateError("eigendecomposition of the normal matrix failed");
        const Eigen::VectorXd& lam = eig.eigenvalues();
        const double lmax = lam.maxCoeff();
        if (!(lmax > 0.0))
            throw DegenerateError("normal matrix has no positive eigenvalue");
        const double cut = 1e-10 * lmax;
        Eigen::VectorXd proj = eig.eigenvectors().transpose() * b;
        for (int i = 0; i < k; ++i)
            proj(i) = lam(i) > cut ? proj(i) / lam(i) : 0.0;
        out.coeffs = eig.eigenvectors() * proj;
        const double lmin = lam.minCoeff();
        out.condition_estimate = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
        out.eigen_fallback = true;
    }
    if (!out.coeffs.allFinite())
        throw DegenerateError("solution is not finite");
    out.rms_residual = std::sqrt(std::max(0.0, acc.objective(out.coeffs)));
    return out;
}

}  // namespace tdcg
