#include "tdcg/observables.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "tdcg/errors.hpp"

namespace tdcg {

void RdfSpec::validate() const
{
    if (!(r_max > 0.0) || n_bins < 1)
        throw ArgumentError("RDF needs r_max > 0 and at least one bin");
    if (dim < 1 || dim > 3)
        throw ArgumentError("RDF dimension must be 1, 2 or 3");
    box.validate();
    if (box.periodic() && r_max > 0.5 * box.min_length(dim) * (1.0 + 1e-12))
        throw ArgumentError("r_max exceeds half the box length");
}

namespace {

double ball(double r, int dim)
{
    switch (dim) {
    case 1:
        return 2.0 * r;
    case 2:
        return std::numbers::pi * r * r;
    default:
        return 4.0 / 3.0 * std::numbers::pi * r * r * r;
    }
}

}  // namespace

RdfResult rdf(std::span<const std::vector<double>> frames, const RdfSpec& spec)
{
    spec.validate();
    if (frames.empty())
        throw ArgumentError("RDF needs at least one frame");
    const auto d = static_cast<std::size_t>(spec.dim);
    const std::size_t m = frames.front().size() / d;
    for (const auto& f : frames)
        if (f.size() != m * d || f.size() % d != 0)
            throw ArgumentError("RDF frames differ in size");

    const std::size_t nb = spec.n_bins;
    const double width = spec.r_max / static_cast<double>(nb);
    const auto nfr = static_cast<std::int64_t>(frames.size());
    std::vector<std::vector<std::uint64_t>> per_frame(frames.size(), std::vector<std::uint64_t>(nb, 0));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t fi = 0; fi < nfr; ++fi) {
        const auto& q = frames[static_cast<std::size_t>(fi)];
        auto& hist = per_frame[static_cast<std::size_t>(fi)];
        const std::span<const double> qs(q);
        std::array<double, 3> delta{};
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                const double r = pair_delta(spec.box, spec.dim, qs.subspan(i * d, d), qs.subspan(j * d, d), delta);
                if (r >= spec.r_max)
                    continue;
                hist[std::min(nb - 1, static_cast<std::size_t>(r / width))] += 2;
            }
    }

    RdfResult out;
    out.n_frames = frames.size();
    out.density = spec.density > 0.0 ? spec.density : static_cast<double>(m) / spec.box.volume(spec.dim);
    out.counts.assign(nb, 0);
    for (const auto& h : per_frame)
        for (std::size_t k = 0; k < nb; ++k)
            out.counts[k] += h[k];
    const double norm = static_cast<double>(out.n_frames) * static_cast<double>(m) * out.density;
    for (std::size_t k = 0; k < nb; ++k) {
        const double lo = width * static_cast<double>(k), hi = width * static_cast<double>(k + 1);
        out.centers.push_back(0.5 * (lo + hi));
        out.g.push_back(static_cast<double>(out.counts[k]) / (norm * (ball(hi, spec.dim) - ball(lo, spec.dim))));
    }
    return out;
}

Moments ensemble_moments(const Ensemble& ens)
{
    if (ens.n_paths() < 2)
        throw ArgumentError("variance needs at least two paths");
    ens.validate();
    Moments out;
    const auto& first = ens.paths.front();
    out.times = first.times();
    out.width = first.width();
    const std::size_t nf = first.size(), w = out.width;
    out.mean_q.assign(nf * w, 0.0);
    out.var_q.assign(nf * w, 0.0);
    out.mean_p.assign(nf * w, 0.0);
    out.var_p.assign(nf * w, 0.0);
    // Welford update over paths
    for (std::size_t n = 0; n < ens.n_paths(); ++n) {
        const auto& tr = ens.paths[n];
        const double k = static_cast<double>(n + 1);
        for (std::size_t i = 0; i < nf; ++i) {
            const auto q = tr.positions(i), p = tr.momenta(i);
            for (std::size_t c = 0; c < w; ++c) {
                const std::size_t idx = i * w + c;
                const double dq = q[c] - out.mean_q[idx];
                out.mean_q[idx] += dq / k;
                out.var_q[idx] += dq * (q[c] - out.mean_q[idx]);
                const double dp = p[c] - out.mean_p[idx];
                out.mean_p[idx] += dp / k;
                out.var_p[idx] += dp * (p[c] - out.mean_p[idx]);
            }
        }
    }
    const double denom = static_cast<double>(ens.n_paths() - 1);
    for (std::size_t idx = 0; idx < nf * w; ++idx) {
        out.var_q[idx] /= denom;
        out.var_p[idx] /= denom;
    }
    return out;
}

double diffusion_coefficient(const CorrelationSeries& cvv, double t_upper)
{
    return integrate_series(cvv, t_upper);
}

void export_rdf_csv(const RdfResult& r, const std::filesystem::path& dest)
{
    std::ofstream out(dest);
    if (!out)
        throw IoError("cannot write " + dest.string());
    out << "r,g\n" << std::setprecision(17);
    for (std::size_t k = 0; k < r.centers.size(); ++k)
        out << r.centers[k] << ',' << r.g[k] << '\n';
}

void export_moments_csv(const Moments& m, const std::filesystem::path& dest)
{
    std::ofstream out(dest);
    if (!out)
        throw IoError("cannot write " + dest.string());
    out << "t,mean_q,var_q,mean_p,var_p\n" << std::setprecision(17);
    const std::size_t w = m.width;
    for (std::size_t i = 0; i < m.times.size(); ++i) {
        double v[4] = {0, 0, 0, 0};
        for (std::size_t c = 0; c < w; ++c) {
            v[0] += m.mean_q[i * w + c];
            v[1] += m.var_q[i * w + c];
            v[2] += m.mean_p[i * w + c];
            v[3] += m.var_p[i * w + c];
        }
        out << m.times[i];
        for (double x : v)
            out << ',' << x / static_cast<double>(w);
        out << '\n';
    }
}

}  // namespace tdcg
