#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <string>

#include "tdcg/errors.hpp"
#include "tdcg/md.hpp"
#include "tdcg/observables.hpp"
#include "tdcg/rng.hpp"
#include "tdcg/stochastic.hpp"

using namespace tdcg;

namespace {

std::vector<double> uniform_frame(std::size_t m, double length, std::uint64_t seed)
{
    std::vector<double> q(3 * m);
    for (std::size_t i = 0; i < q.size(); ++i) {
        const std::uint64_t h = mix64(seed * 0x9e3779b97f4a7c15ULL + i);
        q[i] = length * static_cast<double>(h >> 11) * 0x1.0p-53;
    }
    return q;
}

Trajectory scalar_path(const std::vector<double>& q, const std::vector<double>& p)
{
    Trajectory tr(1, 1, 1.0, {1.0}, false);
    for (std::size_t i = 0; i < q.size(); ++i)
        tr.append(static_cast<double>(i), std::span<const double>(&q[i], 1), std::span<const double>(&p[i], 1));
    return tr;
}

}  // namespace

TEST_CASE("radial distribution function")
{
    SUBCASE("ideal gas is flat")
    {
        const double L = 10.0;
        std::vector<std::vector<double>> frames;
        for (std::uint64_t f = 0; f < 400; ++f)
            frames.push_back(uniform_frame(300, L, f + 1));
        RdfSpec spec;
        spec.r_max = 5.0;
        spec.n_bins = 25;
        spec.box = SimBox::cubic(L);
        const auto g = rdf(frames, spec);
        for (std::size_t k = 0; k < g.g.size(); ++k)
            if (g.centers[k] >= 1.0)
                CHECK(g.g[k] == doctest::Approx(1.0).epsilon(0.02));
    }

    SUBCASE("two particles fill exactly one bin")
    {
        const std::vector<std::vector<double>> frames{{0.0, 0.0, 0.0, 0.3, 1.2, -0.4}};
        const double d = std::sqrt(0.09 + 1.44 + 0.16);
        RdfSpec spec;
        spec.r_max = 3.0;
        spec.n_bins = 30;
        spec.density = 0.1;
        const auto g = rdf(frames, spec);
        for (std::size_t k = 0; k < g.g.size(); ++k) {
            const bool inside = d >= 0.1 * static_cast<double>(k) && d < 0.1 * static_cast<double>(k + 1);
            CHECK((g.counts[k] > 0) == inside);
            if (inside)
                CHECK(g.counts[k] == 2);
        }
    }

    SUBCASE("FCC lattice peaks and normalization against a direct count")
    {
        const double a = 2.0;
        const SimBox box = SimBox::cubic(4 * a);
        const auto q = init_fcc(box, a);
        const std::size_t m = q.size() / 3;
        RdfSpec spec;
        spec.r_max = 4.0;
        spec.n_bins = 80;
        spec.box = box;
        const std::vector<std::vector<double>> frames{q};
        const auto g = rdf(frames, spec);

        // direct enumeration of minimum-image distances
        std::vector<double> count(spec.n_bins, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j)
                    continue;
                double r2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                    double dx = q[3 * i + c] - q[3 * j + c];
                    dx -= box.lengths[0] * std::round(dx / box.lengths[0]);
                    r2 += dx * dx;
                }
                const double r = std::sqrt(r2);
                if (r < spec.r_max)
                    count[static_cast<std::size_t>(r / 0.05)] += 1.0;
            }
        const double rho = static_cast<double>(m) / std::pow(4 * a, 3);
        for (std::size_t k = 0; k < spec.n_bins; ++k) {
            CHECK(static_cast<double>(g.counts[k]) == count[k]);
            const double lo = 0.05 * k, hi = lo + 0.05;
            const double shell = 4.0 / 3.0 * std::numbers::pi * (hi * hi * hi - lo * lo * lo);
            CHECK(g.g[k] == doctest::Approx(count[k] / (static_cast<double>(m) * rho * shell)).epsilon(0.005));
        }
        // nearest shell a/sqrt(2) holds 12 neighbors, next shell a holds 6
        auto around = [&](double r) {
            const auto k = static_cast<std::size_t>(std::lround(r / 0.05));
            return g.counts[k - 1] + g.counts[k] + g.counts[k + 1];
        };
        CHECK(around(a / std::sqrt(2.0)) == 12 * m);
        CHECK(around(a) == 6 * m);
        for (std::size_t k = 0; k < static_cast<std::size_t>(a / std::sqrt(2.0) / 0.05); ++k)
            CHECK(g.counts[k] == 0);
    }

    SUBCASE("invalid specifications")
    {
        RdfSpec spec;
        spec.r_max = 6.0;
        spec.box = SimBox::cubic(10.0);
        const std::vector<std::vector<double>> frames{uniform_frame(5, 10.0, 1)};
        CHECK_THROWS_AS(rdf(frames, spec), ArgumentError);
        spec.r_max = 1.0;
        CHECK_THROWS_AS(rdf(std::span<const std::vector<double>>{}, spec), ArgumentError);
        const std::vector<std::vector<double>> ragged{uniform_frame(5, 10.0, 1), uniform_frame(4, 10.0, 2)};
        CHECK_THROWS_AS(rdf(ragged, spec), ArgumentError);
    }
}

TEST_CASE("ensemble moments")
{
    SUBCASE("identical paths have zero variance")
    {
        const auto tr = scalar_path({0.1, 0.4, -0.3}, {1.0, 2.0, 3.0});
        const auto m = ensemble_moments(Ensemble{{tr, tr, tr}, 1.0});
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(m.var_q[i] == 0.0);
            CHECK(m.var_p[i] == 0.0);
        }
        CHECK(m.mean_q[1] == doctest::Approx(0.4));
    }

    SUBCASE("two-point sample +-1 has mean 0 and unbiased variance 2")
    {
        const auto a = scalar_path({1.0}, {0.0}), b = scalar_path({-1.0}, {0.0});
        const auto m = ensemble_moments(Ensemble{{a, b}, 1.0});
        CHECK(m.mean_q[0] == 0.0);
        CHECK(m.var_q[0] == doctest::Approx(2.0).epsilon(1e-15));
    }

    SUBCASE("Welford matches a two-pass computation")
    {
        std::vector<Trajectory> paths;
        const CounterNormal g(5);
        for (std::uint64_t k = 0; k < 50; ++k)
            paths.push_back(scalar_path({1e6 + g(k, 0), 3.0 * g(k, 1)}, {g(k, 2), g(k, 3)}));
        const auto m = ensemble_moments(Ensemble{paths, 1.0});
        double mean = 0.0, ss = 0.0;
        for (const auto& p : paths)
            mean += p.positions(0)[0] / 50.0;
        for (const auto& p : paths)
            ss += (p.positions(0)[0] - mean) * (p.positions(0)[0] - mean);
        CHECK(m.mean_q[0] == doctest::Approx(mean).epsilon(1e-14));
        CHECK(m.var_q[0] == doctest::Approx(ss / 49.0).epsilon(1e-9));
    }

    SUBCASE("GLE fixed start is deterministic at t = 0")
    {
        GLEParams g;
        const auto ens = generate_ensemble(
            [&](std::uint64_t seed) { return simulate_gle(g, {Scheme::EulerMaruyama, 0.01, 10, 1, seed, false}); },
            20, 9, g.beta);
        const auto m = ensemble_moments(ens);
        CHECK(m.mean_q[0] == 0.0);
        CHECK(m.mean_p[0] == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(m.var_q[0] == 0.0);
        CHECK(m.var_p[0] == 0.0);
        CHECK(m.var_p[5] > 0.0);
    }

    CHECK_THROWS_AS(ensemble_moments(Ensemble{{scalar_path({0.0}, {0.0})}, 1.0}), ArgumentError);
}

TEST_CASE("diffusion coefficient")
{
    SUBCASE("constant correlation integrates to c * t_upper")
    {
        CorrelationSeries c;
        for (int i = 0; i <= 20; ++i) {
            c.lags.push_back(0.1 * i);
            c.values.push_back(0.4);
            c.n_samples.push_back(1);
            c.std_error.push_back(0.0);
        }
        CHECK(diffusion_coefficient(c, 1.5) == doctest::Approx(0.6).epsilon(1e-14));
    }

    SUBCASE("Einstein relation for free Langevin particles")
    {
        const double zeta = 2.0, beta = 1.5;
        auto sim = [&](std::uint64_t seed) {
            LangevinTDParams p;
            p.force = std::make_shared<ZeroForce>();
            p.zeta0 = zeta;
            p.beta = beta;
            p.sigma0 = std::sqrt(2.0 * zeta / beta);
            p.p0 = {CounterNormal(seed)(0, 1) / std::sqrt(beta)};
            return simulate_langevin_td(p, {Scheme::BAOAB, 0.01, 2000, 5, seed, false});
        };
        const auto ens = generate_ensemble(sim, 200, 3, beta);
        const auto c = vacf(ens, CGMapping::identity({1.0}), Origin::Sliding, 80);
        CHECK(diffusion_coefficient(c, 4.0) == doctest::Approx(1.0 / (beta * zeta)).epsilon(0.05));
    }
}

TEST_CASE("observable CSV export")
{
    const auto dir = std::filesystem::temp_directory_path() / "tdcg_obs_csv";
    std::filesystem::create_directories(dir);
    RdfResult r;
    r.centers = {0.5, 1.5};
    r.g = {0.0, 1.25};
    export_rdf_csv(r, dir / "rdf.csv");
    std::ifstream f(dir / "rdf.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "r,g");
    std::getline(f, line);
    CHECK(line == "0.5,0");
    std::getline(f, line);
    CHECK(line == "1.5,1.25");
    CHECK_THROWS_AS(export_rdf_csv(r, dir / "missing" / "rdf.csv"), IoError);
    std::filesystem::remove_all(dir);
}
