#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "tdcg/errors.hpp"
#include "tdcg/friction.hpp"
#include "tdcg/rng.hpp"
#include "tdcg/stochastic.hpp"

using namespace tdcg;

namespace {

CorrelationSeries series(std::vector<double> values, double dlag)
{
    CorrelationSeries c;
    for (std::size_t i = 0; i < values.size(); ++i) {
        c.lags.push_back(dlag * static_cast<double>(i));
        c.n_samples.push_back(1);
        c.std_error.push_back(0.0);
    }
    c.values = std::move(values);
    return c;
}

// 1-D particles, unit mass, momentum stationary from the start.
Ensemble ou_ensemble(std::size_t n_paths, double zeta, double dt, std::size_t n_steps, std::size_t stride,
                     ForceRecord record, Scheme scheme)
{
    auto sim = [=](std::uint64_t seed) {
        LangevinTDParams p;
        p.force = std::make_shared<ZeroForce>();
        p.zeta0 = zeta;
        p.sigma0 = std::sqrt(2.0 * zeta);
        p.q0 = {CounterNormal(seed)(0, 998)};
        p.p0 = {CounterNormal(seed)(0, 999)};
        p.record = record;
        return simulate_langevin_td(p, {scheme, dt, n_steps, stride, seed, true});
    };
    return generate_ensemble(sim, n_paths, 2024, 1.0);
}

Trajectory momentum_path(const std::vector<double>& p, double dt)
{
    Trajectory tr(1, 1, dt, {1.0}, false);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = 0.0;
        tr.append(dt * static_cast<double>(i), std::span<const double>(&q, 1), std::span<const double>(&p[i], 1));
    }
    return tr;
}

}  // namespace

TEST_CASE("velocity autocorrelation")
{
    SUBCASE("constant velocities give c^2 at every lag")
    {
        const double c = 0.7, m = 2.0;
        Trajectory tr(3, 2, 0.1, {m, m}, false);
        const std::vector<double> q(6, 0.0), p(6, m * c);
        for (int i = 0; i < 20; ++i)
            tr.append(0.1 * i, q, p);
        const Ensemble ens{{tr, tr}, 1.0};
        const auto mapping = CGMapping::identity({m, m});
        for (Origin o : {Origin::FixedZero, Origin::Sliding}) {
            const auto s = vacf(ens, mapping, o);
            REQUIRE(s.size() == 20);
            for (double v : s.values)
                CHECK(v == doctest::Approx(c * c).epsilon(1e-14));
        }
    }

    SUBCASE("white momenta: variance at lag 0, zero afterwards")
    {
        std::vector<Trajectory> paths;
        for (std::uint64_t k = 0; k < 20; ++k) {
            const CounterNormal g(k);
            std::vector<double> p(500);
            for (std::size_t i = 0; i < p.size(); ++i)
                p[i] = 1.5 * g(i, 0);
            paths.push_back(momentum_path(p, 0.1));
        }
        const Ensemble ens{paths, 1.0};
        const auto s = vacf(ens, CGMapping::identity({1.0}), Origin::Sliding, 20);
        CHECK(s.values[0] == doctest::Approx(2.25).epsilon(0.05));
        for (std::size_t i = 1; i < s.size(); ++i)
            CHECK(std::abs(s.values[i]) < 3.0 * s.std_error[i] + 1e-12);
    }

    SUBCASE("stationary OU momentum decays as exp(-zeta t / m) / beta")
    {
        const auto ens = ou_ensemble(500, 1.0, 0.01, 300, 10, ForceRecord::Conservative, Scheme::BAOAB);
        const auto s = vacf(ens, CGMapping::identity({1.0}), Origin::FixedZero);
        int outside = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (std::abs(s.values[i] - std::exp(-s.lags[i])) > 3.0 * s.std_error[i])
                ++outside;
        CHECK(outside <= 2);
    }

    SUBCASE("sliding-origin sample counts do not increase with lag")
    {
        const auto ens = ou_ensemble(3, 1.0, 0.01, 100, 10, ForceRecord::Conservative, Scheme::BAOAB);
        const auto s = vacf(ens, CGMapping::identity({1.0}), Origin::Sliding);
        for (std::size_t i = 1; i < s.size(); ++i)
            CHECK(s.n_samples[i] <= s.n_samples[i - 1]);
        CHECK_NOTHROW(s.validate());
    }

    CHECK_THROWS_AS(vacf(Ensemble{}, CGMapping::identity({1.0}), Origin::Sliding), ArgumentError);
}

TEST_CASE("force-velocity correlation")
{
    const auto ens = ou_ensemble(20, 1.0, 0.01, 200, 10, ForceRecord::Total, Scheme::EulerMaruyama);
    const auto mapping = CGMapping::identity({1.0});

    SUBCASE("perfect model gives an identically zero series")
    {
        class Replay final : public ForceModel
        {
        public:
            explicit Replay(const Ensemble& e) : e_(e) {}
            void evaluate(std::span<const double> q, double t, std::span<double> f) const override
            {
                for (const auto& tr : e_.paths)
                    for (std::size_t i = 0; i < tr.size(); ++i)
                        if (tr.times()[i] == t && tr.positions(i)[0] == q[0]) {
                            f[0] = tr.forces(i)[0];
                            return;
                        }
                FAIL("frame not found");
            }

        private:
            const Ensemble& e_;
        } model(ens);
        const auto s = force_velocity_corr(ens, mapping, model, Origin::Sliding);
        for (double v : s.values)
            CHECK(v == 0.0);
    }

    SUBCASE("null model equals the recorded-force correlation")
    {
        const auto s = force_velocity_corr(ens, mapping, ZeroForce{}, Origin::FixedZero);
        for (std::size_t lag = 0; lag < s.size(); ++lag) {
            double sum = 0.0;
            for (const auto& tr : ens.paths)
                sum += tr.forces(lag)[0] * tr.momenta(0)[0];
            CHECK(s.values[lag] == doctest::Approx(sum / static_cast<double>(ens.n_paths())).epsilon(1e-12));
        }
    }

    SUBCASE("frames without forces are rejected")
    {
        Ensemble bare;
        bare.paths.push_back(momentum_path({0.1, 0.2, 0.3}, 0.1));
        CHECK_THROWS_AS(force_velocity_corr(bare, mapping, ZeroForce{}, Origin::Sliding), PreconditionError);
    }
}

TEST_CASE("Green-Kubo friction")
{
    SUBCASE("Markovian Langevin data recover zeta0 = 1 with a positive sign")
    {
        const auto ens = ou_ensemble(500, 1.0, 0.005, 4000, 10, ForceRecord::Total, Scheme::EulerMaruyama);
        const auto mapping = CGMapping::identity({1.0});
        const auto cvv = vacf(ens, mapping, Origin::Sliding, 200);
        const auto cfv = force_velocity_corr(ens, mapping, ZeroForce{}, Origin::Sliding, 200);
        const double z = zeta0_from_green_kubo(cfv, cvv, first_zero_crossing(cvv));
        CHECK(z > 0.0);
        CHECK(z == doctest::Approx(1.0).epsilon(0.15));
    }

    SUBCASE("zero force signal gives zero friction")
    {
        const auto cvv = series({1.0, 0.5, 0.25, 0.125}, 0.1);
        const auto cfv = series({0.0, 0.0, 0.0, 0.0}, 0.1);
        CHECK(zeta0_from_green_kubo(cfv, cvv, 0.3) == 0.0);
    }

    SUBCASE("degenerate denominator and mismatched grids")
    {
        const auto zero = series({0.0, 0.0, 0.0}, 0.1);
        const auto one = series({1.0, 1.0, 1.0}, 0.1);
        CHECK_THROWS_AS(zeta0_from_green_kubo(one, zero, 0.2), DegenerateError);
        CHECK_THROWS_AS(zeta0_from_green_kubo(one, series({1.0, 1.0, 1.0}, 0.2), 0.2), ArgumentError);
        CHECK_THROWS_AS(zeta0_from_green_kubo(one, one, 0.5), ArgumentError);
    }
}

TEST_CASE("series integration and truncation")
{
    const auto flat = series(std::vector<double>(11, 2.0), 0.1);
    CHECK(integrate_series(flat, 0.73) == doctest::Approx(1.46).epsilon(1e-14));
    std::vector<double> ramp;
    for (int i = 0; i <= 10; ++i)
        ramp.push_back(0.1 * i);
    // trapezoid is exact for a linear integrand, including the partial interval
    CHECK(integrate_series(series(ramp, 0.1), 0.55) == doctest::Approx(0.55 * 0.55 / 2).epsilon(1e-13));

    CHECK(first_zero_crossing(series({1.0, 0.5, -0.1, 0.2}, 0.5)) == 1.0);
    CHECK(first_zero_crossing(series({1.0, 0.5, 0.2}, 0.5)) == 1.0);
    CHECK(first_zero_crossing(series({1.0, 0.0, 0.2}, 0.5)) == 0.5);

    auto bad = flat;
    bad.lags[0] = 0.1;
    CHECK_THROWS_AS(bad.validate(), InvariantError);
}

TEST_CASE("Laplace kernel")
{
    std::vector<double> vv, fv;
    for (int i = 0; i <= 100; ++i) {
        const double t = 0.05 * i;
        vv.push_back(std::exp(-t) * std::cos(2.0 * t));
        fv.push_back(-0.3 * std::exp(-2.0 * t));
    }
    const auto cvv = series(vv, 0.05), cfv = series(fv, 0.05);

    SUBCASE("s = 0 equals the Green-Kubo ratio")
    {
        const std::vector<double> s{0.0};
        const double gk = zeta0_from_green_kubo(cfv, cvv, 3.2);
        CHECK(laplace_kernel(cfv, cvv, s, 3.2)[0] == doctest::Approx(gk).epsilon(1e-12));
    }

    SUBCASE("proportional series give a constant kernel")
    {
        std::vector<double> prop;
        for (double v : vv)
            prop.push_back(-0.8 * v);
        const std::vector<double> s{0.0, 0.3, 1.0, 4.0};
        for (double k : laplace_kernel(series(prop, 0.05), cvv, s, 5.0))
            CHECK(k == doctest::Approx(0.8).epsilon(1e-12));
    }

    SUBCASE("negative Laplace variable is rejected")
    {
        const std::vector<double> s{-1.0};
        CHECK_THROWS_AS(laplace_kernel(cfv, cvv, s, 1.0), ArgumentError);
    }
}

TEST_CASE("quadratic variation")
{
    SUBCASE("Brownian momentum with sigma = 0.5 over 1e5 increments")
    {
        const double dt = 0.01, sigma = 0.5;
        const CounterNormal g(77);
        std::vector<double> p(100001, 0.0);
        for (std::size_t i = 1; i < p.size(); ++i)
            p[i] = p[i - 1] + sigma * std::sqrt(dt) * g(i, 0);
        CHECK(sigma0_quadratic_variation(momentum_path(p, dt)) == doctest::Approx(sigma).epsilon(0.01));
    }

    SUBCASE("smooth path: estimate vanishes as sqrt(spacing)")
    {
        auto qv = [](double dt) {
            std::vector<double> p;
            for (double t = 0.0; t <= 10.0 + 1e-12; t += dt)
                p.push_back(std::sin(t));
            return sigma0_quadratic_variation(momentum_path(p, dt));
        };
        const double a = qv(0.01), b = qv(0.0025);
        CHECK(a < 0.1);
        CHECK(a / b == doctest::Approx(2.0).epsilon(0.02));
    }

    SUBCASE("sample mean over 100 repetitions lies within 3 standard errors of sigma^2")
    {
        const double sigma = 0.8;
        auto sim = [&](std::uint64_t seed) {
            LangevinTDParams p;
            p.force = std::make_shared<ZeroForce>();
            p.sigma0 = sigma;
            return simulate_langevin_td(p, {Scheme::EulerMaruyama, 0.01, 1000, 1, seed, false});
        };
        const auto ens = generate_ensemble(sim, 100, 31, 1.0);
        std::vector<double> est;
        for (const auto& tr : ens.paths) {
            const double s = sigma0_quadratic_variation(tr);
            est.push_back(s * s);
        }
        const double mean = std::accumulate(est.begin(), est.end(), 0.0) / 100.0;
        double ss = 0.0;
        for (double v : est)
            ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / 99.0 / 100.0);
        CHECK(std::abs(mean - sigma * sigma) < 3.0 * se);
    }

    CHECK_THROWS_AS(sigma0_quadratic_variation(momentum_path({1.0}, 0.1)), ArgumentError);
}

TEST_CASE("fluctuation-dissipation conversions")
{
    CHECK(zeta_from_sigma(0.0, 3.0) == 0.0);
    CHECK(zeta_from_sigma(0.097, 1.0) == doctest::Approx(0.0047045).epsilon(1e-12));
    for (double s : {0.01, 0.097, 0.5, 3.0})
        CHECK(sigma_from_zeta(zeta_from_sigma(s, 1.7), 1.7) == doctest::Approx(s).epsilon(1e-15));
    CHECK_THROWS_AS(zeta_from_sigma(-0.1, 1.0), ArgumentError);
    CHECK_THROWS_AS(sigma_from_zeta(0.1, 0.0), ArgumentError);
}
