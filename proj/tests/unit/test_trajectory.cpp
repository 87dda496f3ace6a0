#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "tdcg/errors.hpp"
#include "tdcg/trajectory.hpp"
#include "tdcg/trj_io.hpp"

using namespace tdcg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "tdcg_unit";
    fs::create_directories(dir);
    return dir / name;
}

Trajectory ramp(std::size_t n_frames, double dt, int dim = 1, std::size_t m = 1, bool forces = false)
{
    Trajectory t(dim, m, dt, std::vector<double>(m, 1.0), forces);
    const std::size_t w = static_cast<std::size_t>(dim) * m;
    std::vector<double> q(w), p(w), f(w);
    for (std::size_t i = 0; i < n_frames; ++i) {
        for (std::size_t c = 0; c < w; ++c) {
            q[c] = 0.5 * static_cast<double>(i) + static_cast<double>(c);
            p[c] = -static_cast<double>(i);
            f[c] = static_cast<double>(i * c);
        }
        if (forces)
            t.append(static_cast<double>(i) * dt, q, p, f);
        else
            t.append(static_cast<double>(i) * dt, q, p);
    }
    return t;
}

Trajectory random_traj(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> dim_d(1, 3), m_d(1, 5), n_d(0, 12);
    std::normal_distribution<double> g;
    const int dim = dim_d(rng);
    const auto m = static_cast<std::size_t>(m_d(rng));
    const bool forces = rng() % 2 == 0;
    std::vector<double> masses(m);
    for (auto& x : masses)
        x = 1.0 + std::abs(g(rng));
    const double dt = 0.01 + std::abs(g(rng));
    Trajectory t(dim, m, dt, masses, forces);
    const std::size_t w = static_cast<std::size_t>(dim) * m;
    std::vector<double> q(w), p(w), f(w);
    const int n = n_d(rng);
    for (int i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < w; ++c) {
            q[c] = g(rng);
            p[c] = g(rng);
            f[c] = g(rng) * 1e-300;  // subnormal range too
        }
        t.append(dt * i, q, p, forces ? std::span<const double>(f) : std::span<const double>());
    }
    return t;
}

}  // namespace

TEST_CASE("empty trajectory file is header plus masses and round-trips")
{
    Trajectory t(1, 1, 0.1, {1.0}, false);
    const auto path = scratch("empty.trj");
    write_trajectory(t, path);
    CHECK(fs::file_size(path) == 44 + 8);
    const auto back = read_trajectory(path);
    CHECK(back.size() == 0);
    CHECK(bitwise_equal(t, back));
}

TEST_CASE("one frame with forces round-trips all payload reals")
{
    Trajectory t(3, 2, 0.5, {1.0, 2.0}, true);
    std::vector<double> q{1, 2, 3, 4, 5, 6}, p{-1, -2, -3, -4, -5, -6}, f{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    t.append(0.0, q, p, f);
    const auto path = scratch("one.trj");
    write_trajectory(t, path);
    const auto back = read_trajectory(path);
    REQUIRE(back.size() == 1);
    CHECK(bitwise_equal(t, back));
    const auto fr = back.frame(0);
    CHECK(fr.positions.size() + fr.momenta.size() + fr.forces.size() == 18);
}

TEST_CASE("non-increasing times are rejected before writing")
{
    Trajectory t(1, 1, 0.1, {1.0}, false);
    const double x = 0.0;
    t.append(0.0, std::span(&x, 1), std::span(&x, 1));
    t.append(0.0, std::span(&x, 1), std::span(&x, 1));
    const auto path = scratch("bad_times.trj");
    fs::remove(path);
    CHECK_THROWS_AS(write_trajectory(t, path), InvariantError);
    CHECK_FALSE(fs::exists(path));
}

TEST_CASE("reader distinguishes bad magic, truncation and version")
{
    const auto good = scratch("good.trj");
    write_trajectory(ramp(3, 0.1, 2, 2, true), good);
    std::vector<char> bytes(fs::file_size(good));
    {
        std::ifstream in(good, std::ios::binary);
        in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    auto write_bytes = [](const fs::path& p, const std::vector<char>& b) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write(b.data(), static_cast<std::streamsize>(b.size()));
    };

    auto magic = bytes;
    magic[0] = 'X';
    write_bytes(scratch("magic.trj"), magic);
    CHECK_THROWS_AS(read_trajectory(scratch("magic.trj")), FormatError);

    auto trunc = bytes;
    trunc.resize(bytes.size() - 5);
    write_bytes(scratch("trunc.trj"), trunc);
    CHECK_THROWS_AS(read_trajectory(scratch("trunc.trj")), TruncationError);

    auto version = bytes;
    version[4] = 2;
    write_bytes(scratch("version.trj"), version);
    CHECK_THROWS_AS(read_trajectory(scratch("version.trj")), VersionError);

    CHECK_THROWS_AS(read_trajectory(scratch("does_not_exist.trj")), IoError);
}

TEST_CASE("round trip is bit-exact on random trajectories")
{
    std::mt19937_64 rng(11);
    const auto path = scratch("random.trj");
    for (int k = 0; k < 50; ++k) {
        const auto t = random_traj(rng);
        write_trajectory(t, path);
        CHECK(bitwise_equal(t, read_trajectory(path)));
    }
}

TEST_CASE("ensemble directory round trip")
{
    Ensemble e;
    e.beta = 2.5;
    for (int i = 0; i < 3; ++i)
        e.paths.push_back(ramp(4, 0.2, 1, 1, true));
    const auto dir = scratch("ens");
    fs::remove_all(dir);
    write_ensemble(e, dir);
    const auto back = read_ensemble(dir);
    CHECK(bitwise_equal(e, back));
    CHECK(back.beta == 2.5);
}

TEST_CASE("subsample")
{
    SUBCASE("fine grid to the diffusion-coefficient spacings")
    {
        // [0,150] at dt = 1/240 -> strides 200 and 45
        const auto fine = ramp(36001, 1.0 / 240.0);
        const auto a = subsample(fine, 200);
        CHECK(a.size() == 181);  // 180 increments
        CHECK(a.dt_nominal() == doctest::Approx(0.8333333333).epsilon(1e-9));
        const auto b = subsample(fine, 45);
        CHECK(b.size() == 801);  // 800 increments
        CHECK(b.dt_nominal() == doctest::Approx(0.1875).epsilon(1e-12));
        CHECK(b.times().back() == doctest::Approx(150.0));
    }
    SUBCASE("stride 1 is the identity")
    {
        const auto t = ramp(10, 0.15);
        CHECK(bitwise_equal(subsample(t, 1), t));
    }
    SUBCASE("stride 0 is rejected") { CHECK_THROWS_AS(subsample(ramp(3, 0.1), 0), ArgumentError); }
    SUBCASE("composition")
    {
        const auto t = ramp(97, 0.01);
        for (std::size_t a : {1u, 2u, 3u})
            for (std::size_t b : {1u, 4u, 5u})
                CHECK(bitwise_equal(subsample(subsample(t, a), b), subsample(t, a * b)));
    }
}

TEST_CASE("slice_time")
{
    const auto t = ramp(1001, 0.1);  // [0, 100]
    SUBCASE("inclusive window")
    {
        const auto s = slice_time(t, 0.0, 10.0);
        CHECK(s.size() == 101);
        Ensemble e;
        e.paths = {s};
        CHECK(drop_initial_frame(e).paths.front().size() == 100);
    }
    SUBCASE("full range is the identity") { CHECK(bitwise_equal(slice_time(t, 0.0, 100.0), t)); }
    SUBCASE("narrow window keeps one frame")
    {
        const auto s = slice_time(t, 5.0, 5.05);
        REQUIRE(s.size() == 1);
        CHECK(s.times()[0] == doctest::Approx(5.0));
    }
    SUBCASE("idempotent")
    {
        const auto once = slice_time(t, 3.3, 47.1);
        CHECK(bitwise_equal(slice_time(once, 3.3, 47.1), once));
    }
    SUBCASE("empty window") { CHECK_THROWS(slice_time(t, 200.0, 300.0)); }
}

TEST_CASE("CSV export has one row per particle and axis")
{
    const auto path = scratch("traj.csv");
    export_trajectory_csv(ramp(3, 0.1, 2, 2, true), path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "time,particle,axis,q,p,f");
    int rows = 0;
    while (std::getline(in, line))
        ++rows;
    CHECK(rows == 3 * 2 * 2);
}
