#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>

#include "tdcg/config.hpp"
#include "tdcg/errors.hpp"
#include "tdcg/pipeline.hpp"

using namespace tdcg;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> config_error_keys(const std::function<void()>& f)
{
    try {
        f();
    } catch (const ConfigError& e) {
        return e.keys();
    }
    return {"<no error>"};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing")
{
    const auto cfg = Config::parse(R"(
# comment
[a]
x = 1
y = 2.5e-3   # trailing comment
name = "hi # not a comment"
on = true
list = [0.1, 2, "s"]

[b]
neg = -4
)");
    CHECK(cfg.integer("a", "x") == 1);
    CHECK(cfg.number("a", "x") == 1.0);
    CHECK(cfg.number("a", "y") == 2.5e-3);
    CHECK(cfg.string("a", "name") == "hi # not a comment");
    CHECK(cfg.boolean_or("a", "on", false));
    CHECK(cfg.integer("b", "neg") == -4);
    CHECK(cfg.number_or("b", "missing", 7.0) == 7.0);
    CHECK(cfg.has_table("b"));
    CHECK_FALSE(cfg.has("b", "x"));
    CHECK_THROWS_AS(cfg.numbers("a", "list"), ConfigError);
    CHECK_THROWS_AS(cfg.integer("a", "y"), ConfigError);
    CHECK_THROWS_AS(cfg.string("a", "x"), ConfigError);
    CHECK_THROWS_AS(cfg.number("b", "missing"), ConfigError);

    SUBCASE("malformed input names the line")
    {
        for (const char* bad : {"x = 1", "[a]\nx =", "[a]\nx = 1\nx = 2", "[a]\n[a]", "[a\n", "[a]\ns = \"open",
                                "[a]\nv = [1, 2", "[a]\nv = 1 2", "[a]\nv = 1.2.3"}) {
            CAPTURE(bad);
            CHECK_THROWS_AS(Config::parse(bad), FormatError);
        }
        try {
            Config::parse("[a]\nx = 1\n\ny = ?");
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
    }
}

TEST_CASE("unknown and missing keys are listed")
{
    const ConfigSchema schema{{"a", {"x", "y"}}, {"b", {"z"}}};
    const auto cfg = Config::parse("[a]\nx = 1\nq = 2\nw = 3\n[c]\nk = 1\n");
    const auto unknown = config_error_keys([&] { cfg.reject_unknown(schema); });
    CHECK(unknown == std::vector<std::string>{"a.q", "a.w", "[c]"});
    const auto missing = config_error_keys([&] { cfg.require({"a.x", "a.y", "b.z"}); });
    CHECK(missing == std::vector<std::string>{"a.y", "b.z"});
    CHECK_NOTHROW(Config::parse("[a]\nx = 1\n").reject_unknown(schema));

    SUBCASE("empty config lists every required benchmark key")
    {
        const auto keys = config_error_keys([] { BenchSetup::from_config(Config::parse("")); });
        CHECK(keys.size() == 15);
        CHECK(std::find(keys.begin(), keys.end(), "gle.tau") != keys.end());
    }
}

TEST_CASE("canonical text and hashing")
{
    const auto a = Config::parse("[b]\nz = 1\n[a]\ny = 0.5\nx = \"s\"\n");
    const auto b = Config::parse("# reordered\n[a]\nx = \"s\"   \ny = 5e-1\n\n[b]\nz = 1\n");
    CHECK(a.canonical() == "a.x = \"s\"\na.y = 0.5\nb.z = 1\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(fnv1a64(a.canonical()) == fnv1a64(b.canonical()));
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

    auto c = a;
    c.set("b", "z", std::int64_t{2});
    CHECK(c.canonical() != a.canonical());
    CHECK(c.integer("b", "z") == 2);
    CHECK(Config::parse(c.to_toml()).canonical() == c.canonical());
}

TEST_CASE("shipped configs")
{
    for (const char* name : {"bench-tau05", "bench-tau01", "fluid-pipeline"}) {
        CAPTURE(name);
        const auto cfg = Config::load(fs::path(TDCG_CONFIG_DIR) / (std::string(name) + ".toml"));
        CHECK_NOTHROW(cfg.reject_unknown(config_schema()));
        CHECK(Config::parse(cfg.to_toml()).canonical() == cfg.canonical());
    }

    SUBCASE("benchmark protocols")
    {
        const auto s05 = BenchSetup::from_config(Config::load(fs::path(TDCG_CONFIG_DIR) / "bench-tau05.toml"));
        CHECK(s05.n_paths == 2000);
        CHECK(s05.t_final == 5.0);
        CHECK(s05.n_steps() / s05.record_stride == 1000);
        CHECK(s05.b_n_basis == 10);
        CHECK(s05.qv_fine_steps / s05.qv_stride == 180);
        const auto s01 = BenchSetup::from_config(Config::load(fs::path(TDCG_CONFIG_DIR) / "bench-tau01.toml"));
        CHECK(s01.t_final == 12.0);
        CHECK(s01.n_steps() / s01.record_stride == 1000);
        CHECK(s01.b_n_basis == 15);
        CHECK(s01.qv_fine_steps / s01.qv_stride == 800);
    }

    SUBCASE("fluid setup reads the equilibrium table")
    {
        auto cfg = Config::load(fs::path(TDCG_CONFIG_DIR) / "fluid-pipeline.toml");
        const auto s = FluidSetup::from_config(cfg);
        CHECK(s.eq_paths == 4);
        CHECK(s.eq_equilibration_steps == 10000);
        CHECK(s.eq_n_steps == 2000);
        CHECK(s.t_n_basis == 24);
        CHECK(s.r_grid.n_basis == 48);
        CHECK(s.box().lengths[0] == doctest::Approx(8.55));
        cfg.set("equilibrium", "bogus", std::int64_t{1});
        CHECK(config_error_keys([&] { FluidSetup::from_config(cfg); }) ==
              std::vector<std::string>{"equilibrium.bogus"});
    }
}

TEST_CASE("seeds and manifests")
{
    CHECK(derive_seed(1, "fine") != derive_seed(1, "fine-eq"));
    CHECK(derive_seed(1, "fine") != derive_seed(2, "fine"));
    CHECK(derive_seed(1, "fine") == derive_seed(1, "fine"));

    const auto dir = fs::temp_directory_path() / "tdcg_manifest_test";
    fs::remove_all(dir);
    auto cfg = Config::parse("[langevin]\nseed = 3 # original\n");
    cfg.set("langevin", "seed", std::int64_t{11});
    write_manifest(dir, cfg, 11, 4, "tdcg simulate --seed 11");
    const auto manifest = slurp(dir / "manifest.txt");
    CHECK(manifest.find("seed 11\n") != std::string::npos);
    CHECK(manifest.find("threads 4\n") != std::string::npos);
    CHECK(manifest.find("version " + version_string()) != std::string::npos);
    const auto rerun = Config::load(dir / "config.toml");
    CHECK(rerun.integer("langevin", "seed") == 11);
    CHECK(rerun.canonical() == slurp(dir / "config.canonical"));
    CHECK(slurp(dir / "config.source.toml").find("# original") != std::string::npos);
    fs::remove_all(dir);
}
