#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tdcg/trj_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "tdcg_cli_test";

int run_cli(const std::string& args, const std::string& tag = "cli")
{
    const std::string cmd = std::string(TDCG_CLI_PATH) + ' ' + args + " > " + (kWork / (tag + ".out")).string() +
                            " 2> " + (kWork / (tag + ".err")).string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_file(const std::string& name, const std::string& text)
{
    const fs::path p = kWork / name;
    std::ofstream(p) << text;
    return p;
}

const char* kGle = R"([gle]
alpha = 0.1
eta = 0.1
tau = 0.5
beta = 1.0
q0 = 0.0
p0 = 0.1

[langevin]
dt = 0.01
t_final = 1.0
record_stride = 2
n_paths = 24
seed = 5
scheme = "em"

[basis_t]
n_basis = 4
degree = 3

[basis_r]
n_basis = 4
degree = 3
)";

const char* kTinyReproduce = R"(
[fit]
data_stride = 1

[friction]
qv_t_final = 15.0
qv_fine_steps = 3600
qv_stride = 20
gk_paths = 20
gk_dt = 0.01
gk_t_final = 10.0
gk_record_stride = 5
gk_max_lag = 40
)";

bool same_tree(const fs::path& a, const fs::path& b)
{
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (slurp(e.path()) != slurp(b / e.path().filename()))
            return false;
        ++n;
    }
    return n > 0;
}

}  // namespace

TEST_CASE("command-line runner")
{
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const auto gle = write_file("gle.toml", kGle);

    SUBCASE("validation failures exit with 2")
    {
        CHECK(run_cli("") == 2);
        CHECK(run_cli("simulate") == 2);
        CHECK(run_cli("frobnicate") == 2);
        CHECK(run_cli("fit --data x --mode sideways --config " + gle.string()) == 2);

        const auto empty = write_file("empty.toml", "");
        CHECK(run_cli("simulate --config " + empty.string(), "empty") == 2);
        const auto err = slurp(kWork / "empty.err");
        CHECK(err.find("gle") != std::string::npos);
        CHECK(err.find("reference") != std::string::npos);

        const auto unknown = write_file("unknown.toml", std::string(kGle) + "speed = 3\n[extra]\nx = 1\n");
        CHECK(run_cli("simulate --config " + unknown.string(), "unknown") == 2);
        const auto uerr = slurp(kWork / "unknown.err");
        CHECK(uerr.find("basis_r.speed") != std::string::npos);
        CHECK(uerr.find("[extra]") != std::string::npos);

        const auto partial = write_file("partial.toml", "[gle]\nalpha = 0.1\n");
        CHECK(run_cli("simulate --config " + partial.string(), "partial") == 2);
        CHECK(slurp(kWork / "partial.err").find("langevin.n_paths") != std::string::npos);

        CHECK(run_cli("obs --which moments --data " + (kWork / "nowhere").string() + " --config " + gle.string()) ==
              2);
    }

    SUBCASE("simulate, analyze and re-run from the manifest")
    {
        const auto a = kWork / "a", b = kWork / "b";
        REQUIRE(run_cli("simulate --threads 4 --config " + gle.string() + " --out " + a.string()) == 0);
        const auto ens = tdcg::read_ensemble(a / "ensemble");
        CHECK(ens.n_paths() == 24);
        CHECK(ens.paths.front().size() == 51);
        CHECK(slurp(a / "manifest.txt").find("config_fnv1a64 ") != std::string::npos);

        REQUIRE(run_cli("simulate --threads 1 --config " + (a / "config.toml").string() + " --out " + b.string()) ==
                0);
        CHECK(same_tree(a / "ensemble", b / "ensemble"));
        CHECK(slurp(a / "config.canonical") == slurp(b / "config.canonical"));

        const auto c = kWork / "c", d = kWork / "d";
        REQUIRE(run_cli("simulate --seed 99 --config " + gle.string() + " --out " + c.string()) == 0);
        CHECK_FALSE(same_tree(a / "ensemble", c / "ensemble"));
        REQUIRE(run_cli("simulate --config " + (c / "config.toml").string() + " --out " + d.string()) == 0);
        CHECK(same_tree(c / "ensemble", d / "ensemble"));

        const std::string data = " --config " + gle.string() + " --data " + (a / "ensemble").string();
        REQUIRE(run_cli("obs --which moments --out " + (kWork / "m").string() + data) == 0);
        std::istringstream moments(slurp(kWork / "m" / "moments.csv"));
        std::string header, first;
        std::getline(moments, header);
        std::getline(moments, first);
        CHECK(header.substr(0, 2) == "t,");
        CHECK(first.substr(0, 2) == "0,");

        REQUIRE(run_cli("friction --mode qv --out " + (kWork / "qv").string() + data) == 0);
        CHECK(slurp(kWork / "qv" / "friction.txt").find("sigma0 ") == 0);

        REQUIRE(run_cli("fit --mode separable --out " + (kWork / "sep").string() + data) == 0);
        CHECK(fs::exists(kWork / "sep" / "separable_coefficients.csv"));
        CHECK(fs::exists(kWork / "sep" / "separable_field.csv"));
    }

    SUBCASE("reproduce exits with 3 when a criterion fails")
    {
        const auto strict = write_file("strict.toml", std::string(kGle) + kTinyReproduce +
                                                          "\n[acceptance]\nqv_target = 100.0\nqv_tol = 1.0\n");
        CHECK(run_cli("reproduce bench-tau05 --config " + strict.string() + " --out " + (kWork / "r1").string(),
                      "strict") == 3);
        CHECK(slurp(kWork / "strict.out").find("FAIL A1") != std::string::npos);
        CHECK(fs::exists(kWork / "r1" / "bench-tau05" / "summary.csv"));

        const auto loose = write_file("loose.toml", std::string(kGle) + kTinyReproduce +
                                                        "\n[acceptance]\nqv_target = 0.0\nqv_tol = 100.0\n"
                                                        "mean_rel_tol = 100.0\ngk_rel_tol = 100.0\n");
        CHECK(run_cli("reproduce bench-tau05 --config " + loose.string() + " --out " + (kWork / "r2").string(),
                      "loose") == 0);
        const auto out = slurp(kWork / "loose.out");
        CHECK(out.find("PASS A1") != std::string::npos);
        CHECK(out.find("PASS A2") != std::string::npos);
        CHECK(out.find("PASS A3") != std::string::npos);
    }

    fs::remove_all(kWork);
}
