#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snowwave/errors.hpp"
#include "snowwave/runner.hpp"

using namespace snowwave;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "snowwave_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SNOWWAVE_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("ini parsing: sections, comments, diagnostics") {
    const IniFile ini = IniFile::parse("[run]\nexperiment = eigs # trailing\n; comment\n"
                                       "seed = 7\n[physics]\nc = 2.5\n");
    CHECK(ini.get("run", "experiment", "") == "eigs");
    CHECK(ini.get_long("run", "seed", 0) == 7);
    CHECK(ini.get_double("physics", "c", 0.0) == 2.5);
    CHECK(ini.get_double("physics", "nu", 1.5) == 1.5); // fallback

    CHECK_THROWS_AS(IniFile::parse("[run\n"), ValidationError);
    CHECK_THROWS_AS(IniFile::parse("[run]\nnonsense line\n"), ValidationError);
    CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse("[run]\ntypo_key = 1\n")),
                    ValidationError);
    CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse("[unknown_section]\nx = 1\n")),
                    ValidationError);
    CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse("[run]\nexperiment = bogus\n")),
                    ValidationError);
    CHECK_THROWS_AS(RunConfig::from_ini(IniFile::parse("[physics]\neps = 0\n")),
                    ValidationError);
}

TEST_CASE("config echo round-trips through the parser") {
    RunConfig c;
    c.experiment = ExperimentKind::SolveLinear;
    c.seed = 1234;
    c.h_target = 0.11;
    c.params.eps = 0.02;
    const std::string echo = c.echo_ini();
    const RunConfig back = RunConfig::from_ini(IniFile::parse(echo));
    CHECK(back.echo_ini() == echo); // fixed point
    CHECK(back.seed == c.seed);
    CHECK(back.h_target == c.h_target);
    CHECK(back.params.eps == c.params.eps);
}

TEST_CASE("mesh experiment writes artifacts; reruns are byte-identical") {
    RunConfig c;
    c.experiment = ExperimentKind::Mesh;
    c.domain.kind = "koch";
    c.domain.level = 1;
    c.h_target = 0.12;
    const fs::path dir_a = fresh_dir("mesh_a");
    const fs::path dir_b = fresh_dir("mesh_b");
    c.out_dir = dir_a.string();
    run_experiment(c);
    c.out_dir = dir_b.string();
    c.threads = 3;
    run_experiment(c);
    for (const char* name : {"polygon.txt", "mesh.txt", "mesh.json"})
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    CHECK(fs::exists(dir_a / "manifest.json"));
}

TEST_CASE("solve-westervelt with alpha = 0 reproduces solve-linear trajectories") {
    RunConfig lin;
    lin.experiment = ExperimentKind::SolveLinear;
    lin.domain.kind = "square";
    lin.domain.side = 1.0;
    lin.domain.center = {0.5, 0.5};
    lin.h_target = 0.14;
    lin.n_modes = 6;
    lin.grid = {5e-3, 60};
    lin.params.alpha = 0.0;
    lin.data.u0_amplitude = 0.01;
    const fs::path dir_lin = fresh_dir("lin");
    lin.out_dir = dir_lin.string();
    run_experiment(lin);

    RunConfig west = lin;
    west.experiment = ExperimentKind::SolveWestervelt;
    west.override_gate = true; // alpha = 0 has no meaningful gate
    const fs::path dir_west = fresh_dir("west");
    west.out_dir = dir_west.string();
    run_experiment(west);

    CHECK(slurp(dir_lin / "trajectory.csv") == slurp(dir_west / "trajectory.csv"));
    CHECK(slurp(dir_lin / "energy.csv") == slurp(dir_west / "energy.csv"));
}

TEST_CASE("westervelt artifacts are thread-count invariant") {
    RunConfig c;
    c.experiment = ExperimentKind::SolveWestervelt;
    c.domain.kind = "koch";
    c.domain.level = 1;
    c.h_target = 0.14;
    c.n_modes = 6;
    c.grid = {5e-3, 60};
    c.n_probes = 16;
    c.data.u0_amplitude = 1.0;
    c.data.auto_scale = true;
    const fs::path dir_a = fresh_dir("wt1");
    const fs::path dir_b = fresh_dir("wt4");
    c.threads = 1;
    c.out_dir = dir_a.string();
    run_experiment(c);
    c.threads = 4;
    c.mosco.n_threads = 4;
    c.out_dir = dir_b.string();
    run_experiment(c);
    for (const char* name : {"trajectory.csv", "iterations.csv", "energy.csv", "westervelt.json"})
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
}

TEST_CASE("eigs and verify experiments produce reports") {
    RunConfig c;
    c.experiment = ExperimentKind::Eigs;
    c.domain.kind = "square";
    c.domain.side = 1.0;
    c.domain.center = {0.5, 0.5};
    c.h_target = 0.15;
    c.n_modes = 4;
    const fs::path dir = fresh_dir("eigs");
    c.out_dir = dir.string();
    run_experiment(c);
    CHECK(fs::exists(dir / "eigs.json"));
    CHECK(fs::exists(dir / "basis" / "index.txt"));
    CHECK(fs::exists(dir / "basis" / "mode_0.txt"));

    RunConfig v;
    v.experiment = ExperimentKind::Verify;
    v.verify.which = "xie";
    v.verify.xie_trials = 5;
    v.verify.xie_n = 3;
    v.verify.xie_grid = 12;
    const fs::path vdir = fresh_dir("verify");
    v.out_dir = vdir.string();
    run_experiment(v);
    const std::string report = slurp(vdir / "verify.json");
    CHECK(report.find("\"violations\": 0") != std::string::npos);
}

TEST_CASE("cli binary: subcommands, exit codes, manifest replay") {
    const fs::path dir = fresh_dir("cli");
    const fs::path cfg = dir / "run.ini";
    {
        std::ofstream os(cfg);
        os << "[run]\nexperiment = mesh\nseed = 9\n[domain]\nkind = koch\nlevel = 1\n"
           << "[mesh]\nh_target = 0.2\n";
    }
    CHECK(run_cli("mesh --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
    CHECK(fs::exists(dir / "a" / "mesh.txt"));

    // repeat from the manifest: byte-identical artifacts
    CHECK(run_cli("mesh --config " + (dir / "a" / "manifest.json").string() + " --out " +
                  (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "mesh.txt") == slurp(dir / "b" / "mesh.txt"));
    CHECK(slurp(dir / "a" / "mesh.json") == slurp(dir / "b" / "mesh.json"));

    // validation failure -> exit 2
    const fs::path bad = dir / "bad.ini";
    {
        std::ofstream os(bad);
        os << "[run]\nexperiment = mesh\n[mesh]\nh_target = -1\n";
    }
    CHECK(run_cli("mesh --config " + bad.string() + " --out " + (dir / "c").string()) == 2);

    // smallness-gate failure -> exit 4
    const fs::path gate = dir / "gate.ini";
    {
        std::ofstream os(gate);
        os << "[run]\nexperiment = solve-westervelt\n[domain]\nkind = square\nside = 1\n"
           << "center_x = 0.5\ncenter_y = 0.5\n[mesh]\nh_target = 0.2\n"
           << "[spectral]\nn_modes = 4\n[time]\ndt = 0.01\nn_steps = 20\n"
           << "[data]\nu0_amplitude = 1000\n[westervelt]\nn_probes = 16\n";
    }
    CHECK(run_cli("solve-westervelt --config " + gate.string() + " --out " +
                  (dir / "d").string()) == 4);

    // no subcommand -> CLI usage error (nonzero)
    CHECK(run_cli("") != 0);
}
