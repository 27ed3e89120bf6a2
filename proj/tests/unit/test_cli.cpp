#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "mvjump_cli_log.txt";
    const std::string cmd = std::string(MVJUMP_CLI_PATH) + " " + args + " > " + log.string() +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

fs::path config(const std::string& name) { return fs::path(MVJUMP_CONFIG_DIR) / name; }

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("run: lq_sigma0 benchmark passes and writes its artifacts") {
    const auto out = fresh_dir("mvjump_cli_lq0");
    const auto res = run_cli("run --config " + config("lq_sigma0.json").string() + " --out " +
                             out.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("seed: 1") != std::string::npos);
    CHECK(fs::exists(out / "riccati.csv"));
    CHECK(fs::exists(out / "hjb_report.json"));
    CHECK(slurp(out / "hjb_report.json").find("\"pass\": true") != std::string::npos);
}

TEST_CASE("run: heat kernel scenario reports its L1 error") {
    const auto out = fresh_dir("mvjump_cli_heat");
    const auto res = run_cli("run --threads 4 --config " + config("heat_kernel.json").string() +
                             " --out " + out.string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(out / "fp_solution.csv"));
    const auto report = slurp(out / "fp_report.json");
    CHECK(report.find("l1_error") != std::string::npos);
    CHECK(report.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("run: missing atoms field is a schema error naming the field") {
    const auto out = fresh_dir("mvjump_cli_badcfg");
    const fs::path cfg = out / "bad.json";
    std::ofstream(cfg) << R"({
      "kind": "simulate",
      "seed": 1,
      "horizon": {"T": 0.1, "dt": 0.01},
      "particles": {"N": 8, "init": {"kind": "point", "x0": 0.0}},
      "model": {"alpha": {"preset": "zero"}, "beta": {"preset": "zero"},
                "gamma": {"preset": "zero"}},
      "jumps": {}
    })";
    const auto res = run_cli("run --config " + cfg.string() + " --out " + out.string());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("atoms") != std::string::npos);
}

TEST_CASE("run: unknown scenario kind is an error") {
    const auto out = fresh_dir("mvjump_cli_badkind");
    const fs::path cfg = out / "bad_kind.json";
    std::ofstream(cfg) << R"({"kind": "warp_drive", "seed": 1})";
    const auto res = run_cli("run --config " + cfg.string() + " --out " + out.string());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("warp_drive") != std::string::npos);
}

TEST_CASE("run + compare: reproducible across reruns and thread counts") {
    const auto out1 = fresh_dir("mvjump_cli_rep1");
    const auto out2 = fresh_dir("mvjump_cli_rep2");
    const auto out4 = fresh_dir("mvjump_cli_rep4");
    const std::string cfg = config("simulate_mean_field.json").string();
    CHECK(run_cli("run --threads 1 --config " + cfg + " --out " + out1.string()).exit_code == 0);
    CHECK(run_cli("run --threads 1 --config " + cfg + " --out " + out2.string()).exit_code == 0);
    CHECK(run_cli("run --threads 4 --config " + cfg + " --out " + out4.string()).exit_code == 0);

    CHECK(slurp(out1 / "simulation.csv") == slurp(out2 / "simulation.csv"));
    CHECK(slurp(out1 / "simulation.csv") == slurp(out4 / "simulation.csv"));
    CHECK(slurp(out1 / "ensemble_final.csv") == slurp(out4 / "ensemble_final.csv"));

    CHECK(run_cli("compare " + out1.string() + " " + out4.string()).exit_code == 0);

    // Tampering with one value trips the tolerance (exit 2)...
    auto csv = slurp(out2 / "simulation.csv");
    csv.insert(csv.rfind(',') + 1, "9");  // prepend a digit to the last field
    std::ofstream(out2 / "simulation.csv", std::ios::binary) << csv;
    CHECK(run_cli("compare " + out1.string() + " " + out2.string()).exit_code == 2);

    // ...and truncating rows is a shape mismatch (exit 1).
    std::ofstream(out2 / "simulation.csv", std::ios::binary) << "step,time\n0,0\n";
    CHECK(run_cli("compare " + out1.string() + " " + out2.string()).exit_code == 1);
}

TEST_CASE("run: every verification scenario kind works end to end") {
    const auto out = fresh_dir("mvjump_cli_kinds");

    // verify_hjbi (shipped saddle game)
    auto res = run_cli("run --config " + config("saddle_game.json").string() + " --out " +
                       (out / "hjbi").string());
    CHECK(res.exit_code == 0);
    CHECK(slurp(out / "hjbi" / "hjbi_report.json").find("\"pass\": true") != std::string::npos);

    // verify_nash (shipped decoupled game)
    res = run_cli("run --config " + config("decoupled_nash.json").string() + " --out " +
                  (out / "nash").string());
    CHECK(res.exit_code == 0);
    CHECK(slurp(out / "nash" / "nash_report.json").find("\"pass\": true") != std::string::npos);

    // verify_hjb with the consumption candidate
    const fs::path hjb_cfg = out / "verify_consumption.json";
    std::ofstream(hjb_cfg) << R"({
      "kind": "verify_hjb", "seed": 0,
      "horizon": {"T": 1.0, "dt": 0.1},
      "grid": {"x_min": -8.0, "x_max": 8.0, "dx": 0.02},
      "jumps": {"atoms": [{"zeta": 0.3, "intensity": 1.5}]},
      "candidate": {"kind": "consumption", "theta": 1.0, "rho": 0.1, "sigma0": 0.4},
      "box": {"s": {"min": 0.0, "max": 1.0, "count": 3},
              "x": {"min": 0.5, "max": 2.0, "count": 3},
              "scenarios": [{"kind": "normal", "mean": 1.0, "stddev": 0.3}]},
      "controls": {"u_min": 0.05, "u_max": 2.0, "du": 0.01},
      "tolerances": {"residual": 0.001}
    })";
    res = run_cli("run --config " + hjb_cfg.string() + " --out " + (out / "hjb").string());
    CHECK(res.exit_code == 0);
    CHECK(slurp(out / "hjb" / "hjb_report.json").find("\"pass\": true") != std::string::npos);

    // check_characteristic (reduced particle count for speed)
    const fs::path char_cfg = out / "char_quick.json";
    std::ofstream(char_cfg) << R"({
      "kind": "check_characteristic", "seed": 5,
      "horizon": {"T": 0.1, "dt": 0.01},
      "particles": {"N": 5000, "init": {"kind": "normal", "mean": 0.0, "stddev": 1.0}},
      "model": {"alpha": {"preset": "constant", "value": 1.0},
                "beta": {"preset": "zero"}, "gamma": {"preset": "zero"}},
      "jumps": {"atoms": []},
      "control": {"preset": "none"},
      "check": {"y_min": -3.0, "y_max": 3.0, "y_step": 1.0, "h": 0.01, "times": [0.05],
                "slack": 0.05}
    })";
    res = run_cli("run --config " + char_cfg.string() + " --out " + (out / "char").string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(out / "char" / "characteristic.csv"));
    CHECK(slurp(out / "char" / "characteristic_report.json").find("\"pass\": true") !=
          std::string::npos);

    // feynman_kac (reduced grid and path count)
    const fs::path fk_cfg = out / "fk_quick.json";
    std::ofstream(fk_cfg) << R"({
      "kind": "feynman_kac", "seed": 9,
      "horizon": {"T": 0.5, "dt": 0.001},
      "grid": {"x_min": -6.0, "x_max": 6.0, "dx": 0.05},
      "model": {"alpha": {"preset": "zero"},
                "beta": {"preset": "constant", "value": 1.0},
                "gamma": {"preset": "zero"}},
      "jumps": {"atoms": []},
      "control": {"preset": "none"},
      "initial_density": {"kind": "normal", "mean": 0.0, "stddev": 0.5},
      "probes": [-1.0, 0.0, 1.0],
      "paths": 2000,
      "tolerances": {"cross_solver": 0.01}
    })";
    res = run_cli("run --config " + fk_cfg.string() + " --out " + (out / "fk").string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(out / "fk" / "feynman_kac.csv"));
    CHECK(slurp(out / "fk" / "fk_report.json").find("\"pass\": true") != std::string::npos);
}

TEST_CASE("run: lq_benchmark with a simulation study writes performance.csv") {
    const auto out = fresh_dir("mvjump_cli_lqsim");
    const fs::path cfg = out / "lq_sim.json";
    std::ofstream(cfg) << R"({
      "kind": "lq_benchmark", "seed": 37,
      "sigma": 0.5, "riccati_dt": 1e-4,
      "horizon": {"T": 1.0, "dt": 0.001},
      "grid": {"x_min": -8.0, "x_max": 8.0, "dx": 0.02},
      "jumps": {"atoms": []},
      "box": {"s": {"min": 0.0, "max": 1.0, "count": 5},
              "x": {"min": -2.0, "max": 2.0, "count": 5},
              "scenarios": [{"kind": "normal", "mean": 0.0, "stddev": 1.0}]},
      "controls": {"u_min": -4.0, "u_max": 4.0, "du": 0.025},
      "tolerances": {"residual": 0.001},
      "simulation": {"N": 500, "dt": 0.01, "x0": 1.0, "replicates": 4, "deltas": [0.5]}
    })";
    const auto res = run_cli("run --threads 4 --config " + cfg.string() + " --out " +
                             out.string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(out / "performance.csv"));
    CHECK(slurp(out / "hjb_report.json").find("\"pass\": true") != std::string::npos);
}

TEST_CASE("run: MVJUMP_THREADS env var stands in for --threads") {
    const auto out1 = fresh_dir("mvjump_cli_env1");
    const auto out2 = fresh_dir("mvjump_cli_env2");
    const std::string cfg = config("simulate_mean_field.json").string();
    CHECK(run_cli("run --threads 1 --config " + cfg + " --out " + out1.string()).exit_code == 0);
    const fs::path log = fs::temp_directory_path() / "mvjump_cli_env_log.txt";
    const std::string cmd = "MVJUMP_THREADS=4 " + std::string(MVJUMP_CLI_PATH) + " run --config " +
                            cfg + " --out " + out2.string() + " > " + log.string() + " 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(slurp(out1 / "simulation.csv") == slurp(out2 / "simulation.csv"));
}

TEST_CASE("run: seed override is honoured and printed") {
    const auto out = fresh_dir("mvjump_cli_seed");
    const auto res = run_cli("run --config " + config("consumption.json").string() + " --out " +
                             out.string() + " --seed 777");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("seed: 777") != std::string::npos);
    CHECK(fs::exists(out / "consumption.csv"));
    CHECK(fs::exists(out / "consumption_report.json"));
}
