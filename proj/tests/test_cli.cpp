// End-to-end tests of the command-line tool: exit codes, output formats and
// determinism, driven through real subprocesses.

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef PROXSG_CLI_PATH
#error "PROXSG_CLI_PATH must point at the built command-line binary"
#endif

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("proxsg_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path scratch_file(const std::string& name) {
  return scratch_dir() / name;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  REQUIRE(out.good());
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_path =
      scratch_file("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err_path =
      scratch_file("stderr_" + std::to_string(counter) + ".txt");
  ++counter;

  const std::string cmd = std::string(PROXSG_CLI_PATH) + " " + args + " > '" +
                          out_path.string() + "' 2> '" + err_path.string() +
                          "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  if (status != -1 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

// A small synthetic least-squares problem every run-flavored test shares.
fs::path tiny_config() {
  static const fs::path path = [] {
    const fs::path p = scratch_file("tiny.json");
    write_file(p, R"({
      "problem": {"synthetic": {"loss": "least_squares",
                                "n": 20, "d": 4, "condition": 5, "seed": 3}},
      "algo": "saga", "b": 2, "max_iters": 200, "cadence": 50
    })");
    return p;
  }();
  return path;
}

constexpr const char* kTrajectoryHeader =
    "k,subopt,avg_subopt,sigma_sq,grad_evals,gamma\n";

}  // namespace

TEST_CASE("cli: --help exits zero and lists the subcommands") {
  const auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("run") != std::string::npos);
  CHECK(r.out.find("grid") != std::string::npos);
  CHECK(r.out.find("optimal-b") != std::string::npos);
  CHECK(r.out.find("verify") != std::string::npos);
}

TEST_CASE("cli: run emits a trajectory CSV and a summary line") {
  const auto r =
      run_cli("run --config '" + tiny_config().string() + "' --seed 7");
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind(kTrajectoryHeader, 0) == 0);
  // rows at k = 0, 50, 100, 150 plus the final state at k = 200
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
  CHECK(r.err.find("algo=saga") != std::string::npos);
  CHECK(r.err.find("gamma=") != std::string::npos);

  const auto again =
      run_cli("run --config '" + tiny_config().string() + "' --seed 7");
  CHECK(again.out == r.out);

  const auto other =
      run_cli("run --config '" + tiny_config().string() + "' --seed 8");
  CHECK(other.exit_code == 0);
  CHECK(other.out != r.out);
}

TEST_CASE("cli: --out writes the same bytes a second invocation writes") {
  const fs::path csv = scratch_file("traj.csv");
  const std::string cmd = "run --config '" + tiny_config().string() +
                          "' --seed 7 --out '" + csv.string() + "'";

  const auto r = run_cli(cmd);
  CHECK(r.exit_code == 0);
  // With --out the trajectory goes to the file and the summary to stdout.
  CHECK(r.err.empty());
  CHECK(r.out.find("algo=saga") != std::string::npos);
  const std::string first = slurp(csv);
  CHECK(first.rfind(kTrajectoryHeader, 0) == 0);

  const auto again = run_cli(cmd);
  CHECK(again.exit_code == 0);
  CHECK(slurp(csv) == first);
}

TEST_CASE("cli: config errors exit 1 and name the offender") {
  SUBCASE("unknown key") {
    const fs::path p = scratch_file("bad_key.json");
    write_file(p, R"({"blah": 1})");
    const auto r = run_cli("run --config '" + p.string() + "'");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("blah") != std::string::npos);
  }
  SUBCASE("bad loss value") {
    const fs::path p = scratch_file("bad_loss.json");
    write_file(p, R"({"problem": {"synthetic": {
        "loss": "huber", "n": 10, "d": 2, "condition": 2, "seed": 1}}})");
    const auto r = run_cli("run --config '" + p.string() + "'");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("least_squares") != std::string::npos);
  }
  SUBCASE("no problem given") {
    const fs::path p = scratch_file("no_problem.json");
    write_file(p, R"({"algo": "saga"})");
    const auto r = run_cli("run --config '" + p.string() + "'");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("no problem") != std::string::npos);
  }
  SUBCASE("unknown command-line flag") {
    const auto r = run_cli("run --definitely-not-a-flag");
    CHECK(r.exit_code == 1);
  }
  SUBCASE("unsafe step size is refused without the escape hatch") {
    const auto r = run_cli("run --config '" + tiny_config().string() +
                           "' --gamma 500");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("allow_unsafe_step") != std::string::npos);
  }
}

TEST_CASE("cli: data errors exit 2") {
  SUBCASE("missing dataset file") {
    const fs::path p = scratch_file("missing_data.json");
    write_file(p, R"({"problem": {"dataset": "/nonexistent/file.svm"}})");
    const auto r = run_cli("run --config '" + p.string() + "'");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("dataset") != std::string::npos);
  }
  SUBCASE("malformed dataset reports the line") {
    const fs::path data = scratch_file("bad.svm");
    write_file(data, "1 0:1\n");
    const fs::path p = scratch_file("bad_data.json");
    write_file(p, std::string(R"({"problem": {"dataset": ")") +
                      data.string() + R"("}})");
    const auto r = run_cli("run --config '" + p.string() + "'");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("line 1") != std::string::npos);
  }
}

TEST_CASE("cli: verify passes, filters, and demonstrably bites") {
  SUBCASE("full suite passes") {
    const auto r = run_cli("verify");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("all checks passed") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
  }
  SUBCASE("check filter and CSV output") {
    const fs::path p = scratch_file("checks.json");
    write_file(p, R"({"checks": ["quantizer-moments"]})");
    const fs::path csv = scratch_file("reports.csv");
    const auto r = run_cli("verify --config '" + p.string() + "' --out '" +
                           csv.string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("quantizer-moments") != std::string::npos);
    CHECK(r.out.find("unbiased-exact") == std::string::npos);
    const std::string reports = slurp(csv);
    CHECK(reports.rfind(
              "check_id,instance,max_violation,tolerance,passed,samples,notes",
              0) == 0);
    CHECK(reports.find("quantizer-moments") != std::string::npos);
  }
  SUBCASE("a weakened constant must fail with exit 3") {
    const fs::path p = scratch_file("checks_demo.json");
    write_file(p, R"({"checks": ["quantizer-moments"]})");
    const fs::path csv = scratch_file("reports_demo.csv");
    const auto r = run_cli("verify --demo-failure --config '" + p.string() +
                           "' --out '" + csv.string() + "'");
    CHECK(r.exit_code == 3);
    CHECK(r.out.find("CHECKS FAILED") != std::string::npos);
    CHECK(r.out.find("FAIL") != std::string::npos);
    CHECK(r.out.find("weakened-A") != std::string::npos);
    const std::string reports = slurp(csv);
    CHECK(reports.find("second-moment") != std::string::npos);
    CHECK(reports.find(",false,") != std::string::npos);
  }
}

TEST_CASE("cli: a diverging run exits 4") {
  const fs::path p = scratch_file("diverge.json");
  write_file(p, R"({
    "problem": {"synthetic": {"loss": "least_squares",
                              "n": 20, "d": 4, "condition": 5, "seed": 3}},
    "algo": "sgd", "b": 20, "gamma": 1e6,
    "allow_unsafe_step": true, "max_iters": 500, "cadence": 1
  })");
  const auto r = run_cli("run --config '" + p.string() + "'");
  CHECK(r.exit_code == 4);
  CHECK(r.err.find("DIVERGED") != std::string::npos);
}

TEST_CASE("cli: grid summarizes work per batch size") {
  const fs::path p = scratch_file("grid.json");
  write_file(p, R"({
    "problem": {"synthetic": {"loss": "least_squares",
                              "n": 16, "d": 3, "condition": 3, "seed": 5}},
    "algo": "saga", "grid": [1, 2], "seeds": 2,
    "eps_rel": 1e-3, "max_iters": 100000
  })");
  const auto r = run_cli("grid --config '" + p.string() + "'");
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("algo,b,gamma,seed,iters,grad_evals,rel_subopt\n", 0) ==
        0);
  // header plus 2 batch sizes x 2 seeds
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 5);
  CHECK(r.err.find("b=1 median_grad_evals=") != std::string::npos);
  CHECK(r.err.find("b=2 median_grad_evals=") != std::string::npos);
  CHECK(r.err.find("b_star_empirical=") != std::string::npos);
  CHECK(r.err.find("b_star_theory=") != std::string::npos);

  SUBCASE("out-of-range batch sizes are refused") {
    const fs::path bad = scratch_file("grid_bad.json");
    write_file(bad, R"({
      "problem": {"synthetic": {"loss": "least_squares",
                                "n": 16, "d": 3, "condition": 3, "seed": 5}},
      "algo": "saga", "grid": [0]
    })");
    const auto rr = run_cli("grid --config '" + bad.string() + "'");
    CHECK(rr.exit_code == 1);
    CHECK(rr.err.find("out of range") != std::string::npos);
  }
}

TEST_CASE("cli: optimal-b prints the argmin and the work curve") {
  const fs::path p = scratch_file("optb.json");
  write_file(p, R"({
    "problem": {"synthetic": {"loss": "least_squares",
                              "n": 30, "d": 5, "condition": 4, "seed": 9}},
    "algo": "saga", "eps_rel": 1e-3
  })");
  const fs::path csv = scratch_file("curve.csv");
  const auto r =
      run_cli("optimal-b --config '" + p.string() + "' --out '" +
              csv.string() + "'");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("b_star=") != std::string::npos);
  CHECK(r.out.find("K_at_b_star=") != std::string::npos);
  const std::string curve = slurp(csv);
  CHECK(curve.rfind("b,k_total\n", 0) == 0);
  // header plus one row per candidate batch size 1..n
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 31);
}
