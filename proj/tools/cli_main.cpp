// proxsg: solve composite finite-sum problems with stochastic proximal
// gradient methods, run batch-size grids, report theoretical batch sizes and
// certify estimator properties. Emits plot-ready CSV.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "proxsg/data_io.hpp"
#include "proxsg/estimators.hpp"
#include "proxsg/problem.hpp"
#include "proxsg/runner.hpp"
#include "proxsg/theory.hpp"
#include "proxsg/verify.hpp"

namespace {

using nlohmann::json;
using namespace proxsg;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;
constexpr int kExitDiverged = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Experiment configuration (config file plus flag overrides; flags win)
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  // problem
  std::string dataset;
  bool has_synthetic = false;
  SyntheticSpec synthetic;
  LossKind loss = LossKind::LeastSquares;
  RegKind reg_kind = RegKind::Zero;
  double reg_lambda = 0.0;

  // algorithm
  std::string algo = "saga";
  int b = 1;
  double gamma = 0.0;  // 0 = theoretical default
  std::string step_kind = "constant";
  double p = 0.0;      // 0 = 1/n
  double alpha = 0.0;  // 0 = 1/(1+omega)
  int nodes = 0;       // 0 = min(n, 8)
  std::string quantizer_kind = "identity";
  int quantizer_r = 1;

  // experiment
  std::vector<int> grid;
  int seeds = 1;
  std::uint64_t seed = 0;
  double eps_rel = -1.0;  // -1 = subcommand default
  std::uint64_t max_iters = 0;  // 0 = subcommand default
  std::uint64_t cadence = 0;
  std::uint64_t check_every = 0;
  int jobs = 1;
  std::string out;
  std::optional<std::vector<std::string>> checks;
  double ref_tol = 1e-10;
  bool allow_unsafe_step = false;
  bool log_sigma = true;
  bool demo_failure = false;  // verify: append a deliberately broken run
};

void require_keys(const json& obj, const char* where,
                  std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError(std::string("unknown key '") + it.key() + "' in " +
                        where);
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " +
                        e.what());
    }
  }
}

LossKind parse_loss(const std::string& s) {
  if (s == "least_squares") return LossKind::LeastSquares;
  if (s == "logistic") return LossKind::Logistic;
  throw ConfigError("loss must be 'least_squares' or 'logistic', got '" + s +
                    "'");
}

RegKind parse_reg_kind(const std::string& s) {
  if (s == "zero") return RegKind::Zero;
  if (s == "l1") return RegKind::L1;
  if (s == "squared_l2") return RegKind::SquaredL2;
  throw ConfigError("regularizer kind must be 'zero', 'l1' or 'squared_l2'");
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  require_keys(root, "config",
               {"problem", "algo", "b", "gamma", "step", "p", "alpha", "nodes",
                "quantizer", "grid", "seeds", "seed", "eps_rel", "max_iters",
                "cadence", "check_every", "jobs", "out", "checks", "ref_tol",
                "allow_unsafe_step", "log_sigma"});

  if (root.contains("problem")) {
    const json& prob = root.at("problem");
    if (!prob.is_object()) throw ConfigError("'problem' must be an object");
    require_keys(prob, "problem", {"dataset", "synthetic", "loss", "regularizer"});
    read_into(prob, "dataset", cfg.dataset);
    if (prob.contains("synthetic")) {
      const json& syn = prob.at("synthetic");
      if (!syn.is_object())
        throw ConfigError("'problem.synthetic' must be an object");
      require_keys(syn, "problem.synthetic",
                   {"loss", "n", "d", "condition", "seed"});
      cfg.has_synthetic = true;
      std::string loss = "least_squares";
      read_into(syn, "loss", loss);
      cfg.synthetic.loss = parse_loss(loss);
      read_into(syn, "n", cfg.synthetic.n);
      read_into(syn, "d", cfg.synthetic.d);
      read_into(syn, "condition", cfg.synthetic.condition);
      read_into(syn, "seed", cfg.synthetic.seed);
    }
    if (prob.contains("loss")) {
      std::string loss;
      read_into(prob, "loss", loss);
      cfg.loss = parse_loss(loss);
    }
    if (prob.contains("regularizer")) {
      const json& reg = prob.at("regularizer");
      if (!reg.is_object())
        throw ConfigError("'problem.regularizer' must be an object");
      require_keys(reg, "problem.regularizer", {"kind", "lambda"});
      std::string kind = "zero";
      read_into(reg, "kind", kind);
      cfg.reg_kind = parse_reg_kind(kind);
      read_into(reg, "lambda", cfg.reg_lambda);
    }
  }

  read_into(root, "algo", cfg.algo);
  read_into(root, "b", cfg.b);
  read_into(root, "gamma", cfg.gamma);
  if (root.contains("step")) {
    const json& step = root.at("step");
    if (!step.is_object()) throw ConfigError("'step' must be an object");
    require_keys(step, "step", {"kind", "gamma0"});
    read_into(step, "kind", cfg.step_kind);
    double gamma0 = cfg.gamma;
    read_into(step, "gamma0", gamma0);
    cfg.gamma = gamma0;
  }
  read_into(root, "p", cfg.p);
  read_into(root, "alpha", cfg.alpha);
  read_into(root, "nodes", cfg.nodes);
  if (root.contains("quantizer")) {
    const json& q = root.at("quantizer");
    if (!q.is_object()) throw ConfigError("'quantizer' must be an object");
    require_keys(q, "quantizer", {"kind", "r"});
    read_into(q, "kind", cfg.quantizer_kind);
    read_into(q, "r", cfg.quantizer_r);
  }
  read_into(root, "grid", cfg.grid);
  read_into(root, "seeds", cfg.seeds);
  read_into(root, "seed", cfg.seed);
  read_into(root, "eps_rel", cfg.eps_rel);
  read_into(root, "max_iters", cfg.max_iters);
  read_into(root, "cadence", cfg.cadence);
  read_into(root, "check_every", cfg.check_every);
  read_into(root, "jobs", cfg.jobs);
  read_into(root, "out", cfg.out);
  if (root.contains("checks")) {
    std::vector<std::string> checks;
    read_into(root, "checks", checks);
    cfg.checks = std::move(checks);
  }
  read_into(root, "ref_tol", cfg.ref_tol);
  read_into(root, "allow_unsafe_step", cfg.allow_unsafe_step);
  read_into(root, "log_sigma", cfg.log_sigma);
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

CompositeProblem build_problem(const ExperimentConfig& cfg) {
  std::optional<FiniteSumObjective> obj;
  if (!cfg.dataset.empty() && cfg.has_synthetic)
    throw ConfigError("give either a dataset path or a synthetic spec");
  if (!cfg.dataset.empty()) {
    try {
      const Dataset data = parse_libsvm_file(cfg.dataset);
      obj.emplace(make_objective(data, cfg.loss));
    } catch (const std::exception& e) {
      throw DataError(std::string("dataset: ") + e.what());
    }
  } else if (cfg.has_synthetic) {
    try {
      obj.emplace(gen_synthetic(cfg.synthetic));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("synthetic: ") + e.what());
    }
  } else {
    throw ConfigError("no problem given: set problem.dataset or "
                      "problem.synthetic in the config");
  }

  Regularizer reg = Regularizer::zero();
  try {
    switch (cfg.reg_kind) {
      case RegKind::Zero:
        break;
      case RegKind::L1:
        reg = Regularizer::l1(cfg.reg_lambda);
        break;
      case RegKind::SquaredL2:
        reg = Regularizer::squared_l2(cfg.reg_lambda);
        break;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return CompositeProblem{std::move(*obj), reg};
}

std::unique_ptr<Estimator> build_estimator(const ExperimentConfig& cfg,
                                           const FiniteSumObjective& obj,
                                           int b) {
  const int n = obj.count();
  const int d = obj.dim();
  try {
    if (cfg.algo == "sgd") {
      return make_sgd(obj, SamplingScheme::b_nice(n, b));
    } else if (cfg.algo == "saga") {
      return make_saga(obj, b);
    } else if (cfg.algo == "lsvrg") {
      const double p = cfg.p > 0.0 ? cfg.p : 1.0 / double(n);
      return make_lsvrg(obj, b, p);
    } else if (cfg.algo == "sega") {
      return make_sega(obj, b);
    } else if (cfg.algo == "diana") {
      const int nodes = cfg.nodes > 0 ? cfg.nodes : std::min(n, 8);
      Quantizer q = Quantizer::identity(d);
      if (cfg.quantizer_kind == "random_sparsification")
        q = Quantizer::random_sparsification(d, cfg.quantizer_r);
      else if (cfg.quantizer_kind != "identity")
        throw ConfigError("quantizer kind must be 'identity' or "
                          "'random_sparsification'");
      const double alpha =
          cfg.alpha > 0.0 ? cfg.alpha : 1.0 / (1.0 + q.omega());
      return make_diana(obj, nodes, std::move(q), alpha);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("algo must be one of sgd, saga, lsvrg, sega, diana");
}

bool is_vr_algo(const std::string& algo) {
  return algo == "saga" || algo == "lsvrg" || algo == "sega";
}

double default_gamma(const ExperimentConfig& cfg, const Estimator& est,
                     const ReferenceSolution& ref, double L) {
  const EstimatorConstants c = est.constants(ref);
  return is_vr_algo(cfg.algo) ? vr_constant_step(c)
                              : default_constant_step(c, L);
}

StepSizePolicy build_policy(const ExperimentConfig& cfg, double gamma) {
  if (cfg.step_kind == "constant") return StepSizePolicy::constant(gamma);
  if (cfg.step_kind == "inv_sqrt") return StepSizePolicy::inv_sqrt(gamma);
  throw ConfigError("step kind must be 'constant' or 'inv_sqrt'");
}

struct OutStream {
  explicit OutStream(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw ConfigError("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file.is_open() ? file : std::cout; }
  bool to_file() const { return file.is_open(); }
  std::ofstream file;
};

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "k,subopt,avg_subopt,sigma_sq,grad_evals,gamma\n";
  for (const TrajectoryPoint& pt : traj.points) {
    out << pt.k << ',' << format_real(pt.subopt) << ','
        << format_real(pt.avg_subopt) << ',' << format_real(pt.sigma_sq) << ','
        << format_real(pt.grad_evals) << ',' << format_real(pt.gamma) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_run(const ExperimentConfig& cfg) {
  CompositeProblem problem = build_problem(cfg);
  const ReferenceSolution ref = solve_reference(problem, cfg.ref_tol);

  std::unique_ptr<Estimator> est =
      build_estimator(cfg, problem.objective, cfg.b);
  const double gamma =
      cfg.gamma > 0.0
          ? cfg.gamma
          : default_gamma(cfg, *est, ref, problem.objective.smoothness());
  const StepSizePolicy policy = build_policy(cfg, gamma);

  StoppingRule stop;
  stop.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 10000;
  stop.eps_rel = cfg.eps_rel > 0.0 ? cfg.eps_rel : 0.0;
  stop.cadence = cfg.cadence;
  stop.check_every = cfg.check_every;

  RunOptions opts;
  opts.allow_unsafe_step = cfg.allow_unsafe_step;
  opts.log_sigma = cfg.log_sigma;

  Trajectory traj;
  try {
    traj = run(problem, *est, policy, stop, ref, cfg.seed, opts);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  OutStream out(cfg.out);
  write_trajectory_csv(out.stream(), traj);

  std::ostream& info = out.to_file() ? std::cout : std::cerr;
  info << "algo=" << est->name() << " gamma=" << format_real(gamma)
       << " iters=" << traj.iters
       << " grad_evals=" << format_real(traj.grad_evals)
       << " final_rel_subopt=" << format_real(traj.final_rel_subopt)
       << (traj.reached_target ? " reached_target" : "")
       << (traj.diverged ? " DIVERGED" : "")
       << (traj.uniform_weight_fallback ? " uniform_weights" : "") << '\n';
  return traj.diverged ? kExitDiverged : kExitOk;
}

int cmd_grid(const ExperimentConfig& cfg) {
  CompositeProblem problem = build_problem(cfg);
  const ReferenceSolution ref = solve_reference(problem, cfg.ref_tol);
  const int n = problem.objective.count();
  const int d = problem.objective.dim();
  const double L = problem.objective.smoothness();
  const double L_max = problem.objective.max_component_smoothness();

  std::vector<int> grid = cfg.grid;
  if (grid.empty())
    throw ConfigError("grid: set 'grid' to a nonempty list of batch sizes");
  const int b_limit = cfg.algo == "sega" ? d : n;
  for (int b : grid)
    if (b < 1 || b > b_limit)
      throw ConfigError("grid: batch size " + std::to_string(b) +
                        " out of range [1, " + std::to_string(b_limit) + "]");

  const double eps_rel = cfg.eps_rel > 0.0 ? cfg.eps_rel : 1e-4;
  StoppingRule stop;
  stop.max_iters = cfg.max_iters > 0 ? cfg.max_iters : 1000000;
  stop.eps_rel = eps_rel;
  stop.cadence = cfg.cadence > 0 ? cfg.cadence : stop.max_iters;  // sparse log
  stop.check_every = cfg.check_every;

  struct Cell {
    int b = 0;
    int rep = 0;
  };
  std::vector<Cell> cells;
  for (int b : grid)
    for (int rep = 0; rep < cfg.seeds; ++rep) cells.push_back({b, rep});
  std::vector<RunRecord> records(cells.size());
  std::vector<std::string> errors(cells.size());

  const auto work = [&](size_t idx) {
    const Cell cell = cells[idx];
    RunRecord rec;
    rec.algo = cfg.algo;
    rec.b = cell.b;
    rec.seed = mix_seed(cfg.seed, std::uint64_t(cell.b),
                        std::uint64_t(cell.rep));
    rec.rel_subopt = std::numeric_limits<double>::infinity();
    try {
      std::unique_ptr<Estimator> est =
          build_estimator(cfg, problem.objective, cell.b);
      const double gamma = cfg.gamma > 0.0
                               ? cfg.gamma
                               : default_gamma(cfg, *est, ref, L);
      RunOptions opts;
      opts.allow_unsafe_step = cfg.allow_unsafe_step;
      opts.log_sigma = false;
      rec.gamma = gamma;
      const Trajectory traj =
          run(problem, *est, StepSizePolicy::constant(gamma), stop, ref,
              rec.seed, opts);
      rec.iters = traj.iters;
      rec.grad_evals = traj.grad_evals;
      rec.rel_subopt = traj.final_rel_subopt;
      if (!traj.reached_target)
        errors[idx] = traj.diverged ? "diverged" : "hit max_iters";
    } catch (const std::exception& e) {
      // e.g. a user-forced step size above a cell's stability threshold;
      // recorded per cell so one bad cell cannot kill the whole grid
      errors[idx] = e.what();
      rec.grad_evals = std::numeric_limits<double>::infinity();
    }
    records[idx] = std::move(rec);
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (size_t idx = 0; idx < cells.size(); ++idx) work(idx);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (size_t idx = next.fetch_add(1); idx < cells.size();
             idx = next.fetch_add(1))
          work(idx);
      });
    for (std::thread& t : pool) t.join();
  }

  OutStream out(cfg.out);
  write_run_records_csv(out.stream(), records);

  // summaries: median work per batch size (non-converged cells count as
  // infinite), theoretical best batch size alongside the empirical argmin
  std::ostream& info = out.to_file() ? std::cout : std::cerr;
  double best_median = std::numeric_limits<double>::infinity();
  int b_empirical = grid.front();
  for (int b : grid) {
    std::vector<double> work_done;
    for (size_t idx = 0; idx < cells.size(); ++idx)
      if (cells[idx].b == b)
        work_done.push_back(errors[idx].empty()
                                ? records[idx].grad_evals
                                : std::numeric_limits<double>::infinity());
    std::sort(work_done.begin(), work_done.end());
    const double median = work_done[work_done.size() / 2];
    info << "b=" << b << " median_grad_evals=" << format_real(median) << '\n';
    if (median < best_median) {
      best_median = median;
      b_empirical = b;
    }
  }

  int b_theory = -1;
  if (cfg.algo == "saga")
    b_theory = optimal_b_saga(n, L, L_max);
  else if (cfg.algo == "lsvrg")
    b_theory = optimal_b_svrg(n, L, L_max);
  else if (cfg.algo == "sega")
    b_theory = optimal_b_sega(d);
  info << "b_star_empirical=" << b_empirical;
  if (b_theory > 0) info << " b_star_theory=" << b_theory;
  info << '\n';

  std::uint64_t failures = 0;
  for (const std::string& e : errors)
    if (!e.empty()) ++failures;
  if (failures > 0)
    info << failures << " of " << cells.size()
         << " cells did not reach the target\n";
  return kExitOk;
}

int cmd_optimal_b(const ExperimentConfig& cfg) {
  CompositeProblem problem = build_problem(cfg);
  const ReferenceSolution ref = solve_reference(problem, cfg.ref_tol);
  const int n = problem.objective.count();
  const int d = problem.objective.dim();
  const double L = problem.objective.smoothness();
  const double L_max = problem.objective.max_component_smoothness();

  const double eps_rel = cfg.eps_rel > 0.0 ? cfg.eps_rel : 1e-4;
  const Vec x0 = Vec::Zero(d);
  const double r0_sq = (x0 - ref.x_star).squaredNorm();
  const double delta0 = problem.full_value(x0) - ref.F_star;
  const double eps = eps_rel * delta0;
  if (!(eps > 0.0))
    throw ConfigError("optimal-b: the origin is already optimal; no "
                      "meaningful target");

  int b_star = 0;
  int limit = n;
  std::function<double(int)> k_of;
  if (cfg.algo == "saga") {
    b_star = optimal_b_saga(n, L, L_max);
    k_of = [&](int b) { return k_saga(b, n, L, L_max, r0_sq, eps); };
  } else if (cfg.algo == "lsvrg") {
    b_star = optimal_b_svrg(n, L, L_max);
    k_of = [&](int b) { return k_svrg(b, n, L, L_max, r0_sq, eps); };
  } else if (cfg.algo == "sega") {
    b_star = optimal_b_sega(d);
    limit = d;
    k_of = [&](int b) { return k_sega(b, d, L, r0_sq, eps); };
  } else {
    throw ConfigError(
        "optimal-b: supported algorithms are saga, lsvrg and sega");
  }

  std::cout << "algo=" << cfg.algo << " n=" << n << " d=" << d
            << " L=" << format_real(L) << " L_max=" << format_real(L_max)
            << " eps_rel=" << format_real(eps_rel) << '\n';
  std::cout << "b_star=" << b_star
            << " K_at_b_star=" << format_real(k_of(b_star)) << '\n';

  OutStream out(cfg.out);
  std::ostream& curve = out.stream();
  curve << "b,k_total\n";
  for (int b = 1; b <= limit; ++b)
    curve << b << ',' << format_real(k_of(b)) << '\n';
  return kExitOk;
}

int cmd_verify(const ExperimentConfig& cfg) {
  if (cfg.checks && cfg.checks->empty()) {
    OutStream out(cfg.out);
    write_reports_csv(out.stream(), {});
    std::cout << "no checks requested\n";
    return kExitOk;
  }
  std::vector<CheckReport> reports = default_suite(cfg.seed);
  if (cfg.checks) {
    std::vector<CheckReport> kept;
    for (CheckReport& r : reports)
      for (const std::string& want : *cfg.checks)
        if (r.check_id == want) {
          kept.push_back(std::move(r));
          break;
        }
    reports = std::move(kept);
  }
  if (cfg.demo_failure) {
    // Re-certify one estimator against a weakened second-moment constant
    // (A = 0). The resulting FAIL demonstrates that the checks bite; it is
    // not a defect in the estimator.
    Mat centers(6, 3);
    centers << 1.0, 2.0, -1.0,
        -2.0, 0.5, 1.5,
        0.0, -1.0, 2.0,
        3.0, 1.0, 0.0,
        -1.5, -0.5, -2.0,
        0.5, 1.5, 1.0;
    CompositeProblem problem{
        FiniteSumObjective(std::make_shared<QuadraticFamily>(centers)),
        Regularizer::zero()};
    const ReferenceSolution ref = solve_reference(problem, 1e-12);
    SagaEstimator est(problem.objective, 2);
    CertifyOptions copts;
    copts.seed = cfg.seed;
    copts.points = 20;
    EstimatorConstants weak = est.constants(ref);
    weak.A = 0.0;
    copts.constants_override = weak;
    for (CheckReport& r : certify_trajectory(
             problem, est, ref, StepSizePolicy::constant(0.05), copts)) {
      r.instance = "quadratic-n6-d3/saga-b2-weakened-A";
      reports.push_back(std::move(r));
    }
  }
  if (!cfg.out.empty()) {
    OutStream out(cfg.out);
    write_reports_csv(out.stream(), reports);
  }
  std::cout << render_summary(reports);
  const bool ok = all_passed(reports);
  std::cout << (ok ? "all checks passed" : "CHECKS FAILED") << '\n';
  return ok ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic proximal gradient methods for composite "
               "finite-sum problems"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path;

  // flag presence tracked so that flags override config-file values
  struct Flags {
    std::uint64_t seed = 0;
    int jobs = 0;
    std::string out;
    std::string algo;
    int b = 0;
    double gamma = 0.0;
    double eps_rel = 0.0;
    std::uint64_t max_iters = 0;
  } flags;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (JSON)");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--jobs", flags.jobs, "parallel workers for grid cells");
    sub->add_option("--out", flags.out, "output CSV path (default: stdout)");
    sub->add_option("--algo", flags.algo,
                    "algorithm: sgd, saga, lsvrg, sega, diana");
    sub->add_option("--b", flags.b, "batch (or block) size");
    sub->add_option("--gamma", flags.gamma,
                    "step size (default: theoretical)");
    sub->add_option("--eps-rel", flags.eps_rel,
                    "relative suboptimality target");
    sub->add_option("--max-iters", flags.max_iters, "iteration cap");
  };

  CLI::App* sub_run = app.add_subcommand("run", "one run, trajectory CSV");
  CLI::App* sub_grid =
      app.add_subcommand("grid", "batch-size grid experiment, summary CSV");
  CLI::App* sub_optb = app.add_subcommand(
      "optimal-b", "theoretical batch size and work curve");
  CLI::App* sub_verify =
      app.add_subcommand("verify", "estimator certification suite");
  for (CLI::App* sub : {sub_run, sub_grid, sub_optb, sub_verify})
    add_common(sub);
  sub_verify->add_flag(
      "--demo-failure", cfg.demo_failure,
      "also certify against a deliberately weakened constant; the run must "
      "fail and exit 3, demonstrating that the checks bite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!config_path.empty()) load_config_file(config_path, cfg);

    // flags win over the config file
    if (sub_run->count("--seed") || sub_grid->count("--seed") ||
        sub_optb->count("--seed") || sub_verify->count("--seed"))
      cfg.seed = flags.seed;
    const auto counted = [&](const char* name) {
      return sub_run->count(name) || sub_grid->count(name) ||
             sub_optb->count(name) || sub_verify->count(name);
    };
    if (counted("--jobs")) cfg.jobs = flags.jobs;
    if (counted("--out")) cfg.out = flags.out;
    if (counted("--algo")) cfg.algo = flags.algo;
    if (counted("--b")) cfg.b = flags.b;
    if (counted("--gamma")) cfg.gamma = flags.gamma;
    if (counted("--eps-rel")) cfg.eps_rel = flags.eps_rel;
    if (counted("--max-iters")) cfg.max_iters = flags.max_iters;

    if (sub_run->parsed()) return cmd_run(cfg);
    if (sub_grid->parsed()) return cmd_grid(cfg);
    if (sub_optb->parsed()) return cmd_optimal_b(cfg);
    if (sub_verify->parsed()) return cmd_verify(cfg);
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
