#include "proxsg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "proxsg/data_io.hpp"

namespace proxsg {

namespace {

double bregman_f(const FiniteSumObjective& obj, const ReferenceSolution& ref,
                 const Vec& x) {
  return obj.value(x) - obj.value(ref.x_star) -
         ref.full_grad_at_star.dot(x - ref.x_star);
}

CheckReport make_report(std::string id, std::string instance, double violation,
                        double tol, std::uint64_t samples,
                        std::string notes = {}) {
  CheckReport r;
  r.check_id = std::move(id);
  r.instance = std::move(instance);
  r.max_violation = violation;
  r.tolerance = tol;
  r.passed = violation <= tol;
  r.samples = samples;
  r.notes = std::move(notes);
  return r;
}

}  // namespace

std::vector<CheckReport> certify_trajectory(const CompositeProblem& problem,
                                            Estimator& est,
                                            const ReferenceSolution& ref,
                                            const StepSizePolicy& policy,
                                            const CertifyOptions& opts) {
  const SamplingScheme* scheme = est.support();
  if (scheme == nullptr)
    throw std::invalid_argument(
        "certify: estimator has no enumerable batch distribution");
  const std::vector<SupportAtom> atoms =
      scheme->enumerate_support(opts.max_atoms);

  const EstimatorConstants c =
      opts.constants_override ? *opts.constants_override : est.constants(ref);

  RngBundle rng = RngBundle::for_seed(opts.seed);
  Vec x = Vec::Zero(problem.objective.dim());
  est.init(x);

  double worst_unbiased = 0.0;
  double worst_moment = -std::numeric_limits<double>::infinity();
  double worst_recursion = -std::numeric_limits<double>::infinity();

  for (int point = 0; point < opts.points; ++point) {
    const Vec grad = problem.objective.gradient(x);
    const double df = bregman_f(problem.objective, ref, x);
    const double sigma_sq = est.sigma_sq(ref, nullptr);

    Vec mean = Vec::Zero(x.size());
    double second = 0.0;
    for (const SupportAtom& atom : atoms) {
      const Vec g = est.gradient_for(x, atom);
      mean.noalias() += atom.prob * g;
      second += atom.prob * (g - ref.full_grad_at_star).squaredNorm();
    }
    worst_unbiased =
        std::max(worst_unbiased, (mean - grad).lpNorm<Eigen::Infinity>());
    worst_moment = std::max(
        worst_moment, second - (2.0 * c.A * df + c.B * sigma_sq + c.D1));
    const double next = est.expected_next_sigma_sq(x, ref);
    worst_recursion =
        std::max(worst_recursion,
                 next - ((1.0 - c.rho) * sigma_sq + 2.0 * c.C * df + c.D2));

    const double gamma = policy.at(std::uint64_t(point));
    const Vec g = est.step(x, rng);
    x = problem.reg.prox(gamma, x - gamma * g);
  }

  const std::string instance = est.name();
  std::vector<CheckReport> out;
  out.push_back(make_report("unbiased-exact", instance, worst_unbiased,
                            opts.tol, std::uint64_t(opts.points),
                            std::to_string(atoms.size()) + " atoms/point"));
  out.push_back(make_report("second-moment", instance, worst_moment, opts.tol,
                            std::uint64_t(opts.points)));
  out.push_back(make_report("sigma-recursion", instance, worst_recursion,
                            opts.tol, std::uint64_t(opts.points)));
  return out;
}

CheckReport check_unbiased_mc(const CompositeProblem& problem, Estimator& est,
                              const ReferenceSolution& ref,
                              const StepSizePolicy& policy, int probe_points,
                              std::uint64_t samples, std::uint64_t seed) {
  RngBundle rng = RngBundle::for_seed(seed);
  RngStream mc(mix_seed(seed, 0x3C0FFEEu));
  const int d = problem.objective.dim();
  Vec x = Vec::Zero(d);
  est.init(x);

  double worst = -std::numeric_limits<double>::infinity();
  for (int point = 0; point < probe_points; ++point) {
    const Vec grad = problem.objective.gradient(x);
    Vec mean = Vec::Zero(d);
    Vec m2 = Vec::Zero(d);
    for (std::uint64_t s = 0; s < samples; ++s) {
      const Vec g = est.sample(x, mc);
      const Vec delta = g - mean;
      mean += delta / double(s + 1);
      m2.array() += delta.array() * (g - mean).array();
    }
    for (int j = 0; j < d; ++j) {
      const double se =
          std::sqrt(m2[j] / double(samples - 1) / double(samples));
      worst = std::max(worst, std::abs(mean[j] - grad[j]) - 4.0 * se);
    }
    // a few live steps between probes so different states get exercised
    for (int s = 0; s < 3; ++s) {
      const double gamma = policy.at(std::uint64_t(3 * point + s));
      const Vec g = est.step(x, rng);
      x = problem.reg.prox(gamma, x - gamma * g);
    }
  }
  return make_report("unbiased-mc", est.name(), worst, 0.0,
                     samples * std::uint64_t(probe_points),
                     "per-coordinate |mean - grad| vs 4 standard errors");
}

CheckReport check_g_bound(
    const std::function<std::unique_ptr<Estimator>()>& make_est,
    const CompositeProblem& problem, const ReferenceSolution& ref,
    const std::vector<Vec>& starts, double tol) {
  double worst = -std::numeric_limits<double>::infinity();
  std::string name = "?";
  for (const Vec& x0 : starts) {
    std::unique_ptr<Estimator> est = make_est();
    name = est->name();
    const EstimatorConstants c = est->constants(ref);
    if (!c.G)
      return make_report("g-bound", name, 1.0, tol, starts.size(),
                         "no initial-state constant available");
    est->init(x0);
    const double sigma0 = est->sigma_sq(ref, nullptr);
    const double bound = *c.G * (x0 - ref.x_star).squaredNorm();
    worst = std::max(worst, sigma0 - bound);
  }
  return make_report("g-bound", name, worst, tol, starts.size());
}

CheckReport check_vr_bound_compliance(
    const CompositeProblem& problem,
    const std::function<std::unique_ptr<Estimator>()>& make_est,
    const ReferenceSolution& ref, double gamma, const StoppingRule& stop,
    int num_seeds, std::uint64_t seed0) {
  if (num_seeds < 30)
    throw std::invalid_argument(
        "vr-compliance: need at least 30 seeds for a stable mean");
  if (!problem.reg.is_zero())
    throw std::invalid_argument(
        "vr-compliance: the smooth-case bound needs a zero regularizer");

  const StepSizePolicy policy = StepSizePolicy::constant(gamma);
  RunOptions opts;
  opts.log_sigma = false;

  std::vector<double> ks;        // logged iteration indices (first run)
  std::vector<double> mean_avg;  // across-seed mean of avg_subopt per row
  BoundInputs inputs;
  std::uint64_t rows = 0;

  for (int s = 0; s < num_seeds; ++s) {
    std::unique_ptr<Estimator> est = make_est();
    if (s == 0) {
      const EstimatorConstants c = est->constants(ref);
      inputs.c = c;
      inputs.L = problem.objective.smoothness();
      inputs.zero_regularizer = true;
      inputs.r0_sq = ref.x_star.squaredNorm();  // runs start at the origin
      Vec zero = Vec::Zero(problem.objective.dim());
      std::unique_ptr<Estimator> probe = make_est();
      probe->init(zero);
      inputs.sigma0_sq = probe->sigma_sq(ref, nullptr);
      inputs.delta0 = problem.full_value(zero) - ref.F_star;
    }
    const Trajectory traj =
        run(problem, *est, policy, stop, ref, mix_seed(seed0, 0xA7, s), opts);
    if (s == 0) {
      rows = traj.points.size();
      ks.resize(rows);
      mean_avg.assign(rows, 0.0);
      for (std::uint64_t r = 0; r < rows; ++r) ks[r] = double(traj.points[r].k);
    } else if (traj.points.size() != rows) {
      throw std::logic_error("vr-compliance: seeds logged different rows");
    }
    for (std::uint64_t r = 0; r < rows; ++r)
      mean_avg[r] += traj.points[r].avg_subopt / double(num_seeds);
  }

  double worst_ratio = 0.0;
  double worst_k = 0.0;
  for (std::uint64_t r = 0; r < rows; ++r) {
    const std::uint64_t k = std::uint64_t(ks[r]);
    if (k < 1) continue;
    const double bound = vr_bound(inputs, gamma, k);
    const double ratio = mean_avg[r] / bound;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_k = double(k);
    }
  }
  std::ostringstream notes;
  notes << "max mean/bound = " << worst_ratio << " at k = " << worst_k << " ("
        << num_seeds << " seeds)";
  return make_report("vr-compliance", make_est()->name(), worst_ratio - 1.0,
                     0.0, std::uint64_t(num_seeds), notes.str());
}

CheckReport check_sgd_neighborhood(
    const CompositeProblem& problem,
    const std::function<std::unique_ptr<Estimator>()>& make_est,
    const ReferenceSolution& ref, double gamma, const StoppingRule& stop,
    int num_seeds, std::uint64_t seed0, bool allow_unsafe_step) {
  const StepSizePolicy policy = StepSizePolicy::constant(gamma);
  RunOptions opts;
  opts.log_sigma = false;
  opts.allow_unsafe_step = allow_unsafe_step;

  double mean = 0.0;
  double m2 = 0.0;
  double radius = 0.0;
  std::string name = "?";
  for (int s = 0; s < num_seeds; ++s) {
    std::unique_ptr<Estimator> est = make_est();
    name = est->name();
    if (s == 0) radius = neighborhood_radius(est->constants(ref), gamma);
    const Trajectory traj =
        run(problem, *est, policy, stop, ref, mix_seed(seed0, 0xBE, s), opts);
    const std::size_t rows = traj.points.size();
    const std::size_t tail_start = rows - std::max<std::size_t>(1, rows / 5);
    double tail = 0.0;
    for (std::size_t r = tail_start; r < rows; ++r)
      tail += traj.points[r].subopt;
    tail /= double(rows - tail_start);
    const double delta = tail - mean;
    mean += delta / double(s + 1);
    m2 += delta * (tail - mean);
  }
  const double se =
      num_seeds > 1
          ? std::sqrt(m2 / double(num_seeds - 1) / double(num_seeds))
          : 0.0;
  std::ostringstream notes;
  notes << "tail mean = " << mean << ", neighborhood = " << radius
        << ", se = " << se;
  return make_report("neighborhood", name, mean - radius - 3.0 * se, 0.0,
                     std::uint64_t(num_seeds), notes.str());
}

CheckReport check_quantizer_moments(const Quantizer& q, const Vec& probe,
                                    double tol) {
  const auto outcomes = q.outcomes(probe);
  Vec mean = Vec::Zero(probe.size());
  double second = 0.0;
  double prob_sum = 0.0;
  for (const auto& [v, p] : outcomes) {
    mean.noalias() += p * v;
    second += p * v.squaredNorm();
    prob_sum += p;
  }
  const double expected_second = (1.0 + q.omega()) * probe.squaredNorm();
  double worst = (mean - probe).lpNorm<Eigen::Infinity>();
  worst = std::max(worst, std::abs(second - expected_second));
  worst = std::max(worst, std::abs(prob_sum - 1.0));
  const std::string instance = q.kind() == QuantizerKind::Identity
                                   ? "identity"
                                   : "random-sparsification";
  return make_report("quantizer-moments", instance, worst, tol,
                     outcomes.size());
}

std::vector<CheckReport> default_suite(std::uint64_t seed) {
  // Deterministic quadratic instance: 6 components in R^3 with fixed centers.
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

  const FiniteSumObjective& obj = problem.objective;
  const double gamma_probe = 0.05;
  const StepSizePolicy policy = StepSizePolicy::constant(gamma_probe);

  std::vector<CheckReport> reports;
  CertifyOptions opts;
  opts.seed = seed;

  {
    SgdEstimator est(obj, SamplingScheme::b_nice(obj.count(), 2));
    for (CheckReport& r :
         certify_trajectory(problem, est, ref, policy, opts)) {
      r.instance = "quadratic-n6-d3/sgd-b2";
      reports.push_back(std::move(r));
    }
  }
  {
    SagaEstimator est(obj, 2);
    for (CheckReport& r :
         certify_trajectory(problem, est, ref, policy, opts)) {
      r.instance = "quadratic-n6-d3/saga-b2";
      reports.push_back(std::move(r));
    }
  }
  {
    LsvrgEstimator est(obj, 2, 0.25);
    for (CheckReport& r :
         certify_trajectory(problem, est, ref, policy, opts)) {
      r.instance = "quadratic-n6-d3/lsvrg-b2";
      reports.push_back(std::move(r));
    }
  }
  {
    SegaEstimator est(obj, 2);
    for (CheckReport& r :
         certify_trajectory(problem, est, ref, policy, opts)) {
      r.instance = "quadratic-n6-d3/sega-block2";
      reports.push_back(std::move(r));
    }
  }

  // Initial-state bounds at a handful of random starting points.
  std::vector<Vec> starts;
  {
    RngStream rng(mix_seed(seed, 0x60D));
    for (int s = 0; s < 20; ++s) {
      Vec x0(3);
      for (int j = 0; j < 3; ++j) x0[j] = 3.0 * rng.normal();
      starts.push_back(std::move(x0));
    }
  }
  {
    CheckReport r = check_g_bound(
        [&] { return make_saga(obj, 2); }, problem, ref, starts);
    r.instance = "quadratic-n6-d3/saga-b2";
    reports.push_back(std::move(r));
  }
  {
    CheckReport r = check_g_bound(
        [&] { return make_lsvrg(obj, 2, 0.25); }, problem, ref, starts);
    r.instance = "quadratic-n6-d3/lsvrg-b2";
    reports.push_back(std::move(r));
  }
  {
    CheckReport r = check_g_bound(
        [&] { return make_sega(obj, 2); }, problem, ref, starts);
    r.instance = "quadratic-n6-d3/sega-block2";
    reports.push_back(std::move(r));
  }

  {
    DianaEstimator est(obj, 3, Quantizer::random_sparsification(3, 1), 1.0 / 3.0);
    CheckReport r = check_unbiased_mc(problem, est, ref, policy, 5, 20000,
                                      mix_seed(seed, 0xD1A2));
    r.instance = "quadratic-n6-d3/diana-m3-rand1";
    reports.push_back(std::move(r));
  }

  {
    Vec probe(3);
    probe << 0.3, -1.2, 2.4;
    reports.push_back(
        check_quantizer_moments(Quantizer::identity(3), probe));
    reports.push_back(check_quantizer_moments(
        Quantizer::random_sparsification(3, 1), probe));
  }
  return reports;
}

void write_reports_csv(std::ostream& out,
                       const std::vector<CheckReport>& reports) {
  out << "check_id,instance,max_violation,tolerance,passed,samples,notes\n";
  for (const CheckReport& r : reports) {
    std::string notes = r.notes;
    for (char& ch : notes)
      if (ch == ',' || ch == '\n') ch = ';';
    out << r.check_id << ',' << r.instance << ','
        << format_real(r.max_violation) << ',' << format_real(r.tolerance)
        << ',' << (r.passed ? "true" : "false") << ',' << r.samples << ','
        << notes << '\n';
  }
}

std::string render_summary(const std::vector<CheckReport>& reports) {
  std::ostringstream out;
  for (const CheckReport& r : reports) {
    out << (r.passed ? "PASS" : "FAIL") << "  " << r.check_id << "  "
        << r.instance << "  violation=" << r.max_violation
        << " tol=" << r.tolerance;
    if (!r.notes.empty()) out << "  (" << r.notes << ")";
    out << '\n';
  }
  return out.str();
}

bool all_passed(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (!r.passed) return false;
  return true;
}

}  // namespace proxsg
