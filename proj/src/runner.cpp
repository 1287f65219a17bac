#include "proxsg/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace proxsg {

void OnlineWeightedAverage::add(const Vec& x, double weight) {
  if (!(weight > 0.0))
    throw std::invalid_argument("average: weight must be > 0");
  if (weight_sum_ <= 0.0) {
    mean_ = x;
    weight_sum_ = weight;
    return;
  }
  weight_sum_ += weight;
  mean_ += (weight / weight_sum_) * (x - mean_);
}

namespace {

constexpr double kDivergenceFactor = 1e6;

}  // namespace

Trajectory run(const CompositeProblem& problem, Estimator& est,
               const StepSizePolicy& policy, const StoppingRule& stop,
               const ReferenceSolution& ref, std::uint64_t seed,
               const RunOptions& opts) {
  const int n = problem.objective.count();
  const int d = problem.objective.dim();
  const double L = problem.objective.smoothness();

  const EstimatorConstants c = est.constants(ref);
  const double eta = 2.0 * (c.A + (c.B / c.rho) * c.C);
  const double threshold =
      std::min(eta > 0.0 ? 1.0 / eta : std::numeric_limits<double>::infinity(),
               1.0 / L);
  const double gamma0 = policy.at(0);
  bool uniform_weights = false;
  if (!(gamma0 < threshold)) {
    if (!opts.allow_unsafe_step)
      throw std::domain_error(
          "run: step size " + std::to_string(gamma0) +
          " is not strictly below the threshold " + std::to_string(threshold) +
          "; pass allow_unsafe_step to run anyway with uniform averaging");
    uniform_weights = true;
  }

  RngBundle rng = RngBundle::for_seed(seed);
  Vec x = opts.x0.size() > 0 ? opts.x0 : Vec(Vec::Zero(d));
  if (int(x.size()) != d)
    throw std::invalid_argument("run: x0 dimension mismatch");
  est.init(x);

  const std::uint64_t cadence =
      stop.cadence > 0 ? stop.cadence
                       : std::max<std::uint64_t>(1, stop.max_iters / 1000);
  std::uint64_t check_every = stop.check_every;
  if (check_every == 0) {
    // Keep the objective-evaluation overhead of the stopping test at roughly
    // a quarter of the gradient work between two tests.
    const double per_step = std::max(est.step_cost(), 1e-9);
    check_every = std::uint64_t(
        std::clamp(double(n) / (4.0 * per_step), 1.0, 64.0));
  }

  Trajectory out;
  out.uniform_weight_fallback = uniform_weights;

  const double F_star = ref.F_star;
  const double subopt0 = problem.full_value(x) - F_star;
  const double target = stop.eps_rel > 0.0
                            ? stop.eps_rel * subopt0
                            : -std::numeric_limits<double>::infinity();
  const double divergence_level =
      kDivergenceFactor * std::max(subopt0, 1e-300);

  OnlineWeightedAverage avg;
  std::int64_t last_logged = -1;

  const auto log_row = [&](std::uint64_t k, double subopt) {
    TrajectoryPoint pt;
    pt.k = k;
    pt.subopt = subopt;
    pt.avg_subopt =
        avg.empty() ? subopt : problem.full_value(avg.mean()) - F_star;
    pt.sigma_sq = opts.log_sigma ? est.sigma_sq(ref, &rng.diag)
                                 : std::numeric_limits<double>::quiet_NaN();
    pt.grad_evals = est.grad_evals();
    pt.gamma = policy.at(k);
    out.points.push_back(pt);
    last_logged = std::int64_t(k);
  };

  std::uint64_t k = 0;
  for (; k < stop.max_iters; ++k) {
    const bool log_now = (k % cadence == 0);
    const bool check_now = stop.eps_rel > 0.0 && (k % check_every == 0);
    if (log_now || check_now) {
      const double subopt = problem.full_value(x) - F_star;
      if (!std::isfinite(subopt) || subopt > divergence_level) {
        out.diverged = true;
        break;
      }
      if (log_now) log_row(k, subopt);
      if (subopt < target) {
        out.reached_target = true;
        break;
      }
    }
    const double gamma = policy.at(k);
    avg.add(x, uniform_weights ? 1.0 : (1.0 - gamma * eta) * gamma);
    const Vec g = est.step(x, rng);
    x = problem.reg.prox(gamma, x - gamma * g);
  }

  out.iters = k;
  out.grad_evals = est.grad_evals();
  out.x_final = x;
  if (!avg.empty()) {
    out.x_avg = avg.mean();
    out.weight_sum = avg.weight_sum();
  } else {
    out.x_avg = x;
    out.weight_sum = 0.0;
  }

  const double final_subopt = problem.full_value(x) - F_star;
  out.final_subopt = final_subopt;
  out.final_rel_subopt =
      subopt0 > 0.0
          ? final_subopt / subopt0
          : (final_subopt <= 0.0 ? 0.0
                                 : std::numeric_limits<double>::infinity());
  if (!std::isfinite(final_subopt) || final_subopt > divergence_level)
    out.diverged = true;
  else if (stop.eps_rel > 0.0 && final_subopt < target)
    out.reached_target = true;
  if (last_logged != std::int64_t(k)) log_row(k, final_subopt);
  return out;
}

}  // namespace proxsg
