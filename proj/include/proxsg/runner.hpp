#pragma once

#include <cstdint>
#include <vector>

#include "proxsg/estimators.hpp"
#include "proxsg/problem.hpp"
#include "proxsg/theory.hpp"

namespace proxsg {

// Numerically stable online weighted average of vectors.
class OnlineWeightedAverage {
 public:
  void add(const Vec& x, double weight);
  bool empty() const { return weight_sum_ <= 0.0; }
  const Vec& mean() const { return mean_; }
  double weight_sum() const { return weight_sum_; }

 private:
  Vec mean_;
  double weight_sum_ = 0.0;
};

// When to stop and how often to look.
//   max_iters    hard iteration cap;
//   eps_rel      stop when F(x_k) - F* < eps_rel * (F(x_0) - F*),
//                strictly; 0 disables the test;
//   cadence      log a trajectory row every `cadence` iterations
//                (0 = auto: max(1, max_iters / 1000));
//   check_every  evaluate the stopping test every `check_every` iterations
//                (0 = auto: n / (4b) clamped to [1, 64], which caps the
//                objective-evaluation overhead at small batch sizes).
struct StoppingRule {
  std::uint64_t max_iters = 1000;
  double eps_rel = 0.0;
  std::uint64_t cadence = 0;
  std::uint64_t check_every = 0;
};

struct TrajectoryPoint {
  std::uint64_t k = 0;
  double subopt = 0.0;      // F(x_k) - F*
  double avg_subopt = 0.0;  // F(xbar_k) - F*, average over iterates 0..k-1
  double sigma_sq = 0.0;    // NaN when sigma logging is off
  double grad_evals = 0.0;
  double gamma = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::uint64_t iters = 0;
  double grad_evals = 0.0;
  double final_subopt = 0.0;
  double final_rel_subopt = 0.0;
  bool reached_target = false;
  bool diverged = false;
  bool uniform_weight_fallback = false;
  Vec x_final;
  Vec x_avg;
  double weight_sum = 0.0;
};

struct RunOptions {
  // Accept a step size at or above the strict threshold
  // min{ 1/(2(A + (B/rho)C)), 1/L }; iterate averaging then falls back to
  // uniform weights, since the theoretical weights degenerate.
  bool allow_unsafe_step = false;
  bool log_sigma = true;
  Vec x0;  // empty = origin
};

// Run the proximal stochastic iteration
//   x_{k+1} = prox_{gamma_k R}( x_k - gamma_k g_k ),   g_k = est.step(x_k)
// from x0, logging suboptimality against the reference solution. The
// trajectory row at iteration k is recorded before the k-th step, so its
// average covers iterates 0..k-1 (the k = 0 row reports x_0 itself).
// Averaging weights are (1 - 2 gamma_k (A + MC)) gamma_k with M = B/rho.
//
// The run stops early on target (eps_rel) or on divergence, where the
// iterate is declared divergent when F(x_k) - F* exceeds 1e6 times its
// initial value (or is not finite).
//
// All estimator randomness derives from `seed`; sigma logging draws from a
// separate substream, so toggling it never changes the iterates.
Trajectory run(const CompositeProblem& problem, Estimator& est,
               const StepSizePolicy& policy, const StoppingRule& stop,
               const ReferenceSolution& ref, std::uint64_t seed,
               const RunOptions& opts = RunOptions{});

}  // namespace proxsg
