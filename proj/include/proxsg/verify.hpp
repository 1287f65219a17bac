#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "proxsg/estimators.hpp"
#include "proxsg/runner.hpp"

namespace proxsg {

// Result of one certification check. `max_violation` is the largest signed
// amount by which the checked inequality (or equality, in absolute value)
// was breached; <= tolerance means the check passed.
struct CheckReport {
  std::string check_id;
  std::string instance;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::uint64_t samples = 0;
  std::string notes;
};

struct CertifyOptions {
  int points = 100;          // trajectory transitions to examine
  double tol = 1e-10;
  std::uint64_t seed = 0;
  // Check against these constants instead of est.constants(ref); used to
  // demonstrate that the checks actually bite (e.g. halving A must fail).
  std::optional<EstimatorConstants> constants_override;
  std::uint64_t max_atoms = 100000;
};

// Drive `points` iterations of the proximal step from the origin and, before
// every transition, verify the estimator's three defining properties exactly
// by enumerating the batch distribution:
//   unbiased-exact    | E[g | x_k] - grad f(x_k) |_inf = 0
//   second-moment     E|g - grad f(x*)|^2 <= 2A Df + B sigma_k^2 + D1
//   sigma-recursion   E[sigma_{k+1}^2]    <= (1-rho) sigma_k^2 + 2C Df + D2
// Returns one report per property with the worst violation across points.
// Requires est.support() != nullptr.
std::vector<CheckReport> certify_trajectory(const CompositeProblem& problem,
                                            Estimator& est,
                                            const ReferenceSolution& ref,
                                            const StepSizePolicy& policy,
                                            const CertifyOptions& opts);

// Statistical unbiasedness for estimators whose randomness cannot be
// enumerated: at each probe point, average `samples` fresh estimates and
// require every coordinate of the empirical mean to sit within
// 4 standard errors of grad f(x). The estimator state advances by a few
// normal steps between probes.
CheckReport check_unbiased_mc(const CompositeProblem& problem, Estimator& est,
                              const ReferenceSolution& ref,
                              const StepSizePolicy& policy, int probe_points,
                              std::uint64_t samples, std::uint64_t seed);

// Verify sigma_0^2 <= G |x0 - x*|^2 at freshly initialized estimators for
// each given starting point (G from the estimator's constants; fails when G
// is not provided).
CheckReport check_g_bound(
    const std::function<std::unique_ptr<Estimator>()>& make_est,
    const CompositeProblem& problem, const ReferenceSolution& ref,
    const std::vector<Vec>& starts, double tol = 1e-10);

// Multi-seed comparison of the uniform-average suboptimality against the
// smooth-case constant-step bound: for every logged t >= 1, the across-seed
// mean of F(xbar_t) - F* must not exceed the bound. The reported violation
// is max_t mean_t / bound(t) - 1.
CheckReport check_vr_bound_compliance(
    const CompositeProblem& problem,
    const std::function<std::unique_ptr<Estimator>()>& make_est,
    const ReferenceSolution& ref, double gamma, const StoppingRule& stop,
    int num_seeds, std::uint64_t seed0);

// Multi-seed check that the constant-step scheme settles into its
// theoretical neighborhood: per seed, average F(x_k) - F* over the last 20%
// of logged rows; across seeds, the mean tail level must not exceed
// 2 gamma (D1 + M D2) plus three standard errors.
CheckReport check_sgd_neighborhood(
    const CompositeProblem& problem,
    const std::function<std::unique_ptr<Estimator>()>& make_est,
    const ReferenceSolution& ref, double gamma, const StoppingRule& stop,
    int num_seeds, std::uint64_t seed0, bool allow_unsafe_step);

// Exact moment identities of a quantizer by outcome enumeration:
// E[Q(x)] = x and E|Q(x)|^2 = (1 + omega)|x|^2.
CheckReport check_quantizer_moments(const Quantizer& q, const Vec& probe,
                                    double tol = 1e-12);

// The built-in certification suite: a small deterministic quadratic
// instance, exact trajectory certification for the four enumerable
// estimators, initial-state bounds for the variance-reduced ones,
// statistical unbiasedness for the distributed one, and quantizer moment
// identities.
std::vector<CheckReport> default_suite(std::uint64_t seed);

// CSV with header check_id,instance,max_violation,tolerance,passed,samples,notes
void write_reports_csv(std::ostream& out,
                       const std::vector<CheckReport>& reports);

// One PASS/FAIL line per report.
std::string render_summary(const std::vector<CheckReport>& reports);

bool all_passed(const std::vector<CheckReport>& reports);

}  // namespace proxsg
