#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proxsg/rng.hpp"
#include "proxsg/sampling.hpp"

namespace proxsg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Finite-sum objectives f(x) = (1/n) sum_i f_i(x)
// ---------------------------------------------------------------------------

class ComponentFamily {
 public:
  virtual ~ComponentFamily() = default;

  virtual int count() const = 0;
  virtual int dim() const = 0;
  virtual double value(int i, const Vec& x) const = 0;
  virtual Vec gradient(int i, const Vec& x) const = 0;

  // out += scale * grad f_i(x); the default just calls gradient().
  virtual void add_gradient(int i, const Vec& x, double scale, Vec& out) const;

  // Per-component smoothness constants L_i.
  virtual std::vector<double> component_smoothness() const = 0;

  // Smoothness constant of the mean (1/count) sum_i f_i.
  virtual double mean_smoothness() const = 0;

  // Smoothness constant of scale * sum_{i in idx} f_i. The default bound is
  // scale * sum of L_i, which is loose but always valid; data families
  // override with the exact constant.
  virtual double group_smoothness(const std::vector<int>& idx,
                                  double scale) const;
};

enum class LossKind { LeastSquares, Logistic };

// Components built on rows of a data matrix:
//   least squares f_i(x) = (1/2)(a_i.x - y_i)^2,       L_i = |a_i|^2
//   logistic      f_i(x) = log(1 + exp(-y_i a_i.x)),   L_i = |a_i|^2 / 4
// with y_i in {-1,+1} for the logistic loss.
class DataFamily final : public ComponentFamily {
 public:
  DataFamily(Mat A, Vec y, LossKind loss);

  int count() const override { return int(A_.rows()); }
  int dim() const override { return int(A_.cols()); }
  double value(int i, const Vec& x) const override;
  Vec gradient(int i, const Vec& x) const override;
  void add_gradient(int i, const Vec& x, double scale, Vec& out) const override;
  std::vector<double> component_smoothness() const override;
  double mean_smoothness() const override;
  double group_smoothness(const std::vector<int>& idx,
                          double scale) const override;

  const Mat& matrix() const { return A_; }
  const Vec& labels() const { return y_; }
  LossKind loss() const { return loss_; }

 private:
  Mat A_;
  Vec y_;
  LossKind loss_;
};

// f_i(x) = (1/2) |x - c_i|^2; every L_i = 1 and the mean is 1-smooth. Small
// deterministic instances of this family drive the exact certification suite.
class QuadraticFamily final : public ComponentFamily {
 public:
  explicit QuadraticFamily(Mat centers);  // one row per component

  int count() const override { return int(centers_.rows()); }
  int dim() const override { return int(centers_.cols()); }
  double value(int i, const Vec& x) const override;
  Vec gradient(int i, const Vec& x) const override;
  std::vector<double> component_smoothness() const override;
  double mean_smoothness() const override { return 1.0; }
  double group_smoothness(const std::vector<int>& idx,
                          double scale) const override;

  const Mat& centers() const { return centers_; }

 private:
  Mat centers_;
};

// Value-type handle on a component family plus cached smoothness constants.
class FiniteSumObjective {
 public:
  explicit FiniteSumObjective(std::shared_ptr<const ComponentFamily> family);

  int count() const { return family_->count(); }
  int dim() const { return family_->dim(); }

  double component_value(int i, const Vec& x) const {
    return family_->value(i, x);
  }
  Vec component_gradient(int i, const Vec& x) const {
    return family_->gradient(i, x);
  }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  const std::vector<double>& component_smoothness() const { return Li_; }
  double max_component_smoothness() const { return L_max_; }
  double smoothness() const { return L_; }

  // Smoothness of (count/|idx|-style) scaled groups, forwarded to the family.
  double group_smoothness(const std::vector<int>& idx, double scale) const {
    return family_->group_smoothness(idx, scale);
  }

  const ComponentFamily& family() const { return *family_; }
  std::shared_ptr<const ComponentFamily> family_ptr() const { return family_; }

 private:
  std::shared_ptr<const ComponentFamily> family_;
  std::vector<double> Li_;
  double L_max_;
  double L_;
};

// (1/n) sum_{i in batch} weight_i * grad f_i(x): the unbiased subsampled
// gradient associated with a sampling scheme's draw.
Vec subsample_gradient(const FiniteSumObjective& objective,
                       const SampledBatch& batch, const Vec& x);

// ---------------------------------------------------------------------------
// Regularizers and composite problems
// ---------------------------------------------------------------------------

enum class RegKind { Zero, L1, SquaredL2 };

// R(x) in { 0, lambda*|x|_1, (lambda/2)*|x|^2 } with closed-form prox.
class Regularizer {
 public:
  static Regularizer zero();
  static Regularizer l1(double lambda);
  static Regularizer squared_l2(double lambda);

  RegKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  bool is_zero() const { return kind_ == RegKind::Zero; }

  double value(const Vec& x) const;
  Vec prox(double gamma, const Vec& y) const;

 private:
  Regularizer(RegKind kind, double lambda) : kind_(kind), lambda_(lambda) {}
  RegKind kind_;
  double lambda_;
};

struct CompositeProblem {
  FiniteSumObjective objective;
  Regularizer reg;

  double full_value(const Vec& x) const {
    return objective.value(x) + reg.value(x);
  }
};

// ---------------------------------------------------------------------------
// Reference solutions and gradient-noise measurement
// ---------------------------------------------------------------------------

struct ReferenceSolution {
  Vec x_star;
  double F_star = 0.0;
  Mat grads_at_star;     // column i = grad f_i(x*)
  Vec full_grad_at_star; // grad f(x*)
  double residual = 0.0; // final prox-gradient step length
  std::uint64_t iters = 0;
  bool converged = false;
};

// Solve min f(x) + R(x) by the deterministic proximal gradient method with
// step 1/L until the step length |x - prox(x - grad/L)| falls below tol.
ReferenceSolution solve_reference(const CompositeProblem& problem,
                                  double tol = 1e-10,
                                  std::uint64_t max_iters = 10000000);

enum class NoiseMode { Centered, Uncentered };

struct NoiseEstimate {
  double value = 0.0;
  double std_error = 0.0;       // 0 for exact results
  std::uint64_t samples = 0;    // atoms enumerated or MC draws
  bool exact = false;
};

// Second moment of the subsampled-gradient noise at the reference point:
//   Centered:   E | g(x*) - grad f(x*) |^2
//   Uncentered: E | g(x*) |^2
// Enumerated exactly when the scheme's support has at most `enumerate_cutoff`
// atoms, otherwise estimated by Monte Carlo with at least `mc_samples` draws
// from `mc` (required in that case).
NoiseEstimate gradient_noise(const FiniteSumObjective& objective,
                             const SamplingScheme& scheme,
                             const ReferenceSolution& ref, NoiseMode mode,
                             RngStream* mc = nullptr,
                             std::uint64_t enumerate_cutoff = 10000,
                             std::uint64_t mc_samples = 100000);

}  // namespace proxsg
