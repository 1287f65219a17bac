#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proxsg/problem.hpp"
#include "proxsg/rng.hpp"
#include "proxsg/sampling.hpp"

namespace proxsg {

// Constants (A, B, rho, C, D1, D2) describing a gradient estimator g with
// internal state sigma_k^2, relative to a reference point x*:
//   E[g_k | x_k]                      = grad f(x_k)
//   E[|g_k - grad f(x*)|^2 | x_k]   <= 2A Df(x_k, x*) + B sigma_k^2 + D1
//   E[sigma_{k+1}^2 | x_k]          <= (1 - rho) sigma_k^2
//                                        + 2C Df(x_k, x*) + D2
// where Df(x, x*) = f(x) - f(x*) - <grad f(x*), x - x*>. G, when known,
// bounds the initial state: sigma_0^2 <= G |x_0 - x*|^2.
struct EstimatorConstants {
  double A = 0.0;
  double B = 0.0;
  double rho = 1.0;
  double C = 0.0;
  double D1 = 0.0;
  double D2 = 0.0;
  std::optional<double> G;
};

// ---------------------------------------------------------------------------
// Quantizers (compression operators used by the distributed estimator)
// ---------------------------------------------------------------------------

enum class QuantizerKind { Identity, RandomSparsification };

// Unbiased compression Q with E[Q(x)] = x and E|Q(x)|^2 = (1 + omega)|x|^2
// (exactly, for both kinds here).
class Quantizer {
 public:
  static Quantizer identity(int dim);
  // Keep a uniform r-subset of coordinates, scaled by d/r; omega = d/r - 1.
  static Quantizer random_sparsification(int dim, int r);

  QuantizerKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double omega() const;

  Vec apply(const Vec& x, RngStream& rng) const;

  // All outcomes with probabilities (errors if there are more than
  // max_atoms of them).
  std::vector<std::pair<Vec, double>> outcomes(
      const Vec& x, std::uint64_t max_atoms = 100000) const;

 private:
  Quantizer(QuantizerKind kind, int dim, int r)
      : kind_(kind), dim_(dim), r_(r) {}
  QuantizerKind kind_;
  int dim_;
  int r_;
};

// ---------------------------------------------------------------------------
// Gradient estimators
// ---------------------------------------------------------------------------

// A stochastic gradient estimator over a finite-sum objective. Estimators
// are stateful: init(x0) resets the internal state and the gradient-work
// counter, then each step(x, rng) draws fresh randomness, returns the
// gradient estimate at x and advances the state.
//
// The remaining methods exist so the estimator's defining inequalities can
// be checked from outside without touching its state:
//   - support()           the sampling distribution driving the estimator,
//                         or nullptr when its randomness is not a finite
//                         batch draw (the distributed estimator);
//   - gradient_for(x, a)  the estimate step() would return if the draw came
//                         out as atom `a` (state is left untouched);
//   - sample(x, rng)      one fresh estimate without advancing the state;
//   - sigma_sq(ref)       the current state's sigma_k^2;
//   - expected_next_sigma_sq(x, ref)
//                         the exact conditional expectation of
//                         sigma_{k+1}^2 given the current state, for a
//                         step taken at x.
class Estimator {
 public:
  virtual ~Estimator() = default;

  virtual std::string name() const = 0;
  virtual void init(const Vec& x0) = 0;
  virtual Vec step(const Vec& x, RngBundle& rng) = 0;

  virtual EstimatorConstants constants(const ReferenceSolution& ref) const = 0;
  virtual double sigma_sq(const ReferenceSolution& ref,
                          RngStream* mc = nullptr) const = 0;
  virtual double expected_next_sigma_sq(const Vec& x,
                                        const ReferenceSolution& ref) const = 0;

  virtual const SamplingScheme* support() const { return nullptr; }
  virtual Vec gradient_for(const Vec& x, const SupportAtom& atom) const;
  virtual Vec sample(const Vec& x, RngStream& rng) const;

  // Component-gradient evaluations consumed so far (coordinate-sketch
  // estimators report fractional component equivalents).
  double grad_evals() const { return grad_evals_; }

  // Expected component-gradient evaluations per step.
  virtual double step_cost() const = 0;

  const FiniteSumObjective& objective() const { return obj_; }

 protected:
  explicit Estimator(FiniteSumObjective obj) : obj_(std::move(obj)) {}
  void require_init() const;

  FiniteSumObjective obj_;
  double grad_evals_ = 0.0;
  bool initialized_ = false;
};

// Plain subsampled gradient g = (1/n) sum_{i in S} v_i grad f_i(x) for an
// arbitrary sampling scheme; sigma_k is identically zero.
class SgdEstimator final : public Estimator {
 public:
  SgdEstimator(FiniteSumObjective obj, SamplingScheme scheme);

  std::string name() const override { return "sgd"; }
  void init(const Vec& x0) override;
  Vec step(const Vec& x, RngBundle& rng) override;
  EstimatorConstants constants(const ReferenceSolution& ref) const override;
  double sigma_sq(const ReferenceSolution&, RngStream*) const override {
    return 0.0;
  }
  double expected_next_sigma_sq(const Vec&,
                                const ReferenceSolution&) const override {
    return 0.0;
  }
  const SamplingScheme* support() const override { return &scheme_; }
  Vec gradient_for(const Vec& x, const SupportAtom& atom) const override;
  double step_cost() const override { return double(scheme_.batch_size()); }

 private:
  bool is_uniform_single() const;

  SamplingScheme scheme_;
  mutable std::optional<EstimatorConstants> cached_;
};

// Mini-batch estimator with a stored table of component gradients:
//   g = mean(J) + (1/b) sum_{i in B} (grad f_i(x) - J_i)
// with the drawn components' table entries replaced by their fresh gradients
// afterwards. The table starts at the component gradients of x0.
class SagaEstimator final : public Estimator {
 public:
  SagaEstimator(FiniteSumObjective obj, int b);

  std::string name() const override { return "saga"; }
  void init(const Vec& x0) override;
  Vec step(const Vec& x, RngBundle& rng) override;
  EstimatorConstants constants(const ReferenceSolution& ref) const override;
  double sigma_sq(const ReferenceSolution& ref, RngStream*) const override;
  double expected_next_sigma_sq(const Vec& x,
                                const ReferenceSolution& ref) const override;
  const SamplingScheme* support() const override { return &scheme_; }
  Vec gradient_for(const Vec& x, const SupportAtom& atom) const override;
  double step_cost() const override { return double(b_); }

  const Mat& table() const { return J_; }

 private:
  double state_factor() const;

  int b_;
  SamplingScheme scheme_;
  Mat J_;        // column i = stored gradient of component i
  Vec jmean_;    // mean of the table columns, maintained incrementally
};

// Mini-batch estimator with a stochastically refreshed anchor point w:
//   g = (1/b) sum_{i in B} (grad f_i(x) - grad f_i(w)) + grad f(w),
// and after each step w jumps to x with probability p.
class LsvrgEstimator final : public Estimator {
 public:
  LsvrgEstimator(FiniteSumObjective obj, int b, double p);

  std::string name() const override { return "lsvrg"; }
  void init(const Vec& x0) override;
  Vec step(const Vec& x, RngBundle& rng) override;
  EstimatorConstants constants(const ReferenceSolution& ref) const override;
  double sigma_sq(const ReferenceSolution& ref, RngStream* mc) const override;
  double expected_next_sigma_sq(const Vec& x,
                                const ReferenceSolution& ref) const override;
  const SamplingScheme* support() const override { return &scheme_; }
  Vec gradient_for(const Vec& x, const SupportAtom& atom) const override;
  double step_cost() const override {
    return 2.0 * double(b_) + p_ * double(obj_.count());
  }

  const Vec& anchor() const { return w_; }
  double refresh_prob() const { return p_; }

  // E_B |(1/b) sum_B (grad f_i(v) - grad f_i(x*)) - (grad f(v) -
  // grad f(x*))|^2, enumerated exactly when the batch support allows it and
  // estimated by Monte Carlo otherwise (mc required in that case).
  double anchored_variance(const Vec& v, const ReferenceSolution& ref,
                           RngStream* mc = nullptr) const;

 private:
  int b_;
  double p_;
  SamplingScheme scheme_;
  Vec w_;
  Vec full_grad_w_;
};

// Coordinate-sketch estimator: with h the running gradient model and B a
// uniform block of `block` coordinates,
//   g = h + (d/block) * I_B (grad f(x) - h),
// after which h takes the fresh gradient's values on B. Gradient work is
// charged at n * block / d component-equivalents per step, matching the
// block-coordinate evaluations the estimator actually requires.
class SegaEstimator final : public Estimator {
 public:
  SegaEstimator(FiniteSumObjective obj, int block);

  std::string name() const override { return "sega"; }
  void init(const Vec& x0) override;
  Vec step(const Vec& x, RngBundle& rng) override;
  EstimatorConstants constants(const ReferenceSolution& ref) const override;
  double sigma_sq(const ReferenceSolution& ref, RngStream*) const override;
  double expected_next_sigma_sq(const Vec& x,
                                const ReferenceSolution& ref) const override;
  const SamplingScheme* support() const override { return &scheme_; }
  Vec gradient_for(const Vec& x, const SupportAtom& atom) const override;
  double step_cost() const override {
    return double(obj_.count()) * double(block_) / double(obj_.dim());
  }

  const Vec& model() const { return h_; }

 private:
  int block_;
  SamplingScheme scheme_;  // over coordinates
  Vec h_;
};

// Distributed estimator over `nodes` shards of the component range. Each
// node j holds phi_j = (m/n) * sum of its shard's components (so the mean of
// the phi_j is exactly f), keeps a shift h_j, and communicates the quantized
// innovation Q(grad phi_j(x) - h_j):
//   g   = mean_j(h_j) + mean_j(Q(grad phi_j(x) - h_j))
//   h_j <- h_j + alpha * Q(grad phi_j(x) - h_j).
// Node gradients are deterministic; all estimator randomness lives in the
// quantizer, whose support is not enumerated here (support() is null), so
// this estimator is checked statistically.
class DianaEstimator final : public Estimator {
 public:
  DianaEstimator(FiniteSumObjective obj, int nodes, Quantizer quantizer,
                 double alpha);

  std::string name() const override { return "diana"; }
  void init(const Vec& x0) override;
  Vec step(const Vec& x, RngBundle& rng) override;
  EstimatorConstants constants(const ReferenceSolution& ref) const override;
  double sigma_sq(const ReferenceSolution& ref, RngStream*) const override;
  double expected_next_sigma_sq(const Vec& x,
                                const ReferenceSolution& ref) const override;
  Vec sample(const Vec& x, RngStream& rng) const override;
  double step_cost() const override { return double(obj_.count()); }

  int nodes() const { return m_; }
  double alpha() const { return alpha_; }
  const Quantizer& quantizer() const { return quant_; }
  // max_j smoothness of phi_j
  double node_smoothness() const { return L_nodes_; }
  // (1/m) sum_j |grad phi_j(x) - grad f(x)|^2
  double dispersion(const Vec& x) const;
  Vec node_gradient(int j, const Vec& x) const;
  const Mat& shifts() const { return h_; }

 private:
  int m_;
  Quantizer quant_;
  double alpha_;
  std::vector<std::vector<int>> shards_;
  double L_nodes_ = 0.0;
  Mat h_;  // column j = shift of node j
};

// Convenience factories used by the command-line driver and the bindings.
std::unique_ptr<Estimator> make_sgd(FiniteSumObjective obj,
                                    SamplingScheme scheme);
std::unique_ptr<Estimator> make_saga(FiniteSumObjective obj, int b);
std::unique_ptr<Estimator> make_lsvrg(FiniteSumObjective obj, int b, double p);
std::unique_ptr<Estimator> make_sega(FiniteSumObjective obj, int block);
std::unique_ptr<Estimator> make_diana(FiniteSumObjective obj, int nodes,
                                      Quantizer quantizer, double alpha);

}  // namespace proxsg
