#pragma once

#include <cstdint>
#include <optional>

#include "proxsg/estimators.hpp"

namespace proxsg {

// The noise-contraction factor M enters the bounds in two conventions,
// depending on which average of the iterates the bound controls:
//   AnytimeAverage: M = B / rho     (weighted average, any problem)
//   UniformAverage: M = B / (2 rho) (uniform average, smooth case R = 0)
enum class MConvention { AnytimeAverage, UniformAverage };

double m_factor(const EstimatorConstants& c, MConvention convention);

// Step-size policies: constant gamma, or gamma / sqrt(k+1).
class StepSizePolicy {
 public:
  enum class Kind { Constant, InvSqrt };

  static StepSizePolicy constant(double gamma);
  static StepSizePolicy inv_sqrt(double gamma0);

  Kind kind() const { return kind_; }
  double gamma0() const { return gamma0_; }
  double at(std::uint64_t k) const;

 private:
  StepSizePolicy(Kind kind, double gamma0) : kind_(kind), gamma0_(gamma0) {}
  Kind kind_;
  double gamma0_;
};

// Default constant step size min{ 1/(4(A + (B/rho) C)), 1/(2L) }: safe for
// every estimator, with a factor-two margin below the anytime-average
// threshold.
double default_constant_step(const EstimatorConstants& c, double L);

// Constant step 1/(4(A + (B/(2 rho)) C)) used by the variance-reduced
// complexity results (uniform-average convention, D1 = D2 = 0).
double vr_constant_step(const EstimatorConstants& c);

// Inputs shared by the convergence bounds. delta0 = F(x0) - F*,
// r0_sq = |x0 - x*|^2, sigma0_sq = the estimator state's initial level.
struct BoundInputs {
  double r0_sq = 0.0;
  double delta0 = 0.0;
  double sigma0_sq = 0.0;
  EstimatorConstants c;
  double L = 0.0;
  bool zero_regularizer = false;
};

// Anytime bound on E[F(xbar_t) - F*] for the weighted average
// xbar_t with weights proportional to (1 - 2 gamma_k (A + MC)) gamma_k,
// M = B/rho:
//
//   r0^2 + 2 gamma_0 (delta0 + gamma_0 M sigma0^2)
//     + 2 (D1 + 2 M D2) sum_{k<t} gamma_k^2
//   -----------------------------------------------
//   2 sum_{i<t} (1 - 2 gamma_i (A + MC)) gamma_i
//
// Requires t >= 1 and gamma_0 < min{ 1/(2(A+MC)), 1/L } (throws otherwise).
double unified_bound(const BoundInputs& in, const StepSizePolicy& policy,
                     std::uint64_t t);

// Constant-step corollary of the anytime bound, for
// gamma <= min{ 1/(4(A+MC)), 1/(2L) }:
//   [2 gamma (delta0 + gamma M sigma0^2) + r0^2] / (gamma t)
//     + 2 gamma (D1 + M D2).
double fixed_step_bound(const BoundInputs& in, double gamma, std::uint64_t t);

// The constant-step bound's floor: 2 gamma (D1 + M D2), M = B/rho.
double neighborhood_radius(const EstimatorConstants& c, double gamma);

// Decreasing-step corollary, gamma_k = gamma / sqrt(k+1) with
// gamma <= min{ 1/(4(A+MC)), 1/(2L) }:
//   [gamma (delta0 + gamma M sigma0^2) + r0^2
//      + (D1/2 + M D2)(log t + 1)] / (gamma (sqrt(t) - 1)),
// valid for t >= 2.
double decaying_step_bound(const BoundInputs& in, double gamma0,
                           std::uint64_t t);

// Tighter constant-step bound for the smooth case (R = 0, D1 = D2 = 0),
// on the uniform average of x_0..x_{k-1}, with M = B/(2 rho) and
// gamma <= 1/(4(A+MC)):
//   (r0^2 + 2 M gamma^2 sigma0^2) / (gamma k),   k >= 1.
double vr_bound(const BoundInputs& in, double gamma, std::uint64_t k);

// Iterations needed by the smooth constant-step scheme at
// gamma = 1/(4(A + BC/(2 rho))) to reach E[f - f*] <= eps, given
// sigma_0^2 <= G r0^2:
//   k >= (4(A + BC/(2 rho)) + BG / (2 (2 rho A + B C))) r0^2 / eps.
double vr_iterations(const EstimatorConstants& c, double G, double r0_sq,
                     double eps);

// ---------------------------------------------------------------------------
// Total gradient-work complexities and their minimizing batch sizes
// ---------------------------------------------------------------------------

// Work (component-gradient evaluations) for the table estimator at batch
// size b, n components:
//   [ 4(3(n-b)Lmax + 2n(b-1)L)/(n-1)
//     + n(n-b) Lmax L / (2(3(n-b)Lmax + 2n(b-1)L)) ] r0^2 / eps.
double k_saga(int b, int n, double L, double L_max, double r0_sq, double eps);

// Work for the anchored estimator at batch size b with refresh probability
// 1/n:  (1+2b)(12 cal_L(b) + nL/6) r0^2 / eps.
double k_svrg(int b, int n, double L, double L_max, double r0_sq, double eps);

// Work for the coordinate-sketch estimator at block size b in dimension d:
//   4 (3d - b) L r0^2 / eps.
double k_sega(int b, int d, double L, double r0_sq, double eps);

// Batch size minimizing k_saga over b in [1, n] (closed form).
int optimal_b_saga(int n, double L, double L_max);

// Batch size minimizing k_svrg over b in [1, n]: continuous stationary point
//   6 sqrt( n(Lmax - L) / (72(nL - Lmax) + n(n-1)L) ),
// rounded by comparing k_svrg at the neighboring integers (ties toward the
// smaller batch), clamped to [1, n].
int optimal_b_svrg(int n, double L, double L_max);

// Block size minimizing k_sega: always d.
int optimal_b_sega(int d);

}  // namespace proxsg
