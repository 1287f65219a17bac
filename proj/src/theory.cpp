#include "proxsg/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace proxsg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack applied to step-size threshold checks so that steps chosen
// exactly at a threshold are not rejected by floating-point rounding.
constexpr double kThresholdSlack = 1e-12;

double anytime_threshold(const EstimatorConstants& c, double L) {
  const double M = c.B / c.rho;
  const double amc = c.A + M * c.C;
  const double part = amc > 0.0 ? 1.0 / (2.0 * amc) : kInf;
  if (!(L > 0.0)) throw std::invalid_argument("bound: L must be > 0");
  return std::min(part, 1.0 / L);
}

void validate_constants(const EstimatorConstants& c) {
  if (!(c.rho > 0.0) || c.rho > 1.0)
    throw std::invalid_argument("bound: rho must be in (0, 1]");
  if (c.A < 0.0 || c.B < 0.0 || c.C < 0.0 || c.D1 < 0.0 || c.D2 < 0.0)
    throw std::invalid_argument("bound: constants must be nonnegative");
}

}  // namespace

double m_factor(const EstimatorConstants& c, MConvention convention) {
  validate_constants(c);
  return convention == MConvention::AnytimeAverage ? c.B / c.rho
                                                   : c.B / (2.0 * c.rho);
}

StepSizePolicy StepSizePolicy::constant(double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("step policy: gamma must be > 0");
  return StepSizePolicy(Kind::Constant, gamma);
}

StepSizePolicy StepSizePolicy::inv_sqrt(double gamma0) {
  if (!(gamma0 > 0.0))
    throw std::invalid_argument("step policy: gamma0 must be > 0");
  return StepSizePolicy(Kind::InvSqrt, gamma0);
}

double StepSizePolicy::at(std::uint64_t k) const {
  if (kind_ == Kind::Constant) return gamma0_;
  return gamma0_ / std::sqrt(double(k + 1));
}

double default_constant_step(const EstimatorConstants& c, double L) {
  validate_constants(c);
  if (!(L > 0.0))
    throw std::invalid_argument("step size: L must be > 0");
  const double M = c.B / c.rho;
  const double amc = c.A + M * c.C;
  const double part = amc > 0.0 ? 1.0 / (4.0 * amc) : kInf;
  return std::min(part, 1.0 / (2.0 * L));
}

double vr_constant_step(const EstimatorConstants& c) {
  validate_constants(c);
  const double amc = c.A + (c.B / (2.0 * c.rho)) * c.C;
  if (!(amc > 0.0))
    throw std::invalid_argument("step size: A + (B/(2 rho)) C must be > 0");
  return 1.0 / (4.0 * amc);
}

double unified_bound(const BoundInputs& in, const StepSizePolicy& policy,
                     std::uint64_t t) {
  validate_constants(in.c);
  if (t < 1) throw std::invalid_argument("bound: t must be >= 1");
  const double gamma0 = policy.at(0);
  const double threshold = anytime_threshold(in.c, in.L);
  if (!(gamma0 < threshold))
    throw std::domain_error("bound: gamma_0 must be strictly below the step "
                            "threshold");
  const double M = in.c.B / in.c.rho;
  const double amc = in.c.A + M * in.c.C;

  double sum_sq = 0.0;
  double den = 0.0;
  for (std::uint64_t k = 0; k < t; ++k) {
    const double g = policy.at(k);
    sum_sq += g * g;
    den += (1.0 - 2.0 * g * amc) * g;
  }
  const double num = in.r0_sq + 2.0 * gamma0 * (in.delta0 + gamma0 * M * in.sigma0_sq) +
                     2.0 * (in.c.D1 + 2.0 * M * in.c.D2) * sum_sq;
  return num / (2.0 * den);
}

double fixed_step_bound(const BoundInputs& in, double gamma, std::uint64_t t) {
  validate_constants(in.c);
  if (t < 1) throw std::invalid_argument("bound: t must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("bound: gamma must be > 0");
  const double M = in.c.B / in.c.rho;
  const double amc = in.c.A + M * in.c.C;
  const double part = amc > 0.0 ? 1.0 / (4.0 * amc) : kInf;
  if (!(in.L > 0.0)) throw std::invalid_argument("bound: L must be > 0");
  const double limit = std::min(part, 1.0 / (2.0 * in.L));
  if (gamma > limit * (1.0 + kThresholdSlack))
    throw std::domain_error("bound: gamma exceeds the constant-step limit");
  return (2.0 * gamma * (in.delta0 + gamma * M * in.sigma0_sq) + in.r0_sq) /
             (gamma * double(t)) +
         neighborhood_radius(in.c, gamma);
}

double neighborhood_radius(const EstimatorConstants& c, double gamma) {
  validate_constants(c);
  if (!(gamma > 0.0)) throw std::invalid_argument("bound: gamma must be > 0");
  const double M = c.B / c.rho;
  return 2.0 * gamma * (c.D1 + M * c.D2);
}

double decaying_step_bound(const BoundInputs& in, double gamma0,
                           std::uint64_t t) {
  validate_constants(in.c);
  if (t < 2) throw std::invalid_argument("bound: t must be >= 2");
  if (!(gamma0 > 0.0)) throw std::invalid_argument("bound: gamma must be > 0");
  const double M = in.c.B / in.c.rho;
  const double amc = in.c.A + M * in.c.C;
  const double part = amc > 0.0 ? 1.0 / (4.0 * amc) : kInf;
  if (!(in.L > 0.0)) throw std::invalid_argument("bound: L must be > 0");
  const double limit = std::min(part, 1.0 / (2.0 * in.L));
  if (gamma0 > limit * (1.0 + kThresholdSlack))
    throw std::domain_error("bound: gamma exceeds the constant-step limit");
  const double num =
      gamma0 * (in.delta0 + gamma0 * M * in.sigma0_sq) + in.r0_sq +
      (in.c.D1 / 2.0 + M * in.c.D2) * (std::log(double(t)) + 1.0);
  return num / (gamma0 * (std::sqrt(double(t)) - 1.0));
}

double vr_bound(const BoundInputs& in, double gamma, std::uint64_t k) {
  validate_constants(in.c);
  if (k < 1) throw std::invalid_argument("bound: k must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("bound: gamma must be > 0");
  if (!in.zero_regularizer)
    throw std::invalid_argument(
        "bound: the smooth-case bound needs a zero regularizer");
  if (in.c.D1 != 0.0 || in.c.D2 != 0.0)
    throw std::invalid_argument(
        "bound: the smooth-case bound needs D1 = D2 = 0");
  const double M = in.c.B / (2.0 * in.c.rho);
  const double amc = in.c.A + M * in.c.C;
  const double limit = amc > 0.0 ? 1.0 / (4.0 * amc) : kInf;
  if (gamma > limit * (1.0 + kThresholdSlack))
    throw std::domain_error("bound: gamma exceeds the smooth-case limit");
  return (in.r0_sq + 2.0 * M * gamma * gamma * in.sigma0_sq) /
         (gamma * double(k));
}

double vr_iterations(const EstimatorConstants& c, double G, double r0_sq,
                     double eps) {
  validate_constants(c);
  if (!(eps > 0.0)) throw std::invalid_argument("complexity: eps must be > 0");
  if (G < 0.0) throw std::invalid_argument("complexity: G must be >= 0");
  const double amc = c.A + c.B * c.C / (2.0 * c.rho);
  if (!(amc > 0.0))
    throw std::invalid_argument("complexity: A + BC/(2 rho) must be > 0");
  double k = 4.0 * amc;
  if (c.B > 0.0)
    k += c.B * G / (2.0 * (2.0 * c.rho * c.A + c.B * c.C));
  return k * r0_sq / eps;
}

namespace {

void validate_spectrum(int n, double L, double L_max) {
  if (n < 1) throw std::invalid_argument("complexity: n must be >= 1");
  if (!(L > 0.0) || !(L_max > 0.0))
    throw std::invalid_argument("complexity: L and L_max must be > 0");
  // L <= L_max <= n L holds for any finite sum of convex smooth components;
  // allow a little rounding slack from measured constants.
  if (L > L_max * (1.0 + 1e-9) || L_max > double(n) * L * (1.0 + 1e-9))
    throw std::invalid_argument(
        "complexity: need L <= L_max <= n L (up to rounding)");
}

double cal_L(int b, int n, double L, double L_max) {
  if (n == 1) return L;
  const double nn = double(n), bb = double(b);
  return (1.0 / bb) * ((nn - bb) / (nn - 1.0)) * L_max +
         (nn / bb) * ((bb - 1.0) / (nn - 1.0)) * L;
}

}  // namespace

double k_saga(int b, int n, double L, double L_max, double r0_sq, double eps) {
  validate_spectrum(n, L, L_max);
  if (b < 1 || b > n)
    throw std::invalid_argument("complexity: b must be in [1, n]");
  if (!(eps > 0.0)) throw std::invalid_argument("complexity: eps must be > 0");
  if (n == 1) return 8.0 * L * r0_sq / eps;  // limit of the b = n expression
  const double nn = double(n), bb = double(b);
  const double inner = 3.0 * (nn - bb) * L_max + 2.0 * nn * (bb - 1.0) * L;
  return (4.0 * inner / (nn - 1.0) +
          nn * (nn - bb) * L_max * L / (2.0 * inner)) *
         r0_sq / eps;
}

double k_svrg(int b, int n, double L, double L_max, double r0_sq, double eps) {
  validate_spectrum(n, L, L_max);
  if (b < 1 || b > n)
    throw std::invalid_argument("complexity: b must be in [1, n]");
  if (!(eps > 0.0)) throw std::invalid_argument("complexity: eps must be > 0");
  return (1.0 + 2.0 * double(b)) *
         (12.0 * cal_L(b, n, L, L_max) + double(n) * L / 6.0) * r0_sq / eps;
}

double k_sega(int b, int d, double L, double r0_sq, double eps) {
  if (d < 1) throw std::invalid_argument("complexity: d must be >= 1");
  if (b < 1 || b > d)
    throw std::invalid_argument("complexity: block must be in [1, d]");
  if (!(L > 0.0)) throw std::invalid_argument("complexity: L must be > 0");
  if (!(eps > 0.0)) throw std::invalid_argument("complexity: eps must be > 0");
  return 4.0 * (3.0 * double(d) - double(b)) * L * r0_sq / eps;
}

int optimal_b_saga(int n, double L, double L_max) {
  validate_spectrum(n, L, L_max);
  if (n == 1) return 1;
  const double nn = double(n);
  const double disc = 2.0 * nn * L - 3.0 * L_max;
  if (disc <= 0.0) return n;
  const double b1 = nn *
                    ((nn - 1.0) * L * std::sqrt(L_max) -
                     2.0 * std::sqrt(disc) * (3.0 * L_max - 2.0 * L)) /
                    (2.0 * std::pow(disc, 1.5));
  if (b1 < 2.0) return 1;
  if (b1 >= nn) return n;
  return int(std::floor(b1));
}

int optimal_b_svrg(int n, double L, double L_max) {
  validate_spectrum(n, L, L_max);
  if (n == 1) return 1;
  const double nn = double(n);
  const double den = 72.0 * (nn * L - L_max) + nn * (nn - 1.0) * L;
  double bc;
  if (L_max <= L) {
    bc = 1.0;  // identical component constants: no variance to amortize
  } else if (den <= 0.0) {
    bc = nn;
  } else {
    bc = 6.0 * std::sqrt(nn * (L_max - L) / den);
  }
  bc = std::min(std::max(bc, 1.0), nn);
  const int lo = std::max(1, int(std::floor(bc)));
  const int hi = std::min(n, int(std::ceil(bc)));
  if (lo == hi) return lo;
  const double k_lo = k_svrg(lo, n, L, L_max, 1.0, 1.0);
  const double k_hi = k_svrg(hi, n, L, L_max, 1.0, 1.0);
  return k_lo <= k_hi ? lo : hi;
}

int optimal_b_sega(int d) {
  if (d < 1) throw std::invalid_argument("complexity: d must be >= 1");
  return d;
}

}  // namespace proxsg
