#include "proxsg/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace proxsg {

namespace {

// Largest eigenvalue of the symmetric PSD matrix scale * A(rows)^T A(rows)
// via power iteration with a deterministic seeded start. The iteration
// approaches the top eigenvalue from below, so the result is a safe (never
// overestimated) smoothness constant.
double top_eigenvalue_gram(const Mat& A, const std::vector<int>& rows,
                           double scale) {
  const int d = int(A.cols());
  if (rows.empty() || scale == 0.0 || d == 0) return 0.0;
  RngStream rng(0x9E3779B97F4A7C15ull);
  Vec v(d);
  for (int j = 0; j < d; ++j) v[j] = rng.normal();
  double nv = v.norm();
  if (nv == 0.0) {
    v.setZero();
    v[0] = 1.0;
    nv = 1.0;
  }
  v /= nv;
  double lambda = 0.0;
  const double rel_tol = 1e-8;
  const int max_iters = 10000;
  for (int it = 0; it < max_iters; ++it) {
    Vec w = Vec::Zero(d);
    for (int r : rows) {
      const auto a = A.row(r);
      w.noalias() += a.transpose() * (a * v);
    }
    w *= scale;
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::max(lambda, 0.0);
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-z)) computed without overflow for large |z|.
inline double log1p_exp_neg(double z) {
  if (z >= 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

}  // namespace

// ---------------------------------------------------------------------------
// ComponentFamily defaults
// ---------------------------------------------------------------------------

void ComponentFamily::add_gradient(int i, const Vec& x, double scale,
                                   Vec& out) const {
  out.noalias() += scale * gradient(i, x);
}

double ComponentFamily::group_smoothness(const std::vector<int>& idx,
                                         double scale) const {
  const std::vector<double> Li = component_smoothness();
  double sum = 0.0;
  for (int i : idx) sum += Li.at(size_t(i));
  return scale * sum;
}

// ---------------------------------------------------------------------------
// DataFamily
// ---------------------------------------------------------------------------

DataFamily::DataFamily(Mat A, Vec y, LossKind loss)
    : A_(std::move(A)), y_(std::move(y)), loss_(loss) {
  if (A_.rows() < 1) throw std::invalid_argument("data family: empty matrix");
  if (A_.rows() != y_.size())
    throw std::invalid_argument("data family: need one label per row");
  if (loss_ == LossKind::Logistic) {
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (y_[i] != 1.0 && y_[i] != -1.0)
        throw std::invalid_argument(
            "data family: logistic labels must be -1 or +1");
    }
  }
}

double DataFamily::value(int i, const Vec& x) const {
  const double z = A_.row(i).dot(x);
  if (loss_ == LossKind::LeastSquares) {
    const double r = z - y_[i];
    return 0.5 * r * r;
  }
  return log1p_exp_neg(y_[i] * z);
}

Vec DataFamily::gradient(int i, const Vec& x) const {
  Vec g = Vec::Zero(dim());
  add_gradient(i, x, 1.0, g);
  return g;
}

void DataFamily::add_gradient(int i, const Vec& x, double scale,
                              Vec& out) const {
  const double z = A_.row(i).dot(x);
  if (loss_ == LossKind::LeastSquares) {
    out.noalias() += (scale * (z - y_[i])) * A_.row(i).transpose();
  } else {
    const double coeff = -y_[i] * sigmoid(-y_[i] * z);
    out.noalias() += (scale * coeff) * A_.row(i).transpose();
  }
}

std::vector<double> DataFamily::component_smoothness() const {
  std::vector<double> Li(static_cast<size_t>(count()));
  const double factor = loss_ == LossKind::LeastSquares ? 1.0 : 0.25;
  for (int i = 0; i < count(); ++i)
    Li[size_t(i)] = factor * A_.row(i).squaredNorm();
  return Li;
}

double DataFamily::mean_smoothness() const {
  std::vector<int> all(static_cast<size_t>(count()));
  for (int i = 0; i < count(); ++i) all[size_t(i)] = i;
  return group_smoothness(all, 1.0 / double(count()));
}

double DataFamily::group_smoothness(const std::vector<int>& idx,
                                    double scale) const {
  const double factor = loss_ == LossKind::LeastSquares ? 1.0 : 0.25;
  return top_eigenvalue_gram(A_, idx, scale * factor);
}

// ---------------------------------------------------------------------------
// QuadraticFamily
// ---------------------------------------------------------------------------

QuadraticFamily::QuadraticFamily(Mat centers) : centers_(std::move(centers)) {
  if (centers_.rows() < 1)
    throw std::invalid_argument("quadratic family: need at least one center");
}

double QuadraticFamily::value(int i, const Vec& x) const {
  return 0.5 * (x - centers_.row(i).transpose()).squaredNorm();
}

Vec QuadraticFamily::gradient(int i, const Vec& x) const {
  return x - centers_.row(i).transpose();
}

std::vector<double> QuadraticFamily::component_smoothness() const {
  return std::vector<double>(size_t(count()), 1.0);
}

double QuadraticFamily::group_smoothness(const std::vector<int>& idx,
                                         double scale) const {
  return scale * double(idx.size());
}

// ---------------------------------------------------------------------------
// FiniteSumObjective
// ---------------------------------------------------------------------------

FiniteSumObjective::FiniteSumObjective(
    std::shared_ptr<const ComponentFamily> family)
    : family_(std::move(family)) {
  if (!family_) throw std::invalid_argument("objective: null family");
  Li_ = family_->component_smoothness();
  L_max_ = *std::max_element(Li_.begin(), Li_.end());
  L_ = family_->mean_smoothness();
}

double FiniteSumObjective::value(const Vec& x) const {
  double s = 0.0;
  for (int i = 0; i < count(); ++i) s += family_->value(i, x);
  return s / double(count());
}

Vec FiniteSumObjective::gradient(const Vec& x) const {
  Vec g = Vec::Zero(dim());
  const double scale = 1.0 / double(count());
  for (int i = 0; i < count(); ++i) family_->add_gradient(i, x, scale, g);
  return g;
}

Vec subsample_gradient(const FiniteSumObjective& objective,
                       const SampledBatch& batch, const Vec& x) {
  Vec g = Vec::Zero(objective.dim());
  const double scale = 1.0 / double(objective.count());
  for (size_t j = 0; j < batch.indices.size(); ++j)
    objective.family().add_gradient(batch.indices[j], x,
                                    scale * batch.weights[j], g);
  return g;
}

// ---------------------------------------------------------------------------
// Regularizer
// ---------------------------------------------------------------------------

Regularizer Regularizer::zero() { return Regularizer(RegKind::Zero, 0.0); }

Regularizer Regularizer::l1(double lambda) {
  if (lambda < 0.0)
    throw std::invalid_argument("regularizer: lambda must be >= 0");
  return Regularizer(RegKind::L1, lambda);
}

Regularizer Regularizer::squared_l2(double lambda) {
  if (lambda < 0.0)
    throw std::invalid_argument("regularizer: lambda must be >= 0");
  return Regularizer(RegKind::SquaredL2, lambda);
}

double Regularizer::value(const Vec& x) const {
  switch (kind_) {
    case RegKind::Zero:
      return 0.0;
    case RegKind::L1:
      return lambda_ * x.lpNorm<1>();
    case RegKind::SquaredL2:
      return 0.5 * lambda_ * x.squaredNorm();
  }
  return 0.0;
}

Vec Regularizer::prox(double gamma, const Vec& y) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox: gamma must be > 0");
  switch (kind_) {
    case RegKind::Zero:
      return y;
    case RegKind::L1: {
      const double t = gamma * lambda_;
      Vec out(y.size());
      for (Eigen::Index j = 0; j < y.size(); ++j) {
        const double v = y[j];
        out[j] = v > t ? v - t : (v < -t ? v + t : 0.0);
      }
      return out;
    }
    case RegKind::SquaredL2:
      return y / (1.0 + gamma * lambda_);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Reference solution
// ---------------------------------------------------------------------------

ReferenceSolution solve_reference(const CompositeProblem& problem,
                                  double tol, std::uint64_t max_iters) {
  const double L = problem.objective.smoothness();
  if (!(L > 0.0))
    throw std::invalid_argument("reference solve: smoothness constant is 0");
  const double gamma = 1.0 / L;
  Vec x = Vec::Zero(problem.objective.dim());

  ReferenceSolution out;
  out.converged = false;
  double residual = 0.0;
  std::uint64_t it = 0;
  for (; it < max_iters; ++it) {
    const Vec g = problem.objective.gradient(x);
    const Vec cand = problem.reg.prox(gamma, x - gamma * g);
    residual = (x - cand).norm();
    if (residual <= tol) {
      out.converged = true;
      break;
    }
    x = cand;
  }

  out.x_star = x;
  out.F_star = problem.full_value(x);
  out.residual = residual;
  out.iters = it;
  const int n = problem.objective.count();
  const int d = problem.objective.dim();
  out.grads_at_star.resize(d, n);
  for (int i = 0; i < n; ++i)
    out.grads_at_star.col(i) = problem.objective.component_gradient(i, x);
  out.full_grad_at_star = out.grads_at_star.rowwise().mean();
  return out;
}

// ---------------------------------------------------------------------------
// Gradient noise
// ---------------------------------------------------------------------------

NoiseEstimate gradient_noise(const FiniteSumObjective& objective,
                             const SamplingScheme& scheme,
                             const ReferenceSolution& ref, NoiseMode mode,
                             RngStream* mc, std::uint64_t enumerate_cutoff,
                             std::uint64_t mc_samples) {
  const int n = objective.count();
  if (scheme.n() != n)
    throw std::invalid_argument("gradient_noise: scheme size mismatch");
  const Vec center = mode == NoiseMode::Centered
                         ? ref.full_grad_at_star
                         : Vec(Vec::Zero(objective.dim()));
  const double scale = 1.0 / double(n);

  NoiseEstimate out;
  if (scheme.support_size() <= enumerate_cutoff) {
    std::vector<SupportAtom> atoms = scheme.enumerate_support(enumerate_cutoff);
    double acc = 0.0;
    for (const SupportAtom& atom : atoms) {
      Vec g = Vec::Zero(objective.dim());
      for (size_t j = 0; j < atom.indices.size(); ++j)
        g.noalias() += (scale * atom.weights[j]) *
                       ref.grads_at_star.col(atom.indices[j]);
      acc += atom.prob * (g - center).squaredNorm();
    }
    out.value = acc;
    out.std_error = 0.0;
    out.samples = atoms.size();
    out.exact = true;
    return out;
  }

  if (mc == nullptr)
    throw std::invalid_argument(
        "gradient_noise: support too large to enumerate; a Monte Carlo "
        "stream is required");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t s = 0; s < mc_samples; ++s) {
    const SampledBatch batch = scheme.draw(*mc);
    Vec g = Vec::Zero(objective.dim());
    for (size_t j = 0; j < batch.indices.size(); ++j)
      g.noalias() +=
          (scale * batch.weights[j]) * ref.grads_at_star.col(batch.indices[j]);
    const double v = (g - center).squaredNorm();
    const double delta = v - mean;
    mean += delta / double(s + 1);
    m2 += delta * (v - mean);
  }
  out.value = mean;
  out.std_error =
      mc_samples > 1
          ? std::sqrt(m2 / double(mc_samples - 1) / double(mc_samples))
          : 0.0;
  out.samples = mc_samples;
  out.exact = false;
  return out;
}

}  // namespace proxsg
