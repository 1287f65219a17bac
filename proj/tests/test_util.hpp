#pragma once

// Shared fixtures and small oracles for the unit tests.

#include <cmath>
#include <random>
#include <vector>

#include "proxsg/data_io.hpp"
#include "proxsg/estimators.hpp"
#include "proxsg/problem.hpp"

namespace testutil {

using proxsg::FiniteSumObjective;
using proxsg::Mat;
using proxsg::Vec;

// n = 4, d = 2 quadratic with centers summing to zero: the R = 0 minimizer
// is the origin, so gradients at the optimum are just the negated centers.
inline FiniteSumObjective quad4() {
  Mat centers(4, 2);
  centers << 2, 0, 0, 2, -2, 0, 0, -2;
  return FiniteSumObjective(
      std::make_shared<proxsg::QuadraticFamily>(std::move(centers)));
}

// n = 6, d = 3 quadratic with an off-origin minimizer.
inline FiniteSumObjective quad6() {
  Mat centers(6, 3);
  centers << 1, 2, -1, -2, 0.5, 1.5, 0, -1, 2, 3, 1, 0, -1.5, -0.5, -2, 0.5,
      1.5, 1;
  return FiniteSumObjective(
      std::make_shared<proxsg::QuadraticFamily>(std::move(centers)));
}

// Small dense least-squares instance with hand-checkable oracles.
inline FiniteSumObjective ls2() {
  Mat A(2, 2);
  A << 1, 2, 3, -1;
  Vec y(2);
  y << 1, -2;
  return FiniteSumObjective(std::make_shared<proxsg::DataFamily>(
      std::move(A), std::move(y), proxsg::LossKind::LeastSquares));
}

// Deterministic dense matrix / vector fill for reproducible tests. Uses the
// std generator (not the project streams) so tests are independent of the
// library's rng implementation.
inline Mat random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Mat A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = normal(gen);
  return A;
}

inline Vec random_vector(int dim, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(gen);
  return v;
}

// Random least-squares / logistic data family.
inline FiniteSumObjective random_data(int n, int d, unsigned seed,
                                      proxsg::LossKind loss) {
  Mat A = random_matrix(n, d, seed);
  Vec y(n);
  if (loss == proxsg::LossKind::Logistic) {
    std::mt19937_64 gen(seed + 1);
    for (int i = 0; i < n; ++i) y[i] = (gen() & 1) ? 1.0 : -1.0;
  } else {
    y = random_vector(n, seed + 1);
  }
  return FiniteSumObjective(
      std::make_shared<proxsg::DataFamily>(std::move(A), std::move(y), loss));
}

// Bregman divergence of the smooth part, D_f(x, y).
inline double bregman(const FiniteSumObjective& obj, const Vec& x,
                      const Vec& y) {
  return obj.value(x) - obj.value(y) - obj.gradient(y).dot(x - y);
}

// Exact mean of the estimator's gradient over the enumerated batch support.
inline Vec enumerated_mean(const proxsg::Estimator& est, const Vec& x) {
  const auto atoms = est.support()->enumerate_support();
  Vec mean = Vec::Zero(x.size());
  for (const auto& atom : atoms) mean += atom.prob * est.gradient_for(x, atom);
  return mean;
}

}  // namespace testutil
