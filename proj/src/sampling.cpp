#include "proxsg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace proxsg {

SamplingScheme SamplingScheme::b_nice(int n, int b) {
  if (n < 1) throw std::invalid_argument("sampling: n must be >= 1");
  if (b < 1 || b > n)
    throw std::invalid_argument("sampling: batch size must be in [1, n]");
  return SamplingScheme(SamplingKind::BNice, n, b, {});
}

SamplingScheme SamplingScheme::single_element(int n,
                                              std::vector<double> probs) {
  if (n < 1) throw std::invalid_argument("sampling: n must be >= 1");
  if ((int)probs.size() != n)
    throw std::invalid_argument("sampling: need one probability per component");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw std::invalid_argument("sampling: probabilities must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("sampling: probabilities must sum to 1");
  return SamplingScheme(SamplingKind::SingleElement, n, 1, std::move(probs));
}

SamplingScheme SamplingScheme::single_element_uniform(int n) {
  if (n < 1) throw std::invalid_argument("sampling: n must be >= 1");
  return SamplingScheme(SamplingKind::SingleElement, n, 1,
                        std::vector<double>(n, 1.0 / n));
}

SamplingScheme SamplingScheme::full_batch(int n) {
  if (n < 1) throw std::invalid_argument("sampling: n must be >= 1");
  return SamplingScheme(SamplingKind::FullBatch, n, n, {});
}

double SamplingScheme::inclusion_prob(int i) const {
  if (i < 0 || i >= n_) throw std::out_of_range("sampling: index out of range");
  switch (kind_) {
    case SamplingKind::BNice:
      return double(b_) / double(n_);
    case SamplingKind::SingleElement:
      return probs_[i];
    case SamplingKind::FullBatch:
      return 1.0;
  }
  return 0.0;
}

std::uint64_t SamplingScheme::support_size() const {
  switch (kind_) {
    case SamplingKind::BNice: {
      // C(n, b), saturating at uint64 max on overflow.
      const std::uint64_t cap = ~std::uint64_t(0);
      std::uint64_t c = 1;
      const int k = std::min(b_, n_ - b_);
      for (int j = 1; j <= k; ++j) {
        const std::uint64_t num = std::uint64_t(n_ - k + j);
        if (c > cap / num) return cap;
        c = c * num / std::uint64_t(j);
      }
      return c;
    }
    case SamplingKind::SingleElement:
      return std::uint64_t(n_);
    case SamplingKind::FullBatch:
      return 1;
  }
  return 0;
}

SampledBatch SamplingScheme::draw(RngStream& rng) const {
  SampledBatch out;
  switch (kind_) {
    case SamplingKind::BNice: {
      // Partial Fisher-Yates over an index pool: first b_ entries are a
      // uniform b-subset.
      std::vector<int> pool(n_);
      std::iota(pool.begin(), pool.end(), 0);
      for (int j = 0; j < b_; ++j) {
        const int k = j + int(rng.below(std::uint64_t(n_ - j)));
        std::swap(pool[j], pool[k]);
      }
      out.indices.assign(pool.begin(), pool.begin() + b_);
      std::sort(out.indices.begin(), out.indices.end());
      out.weights.assign(size_t(b_), double(n_) / double(b_));
      return out;
    }
    case SamplingKind::SingleElement: {
      const double u = rng.uniform01();
      double acc = 0.0;
      int pick = n_ - 1;
      for (int i = 0; i < n_; ++i) {
        acc += probs_[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      out.indices = {pick};
      out.weights = {1.0 / probs_[size_t(pick)]};
      return out;
    }
    case SamplingKind::FullBatch: {
      out.indices.resize(size_t(n_));
      std::iota(out.indices.begin(), out.indices.end(), 0);
      out.weights.assign(size_t(n_), 1.0);
      return out;
    }
  }
  return out;
}

std::vector<SupportAtom> SamplingScheme::enumerate_support(
    std::uint64_t max_atoms) const {
  const std::uint64_t size = support_size();
  if (size > max_atoms)
    throw std::runtime_error(
        "sampling: support too large to enumerate (" + std::to_string(size) +
        " atoms, limit " + std::to_string(max_atoms) + ")");
  std::vector<SupportAtom> atoms;
  atoms.reserve(size_t(size));
  switch (kind_) {
    case SamplingKind::BNice: {
      const double prob = 1.0 / double(size);
      const double w = double(n_) / double(b_);
      std::vector<int> comb(static_cast<size_t>(b_));
      std::iota(comb.begin(), comb.end(), 0);
      while (true) {
        SupportAtom atom;
        atom.indices = comb;
        atom.weights.assign(size_t(b_), w);
        atom.prob = prob;
        atoms.push_back(std::move(atom));
        // next lexicographic combination
        int i = b_ - 1;
        while (i >= 0 && comb[size_t(i)] == n_ - b_ + i) --i;
        if (i < 0) break;
        ++comb[size_t(i)];
        for (int j = i + 1; j < b_; ++j) comb[size_t(j)] = comb[size_t(j - 1)] + 1;
      }
      return atoms;
    }
    case SamplingKind::SingleElement: {
      for (int i = 0; i < n_; ++i) {
        SupportAtom atom;
        atom.indices = {i};
        atom.weights = {1.0 / probs_[size_t(i)]};
        atom.prob = probs_[size_t(i)];
        atoms.push_back(std::move(atom));
      }
      return atoms;
    }
    case SamplingKind::FullBatch: {
      SupportAtom atom;
      atom.indices.resize(size_t(n_));
      std::iota(atom.indices.begin(), atom.indices.end(), 0);
      atom.weights.assign(size_t(n_), 1.0);
      atom.prob = 1.0;
      atoms.push_back(std::move(atom));
      return atoms;
    }
  }
  return atoms;
}

double expected_smoothness(const SamplingScheme& scheme,
                           const std::vector<double>& Li, double L) {
  const int n = scheme.n();
  if ((int)Li.size() != n)
    throw std::invalid_argument("expected_smoothness: need one Li per component");
  const double L_max = *std::max_element(Li.begin(), Li.end());
  switch (scheme.kind()) {
    case SamplingKind::BNice: {
      const int b = scheme.batch_size();
      if (n == 1) return L;  // single component: the estimator is the gradient
      const double nn = double(n), bb = double(b);
      return (1.0 / bb) * ((nn - bb) / (nn - 1.0)) * L_max +
             (nn / bb) * ((bb - 1.0) / (nn - 1.0)) * L;
    }
    case SamplingKind::SingleElement: {
      double best = 0.0;
      for (int i = 0; i < n; ++i)
        best = std::max(best, Li[size_t(i)] /
                                  (double(n) * scheme.probabilities()[size_t(i)]));
      return best;
    }
    case SamplingKind::FullBatch:
      return L;
  }
  return L_max;
}

double expected_residual(int n, int b, double L_max) {
  if (n < 1) throw std::invalid_argument("expected_residual: n must be >= 1");
  if (b < 1 || b > n)
    throw std::invalid_argument("expected_residual: b must be in [1, n]");
  if (n == 1 || b == n) return 0.0;
  const double nn = double(n), bb = double(b);
  return (1.0 / bb) * ((nn - bb) / (nn - 1.0)) * L_max;
}

}  // namespace proxsg
