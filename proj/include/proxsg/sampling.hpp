#pragma once

#include <cstdint>
#include <vector>

#include "proxsg/rng.hpp"

namespace proxsg {

enum class SamplingKind { BNice, SingleElement, FullBatch };

// A realized mini-batch: sorted component indices plus the weight each one
// carries in the unbiased subsampled gradient (1/n) * sum_i v_i grad f_i(x).
struct SampledBatch {
  std::vector<int> indices;
  std::vector<double> weights;
};

// One outcome of the sampling distribution together with its probability;
// enumerating all atoms lets diagnostics compute conditional expectations
// exactly.
struct SupportAtom {
  std::vector<int> indices;
  std::vector<double> weights;
  double prob = 0.0;
};

// A sampling distribution over subsets of {0,...,n-1} with the weights that
// make the subsampled gradient estimator unbiased.
class SamplingScheme {
 public:
  static SamplingScheme b_nice(int n, int b);
  static SamplingScheme single_element(int n, std::vector<double> probs);
  static SamplingScheme single_element_uniform(int n);
  static SamplingScheme full_batch(int n);

  SamplingKind kind() const { return kind_; }
  int n() const { return n_; }
  int batch_size() const { return b_; }

  // P(i in S)
  double inclusion_prob(int i) const;

  // Number of atoms in the distribution's support.
  std::uint64_t support_size() const;

  // Draw one batch (indices sorted ascending).
  SampledBatch draw(RngStream& rng) const;

  // All atoms of the distribution. Errors if support_size() > max_atoms.
  std::vector<SupportAtom> enumerate_support(
      std::uint64_t max_atoms = 100000) const;

  const std::vector<double>& probabilities() const { return probs_; }

 private:
  SamplingScheme(SamplingKind kind, int n, int b, std::vector<double> probs)
      : kind_(kind), n_(n), b_(b), probs_(std::move(probs)) {}

  SamplingKind kind_;
  int n_;
  int b_;
  std::vector<double> probs_;  // single-element probabilities (empty otherwise)
};

// Expected smoothness constant of the subsampled gradient for a finite sum
// with component constants Li and mean-smoothness L:
//   - b-nice sampling admits the closed form
//       (1/b) * ((n-b)/(n-1)) * max_i Li + (n/b) * ((b-1)/(n-1)) * L
//     (equal to L when n = 1 and b = 1);
//   - single-element sampling with probabilities p_i gives
//       max_i Li / (n p_i);
//   - the full batch gives L itself.
double expected_smoothness(const SamplingScheme& scheme,
                           const std::vector<double>& Li, double L);

// Residual constant of b-nice sampling:
//   (1/b) * ((n-b)/(n-1)) * max_i Li,   zero when b = n (and when n = 1).
double expected_residual(int n, int b, double L_max);

}  // namespace proxsg
