#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "proxsg/rng.hpp"
#include "proxsg/sampling.hpp"

using namespace proxsg;

TEST_CASE("rng streams are deterministic and tag-separated") {
  RngStream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
  }
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) any_diff |= (a.next_u64() != c.next_u64());
  CHECK(any_diff);

  RngBundle bundle = RngBundle::for_seed(7);
  CHECK(bundle.batch.next_u64() != bundle.coin.next_u64());

  // uniform01 stays in [0, 1) and below() respects its bound
  RngStream u(9);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform01();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(17) < 17);
  }
}

TEST_CASE("scheme construction validates arguments") {
  CHECK_THROWS_AS(SamplingScheme::b_nice(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(SamplingScheme::b_nice(4, 0), std::invalid_argument);
  CHECK_THROWS_AS(SamplingScheme::b_nice(4, 5), std::invalid_argument);
  CHECK_THROWS_AS(SamplingScheme::single_element(2, {0.5, 0.4}),
                  std::invalid_argument);  // does not sum to one
  CHECK_THROWS_AS(SamplingScheme::single_element(2, {1.0, 0.0}),
                  std::invalid_argument);  // zero probability is not proper
  CHECK_THROWS_AS(SamplingScheme::single_element(2, {0.5}),
                  std::invalid_argument);  // wrong length
  CHECK_NOTHROW(SamplingScheme::b_nice(1, 1));
  CHECK_NOTHROW(SamplingScheme::single_element(3, {0.2, 0.3, 0.5}));
}

TEST_CASE("b-nice draws are uniform b-subsets with weight n/b") {
  const int n = 6, b = 2;
  const SamplingScheme scheme = SamplingScheme::b_nice(n, b);
  RngStream rng(123);
  std::vector<int> hits(size_t(n), 0);
  std::map<std::vector<int>, int> subset_hits;
  const int draws = 30000;
  for (int t = 0; t < draws; ++t) {
    const SampledBatch batch = scheme.draw(rng);
    REQUIRE(batch.indices.size() == size_t(b));
    CHECK(std::is_sorted(batch.indices.begin(), batch.indices.end()));
    CHECK(batch.indices[0] != batch.indices[1]);
    for (double w : batch.weights) CHECK(w == double(n) / double(b));
    for (int i : batch.indices) ++hits[size_t(i)];
    ++subset_hits[batch.indices];
  }
  // inclusion frequency b/n = 1/3 (tolerance ~5 sigma)
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(double(hits[size_t(i)]) / draws - 1.0 / 3.0) < 0.015);
  // all 15 subsets occur, roughly uniformly
  CHECK(subset_hits.size() == 15);
  for (const auto& [subset, count] : subset_hits)
    CHECK(std::abs(double(count) / draws - 1.0 / 15.0) < 0.01);
}

TEST_CASE("single-element draws follow the probability vector") {
  const std::vector<double> probs = {0.1, 0.2, 0.3, 0.4};
  const SamplingScheme scheme = SamplingScheme::single_element(4, probs);
  RngStream rng(5);
  std::vector<int> hits(4, 0);
  const int draws = 40000;
  for (int t = 0; t < draws; ++t) {
    const SampledBatch batch = scheme.draw(rng);
    REQUIRE(batch.indices.size() == 1);
    const int i = batch.indices[0];
    CHECK(batch.weights[0] == doctest::Approx(1.0 / probs[size_t(i)]));
    ++hits[size_t(i)];
  }
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(double(hits[size_t(i)]) / draws - probs[size_t(i)]) < 0.01);

  CHECK(scheme.inclusion_prob(2) == doctest::Approx(0.3));
}

TEST_CASE("full batch draws everything with unit weights") {
  const SamplingScheme scheme = SamplingScheme::full_batch(5);
  RngStream rng(1);
  const SampledBatch batch = scheme.draw(rng);
  REQUIRE(batch.indices.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(batch.indices[size_t(i)] == i);
    CHECK(batch.weights[size_t(i)] == 1.0);
  }
  CHECK(scheme.support_size() == 1);
}

TEST_CASE("support sizes and enumeration") {
  CHECK(SamplingScheme::b_nice(6, 2).support_size() == 15);
  CHECK(SamplingScheme::b_nice(30, 5).support_size() == 142506);
  CHECK(SamplingScheme::single_element_uniform(7).support_size() == 7);
  // C(100, 50) overflows 64 bits; the count saturates instead of wrapping
  CHECK(SamplingScheme::b_nice(100, 50).support_size() >
        std::uint64_t(1) << 62);

  const auto atoms = SamplingScheme::b_nice(4, 2).enumerate_support();
  REQUIRE(atoms.size() == 6);
  std::set<std::vector<int>> seen;
  double total_prob = 0.0;
  for (const auto& atom : atoms) {
    CHECK(atom.prob == doctest::Approx(1.0 / 6.0));
    CHECK(atom.indices.size() == 2);
    seen.insert(atom.indices);
    total_prob += atom.prob;
  }
  CHECK(seen.size() == 6);
  CHECK(total_prob == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(SamplingScheme::b_nice(40, 20).enumerate_support(1000),
                  std::runtime_error);
}

// E[v_i] = 1 for every component, exactly, under enumeration: the weights
// make the subsampled gradient unbiased.
TEST_CASE("sampling vectors have unit expectation under enumeration") {
  const auto check_unit_expectation = [](const SamplingScheme& scheme) {
    std::vector<double> ev(size_t(scheme.n()), 0.0);
    for (const auto& atom : scheme.enumerate_support()) {
      for (size_t j = 0; j < atom.indices.size(); ++j)
        ev[size_t(atom.indices[j])] += atom.prob * atom.weights[j];
    }
    for (double e : ev) CHECK(e == doctest::Approx(1.0).epsilon(1e-13));
  };
  check_unit_expectation(SamplingScheme::b_nice(5, 2));
  check_unit_expectation(SamplingScheme::b_nice(5, 5));
  check_unit_expectation(
      SamplingScheme::single_element(4, {0.1, 0.2, 0.3, 0.4}));
  check_unit_expectation(SamplingScheme::full_batch(3));
}

TEST_CASE("expected smoothness closed forms") {
  // frozen oracle: n=4, b=2, L_max=10, L=4
  const std::vector<double> Li = {10, 4, 2, 1};
  const double L = 4;
  CHECK(expected_smoothness(SamplingScheme::b_nice(4, 2), Li, L) ==
        doctest::Approx(6.0).epsilon(1e-14));
  CHECK(expected_residual(4, 2, 10) ==
        doctest::Approx(10.0 / 3.0).epsilon(1e-14));

  // endpoints: single element recovers L_max, full batch recovers L
  CHECK(expected_smoothness(SamplingScheme::b_nice(4, 1), Li, L) ==
        doctest::Approx(10.0));
  CHECK(expected_smoothness(SamplingScheme::b_nice(4, 4), Li, L) ==
        doctest::Approx(4.0));
  CHECK(expected_residual(4, 4, 10) == 0.0);
  CHECK(expected_residual(1, 1, 10) == 0.0);

  // n = 1 is deterministic: the constant collapses to L
  CHECK(expected_smoothness(SamplingScheme::b_nice(1, 1), {7.0}, 7.0) ==
        doctest::Approx(7.0));

  // single-element uniform: max_i L_i / (n p_i) = L_max
  CHECK(expected_smoothness(SamplingScheme::single_element_uniform(4), Li, L)
        == doctest::Approx(10.0));
  // importance weighting shifts the constant
  CHECK(expected_smoothness(
            SamplingScheme::single_element(4, {0.5, 0.2, 0.2, 0.1}), Li, L) ==
        doctest::Approx(10.0 / (4 * 0.5)).epsilon(1e-14));
}

TEST_CASE("expected smoothness interpolates monotonically in b") {
  const std::vector<double> Li = {9, 3, 2, 2, 1, 1};
  const double L = 2.5;  // L <= L_max
  double prev = 1e300;
  for (int b = 1; b <= 6; ++b) {
    const double cur =
        expected_smoothness(SamplingScheme::b_nice(6, b), Li, L);
    CHECK(cur <= prev + 1e-12);
    CHECK(cur >= L - 1e-12);
    CHECK(cur <= 9.0 + 1e-12);
    prev = cur;
  }
}
