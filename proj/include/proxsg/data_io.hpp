#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxsg/problem.hpp"

namespace proxsg {

// Parse/format errors carry the 1-based line number where they occurred.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::uint64_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " +
                           std::move(message)),
        line_(line) {}
  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

// One sparse example: label plus (index, value) pairs with 1-based,
// strictly increasing indices.
struct SparseExample {
  double label = 0.0;
  std::vector<int> indices;
  std::vector<double> values;
};

struct Dataset {
  std::vector<SparseExample> examples;
  int dim = 0;  // max feature index seen
};

// Sparse "label idx:value idx:value ..." rows; '#' starts an end-of-line
// comment, blank lines are skipped. Indices must be >= 1 and strictly
// increasing within a row. Errors report the offending line.
Dataset parse_libsvm(std::istream& in);
Dataset parse_libsvm_file(const std::string& path);

// Write in the same format; formatting uses shortest round-trip decimal
// representations, so write -> parse -> write is byte-identical.
void write_libsvm(std::ostream& out, const Dataset& data);
void write_libsvm_file(const std::string& path, const Dataset& data);

// Shortest decimal representation that round-trips a double exactly.
std::string format_real(double v);

// Build the finite-sum objective from a dataset. Features densify into one
// row per example. Logistic labels must take exactly two distinct values,
// which are mapped (smaller -> -1, larger -> +1); least squares keeps the
// raw labels.
FiniteSumObjective make_objective(const Dataset& data, LossKind loss,
                                  int min_dim = 0);

// Synthetic problem generator. `condition` targets the ratio L_max / L of
// the generated design (hit within a factor-of-two band); labels come from a
// planted parameter vector with mild noise, and logistic labels get ~15% of
// signs flipped.
struct SyntheticSpec {
  LossKind loss = LossKind::LeastSquares;
  int n = 100;
  int d = 10;
  double condition = 10.0;  // target L_max / L, must be >= 1
  std::uint64_t seed = 0;
};

FiniteSumObjective gen_synthetic(const SyntheticSpec& spec);

// One row of the grid/run summary CSV.
struct RunRecord {
  std::string algo;
  int b = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t iters = 0;
  double grad_evals = 0.0;
  double rel_subopt = 0.0;
};

// Header "algo,b,gamma,seed,iters,grad_evals,rel_subopt" plus one row per
// record, all reals via format_real.
void write_run_records_csv(std::ostream& out,
                           const std::vector<RunRecord>& records);

}  // namespace proxsg
