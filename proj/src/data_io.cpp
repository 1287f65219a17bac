#include "proxsg/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace proxsg {

namespace {

bool parse_double(const char* first, const char* last, double& out) {
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

bool parse_int(const char* first, const char* last, int& out) {
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset parse_libsvm(std::istream& in) {
  Dataset data;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip end-of-line comment
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // tokenize on spaces/tabs
    std::vector<std::pair<size_t, size_t>> tokens;  // [begin, end)
    size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' ||
                                   line[pos] == '\r'))
        ++pos;
      if (pos >= line.size()) break;
      size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
             line[end] != '\r')
        ++end;
      tokens.emplace_back(pos, end);
      pos = end;
    }
    if (tokens.empty()) continue;  // blank line

    SparseExample ex;
    {
      const char* b = line.data() + tokens[0].first;
      const char* e = line.data() + tokens[0].second;
      if (b < e && *b == '+') ++b;  // allow an explicit leading '+'
      if (!parse_double(b, e, ex.label))
        throw ParseError("malformed label '" +
                             line.substr(tokens[0].first,
                                         tokens[0].second - tokens[0].first) +
                             "'",
                         lineno);
    }
    int prev_index = 0;
    for (size_t t = 1; t < tokens.size(); ++t) {
      const std::string tok =
          line.substr(tokens[t].first, tokens[t].second - tokens[t].first);
      const size_t colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 >= tok.size())
        throw ParseError("malformed feature token '" + tok + "'", lineno);
      int idx = 0;
      double val = 0.0;
      if (!parse_int(tok.data(), tok.data() + colon, idx) || idx < 1)
        throw ParseError("feature index must be a positive integer in '" +
                             tok + "'",
                         lineno);
      if (!parse_double(tok.data() + colon + 1, tok.data() + tok.size(), val))
        throw ParseError("malformed feature value in '" + tok + "'", lineno);
      if (idx <= prev_index)
        throw ParseError("feature indices must be strictly increasing ('" +
                             tok + "' after index " +
                             std::to_string(prev_index) + ")",
                         lineno);
      prev_index = idx;
      ex.indices.push_back(idx);
      ex.values.push_back(val);
      data.dim = std::max(data.dim, idx);
    }
    data.examples.push_back(std::move(ex));
  }
  if (data.examples.empty())
    throw ParseError("no examples found", lineno == 0 ? 1 : lineno);
  return data;
}

Dataset parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (const SparseExample& ex : data.examples) {
    out << format_real(ex.label);
    for (size_t j = 0; j < ex.indices.size(); ++j)
      out << ' ' << ex.indices[j] << ':' << format_real(ex.values[j]);
    out << '\n';
  }
}

void write_libsvm_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_libsvm(out, data);
}

FiniteSumObjective make_objective(const Dataset& data, LossKind loss,
                                  int min_dim) {
  const int n = int(data.examples.size());
  const int d = std::max(data.dim, min_dim);
  if (d < 1)
    throw std::runtime_error("dataset has no features");
  Mat A = Mat::Zero(n, d);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    const SparseExample& ex = data.examples[size_t(i)];
    y[i] = ex.label;
    for (size_t j = 0; j < ex.indices.size(); ++j)
      A(i, ex.indices[j] - 1) = ex.values[j];
  }
  if (loss == LossKind::Logistic) {
    std::set<double> distinct(y.data(), y.data() + y.size());
    if (distinct.size() != 2)
      throw std::runtime_error(
          "logistic loss needs exactly two distinct label values, found " +
          std::to_string(distinct.size()));
    const double lo = *distinct.begin();
    for (int i = 0; i < n; ++i) y[i] = (y[i] == lo) ? -1.0 : 1.0;
  }
  return FiniteSumObjective(
      std::make_shared<DataFamily>(std::move(A), std::move(y), loss));
}

FiniteSumObjective gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.d < 1)
    throw std::invalid_argument("synthetic: n and d must be >= 1");
  if (!(spec.condition >= 1.0))
    throw std::invalid_argument("synthetic: condition must be >= 1");

  RngStream rng(mix_seed(spec.seed, 0x5E17));
  const int n = spec.n, d = spec.d;
  // The ratio L_max / L of an n-row design cannot exceed n; saturate the
  // target accordingly.
  const double target =
      n > 1 ? std::min(spec.condition, 0.9 * double(n)) : 1.0;

  Vec u(d);
  for (int j = 0; j < d; ++j) u[j] = rng.normal();
  if (u.norm() == 0.0) u[0] = 1.0;
  u.normalize();

  Mat G(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();

  const auto build = [&](double eps) {
    Mat A(n, d);
    for (int i = 0; i < n; ++i) {
      Vec row = u + eps * G.row(i).transpose();
      const double nr = row.norm();
      A.row(i) = (nr > 0.0 ? row / nr : u).transpose();
    }
    return A;
  };
  const auto ratio_of = [&](const Mat& A) {
    FiniteSumObjective obj(std::make_shared<DataFamily>(A, Vec::Zero(n).eval(),
                                                        LossKind::LeastSquares));
    return obj.max_component_smoothness() / obj.smoothness();
  };

  // Near-parallel unit rows: shrink the perturbation until the base design is
  // better conditioned than the target.
  double eps = 0.5;
  Mat A = build(eps);
  for (int it = 0; it < 60 && ratio_of(A) > std::max(1.05, 0.5 * target);
       ++it) {
    eps *= 0.5;
    A = build(eps);
  }

  // Stretch one row along the dominant direction to set L_max / L, then
  // correct multiplicatively against the measured ratio.
  if (target > 1.05 && n > 1) {
    double beta_sq = target * double(n - 1) / (double(n) - target);
    for (int it = 0; it < 25; ++it) {
      Mat B = A;
      B.row(0) = std::sqrt(beta_sq) * u.transpose();
      const double achieved = ratio_of(B);
      if (achieved > 0.75 * target && achieved < 1.3333 * target) {
        A = B;
        break;
      }
      beta_sq *= target / achieved;
      if (it == 24) A = B;
    }
  }

  // Labels from a planted parameter vector.
  Vec xhat(d);
  for (int j = 0; j < d; ++j) xhat[j] = rng.normal();
  xhat /= std::sqrt(double(d));
  Vec y(n);
  if (spec.loss == LossKind::LeastSquares) {
    for (int i = 0; i < n; ++i)
      y[i] = A.row(i).dot(xhat) + 0.1 * rng.normal();
  } else {
    for (int i = 0; i < n; ++i) {
      const double s = A.row(i).dot(xhat) >= 0.0 ? 1.0 : -1.0;
      y[i] = rng.bernoulli(0.15) ? -s : s;
    }
  }
  return FiniteSumObjective(
      std::make_shared<DataFamily>(std::move(A), std::move(y), spec.loss));
}

void write_run_records_csv(std::ostream& out,
                           const std::vector<RunRecord>& records) {
  out << "algo,b,gamma,seed,iters,grad_evals,rel_subopt\n";
  for (const RunRecord& r : records) {
    out << r.algo << ',' << r.b << ',' << format_real(r.gamma) << ',' << r.seed
        << ',' << r.iters << ',' << format_real(r.grad_evals) << ','
        << format_real(r.rel_subopt) << '\n';
  }
}

}  // namespace proxsg
