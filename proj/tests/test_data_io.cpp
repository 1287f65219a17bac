#include <doctest.h>

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "proxsg/data_io.hpp"
#include "test_util.hpp"

using namespace proxsg;

namespace {

Dataset parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

std::string write_text(const Dataset& data) {
  std::ostringstream out;
  write_libsvm(out, data);
  return out.str();
}

void expect_parse_error(const std::string& text, std::uint64_t line,
                        const std::string& needle) {
  try {
    parse_text(text);
    FAIL("expected ParseError for: " << text);
  } catch (const ParseError& e) {
    CHECK(e.line() == line);
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
    CHECK(std::string(e.what()).find("line " + std::to_string(line)) !=
          std::string::npos);
  }
}

}  // namespace

TEST_CASE("parser handles labels, comments, and blank lines") {
  const Dataset data = parse_text(
      "# leading comment\n"
      "+1 1:0.5 3:-2\n"
      "\n"
      "-1 2:1e-3   4:7 # trailing comment\n"
      "2.5\n");
  REQUIRE(data.examples.size() == 3);
  CHECK(data.dim == 4);

  CHECK(data.examples[0].label == 1.0);
  REQUIRE(data.examples[0].indices.size() == 2);
  CHECK(data.examples[0].indices[0] == 1);
  CHECK(data.examples[0].indices[1] == 3);
  CHECK(data.examples[0].values[1] == -2.0);

  CHECK(data.examples[1].label == -1.0);
  CHECK(data.examples[1].values[0] == 1e-3);
  CHECK(data.examples[1].indices[1] == 4);

  CHECK(data.examples[2].label == 2.5);
  CHECK(data.examples[2].indices.empty());
}

TEST_CASE("parser reports the offending line") {
  expect_parse_error("1 1:2\nx 1:2\n", 2, "malformed label");
  expect_parse_error("1 0:2\n", 1, "positive integer");
  expect_parse_error("1 2:1 2:3\n", 1, "strictly increasing");
  expect_parse_error("1 3:1 2:3\n", 1, "strictly increasing");
  expect_parse_error("1 1:\n", 1, "malformed feature token");
  expect_parse_error("1 1\n", 1, "malformed feature token");
  expect_parse_error("1 1:abc\n", 1, "malformed feature value");
  expect_parse_error("# only comments\n\n", 2, "no examples");
  expect_parse_error("", 1, "no examples");
  // values must be finite
  expect_parse_error("1 1:1e999\n", 1, "malformed feature value");
}

TEST_CASE("format_real produces shortest exact representations") {
  CHECK(format_real(1.0) == "1");
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(-2.0) == "-2");
  for (const double v : {1.0 / 3.0, 0.1, 1e-3, 12345.678, -9.87e20,
                         5e-324, 1.7976931348623157e308}) {
    // std::stod rejects subnormals (ERANGE); from_chars round-trips exactly.
    const std::string s = format_real(v);
    double back = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(res.ec == std::errc{});
    CHECK(back == v);
  }
}

TEST_CASE("write then parse then write is byte-identical") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (int t = 0; t < 100; ++t) {
    Dataset data;
    const int n = 1 + int(gen() % 8);
    for (int i = 0; i < n; ++i) {
      SparseExample ex;
      ex.label = unif(gen);
      int idx = 0;
      const int nnz = int(gen() % 5);
      for (int j = 0; j < nnz; ++j) {
        idx += 1 + int(gen() % 3);
        ex.indices.push_back(idx);
        // mix magnitudes to stress the decimal formatter
        ex.values.push_back(unif(gen) * std::pow(10.0, int(gen() % 7) - 3));
        data.dim = std::max(data.dim, idx);
      }
      data.examples.push_back(std::move(ex));
    }
    const std::string once = write_text(data);
    if (data.examples.empty()) continue;
    const std::string twice = write_text(parse_text(once));
    CHECK(once == twice);
  }
}

TEST_CASE("make_objective densifies sparse rows") {
  const Dataset data = parse_text("1 2:3\n-1 1:2 4:1\n");
  const FiniteSumObjective obj = make_objective(data, LossKind::LeastSquares);
  CHECK(obj.count() == 2);
  CHECK(obj.dim() == 4);
  const auto& family = dynamic_cast<const DataFamily&>(obj.family());
  CHECK(family.matrix()(0, 1) == 3.0);
  CHECK(family.matrix()(0, 0) == 0.0);
  CHECK(family.matrix()(1, 0) == 2.0);
  CHECK(family.matrix()(1, 3) == 1.0);
  CHECK(family.labels()[0] == 1.0);
  CHECK(family.labels()[1] == -1.0);

  // min_dim pads trailing zero features
  const FiniteSumObjective wide =
      make_objective(data, LossKind::LeastSquares, 6);
  CHECK(wide.dim() == 6);

  // rows without features are an error unless min_dim supplies a dimension
  const Dataset bare = parse_text("1\n-1\n");
  CHECK_THROWS_WITH_AS(make_objective(bare, LossKind::LeastSquares),
                       doctest::Contains("no features"), std::runtime_error);
  CHECK(make_objective(bare, LossKind::LeastSquares, 2).dim() == 2);
}

TEST_CASE("make_objective maps logistic labels onto {-1,+1}") {
  const Dataset data = parse_text("0 1:1\n1 1:2\n0 1:3\n");
  const FiniteSumObjective obj = make_objective(data, LossKind::Logistic);
  const auto& family = dynamic_cast<const DataFamily&>(obj.family());
  CHECK(family.labels()[0] == -1.0);
  CHECK(family.labels()[1] == 1.0);
  CHECK(family.labels()[2] == -1.0);

  CHECK_THROWS_WITH_AS(
      make_objective(parse_text("0 1:1\n1 1:2\n2 1:3\n"), LossKind::Logistic),
      doctest::Contains("two distinct"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      make_objective(parse_text("1 1:1\n1 1:2\n"), LossKind::Logistic),
      doctest::Contains("two distinct"), std::runtime_error);
}

TEST_CASE("synthetic generator hits the conditioning target") {
  for (const double cond : {1.0, 3.0, 10.0, 40.0}) {
    SyntheticSpec spec;
    spec.n = 200;
    spec.d = 10;
    spec.condition = cond;
    spec.seed = 11;
    const FiniteSumObjective obj = gen_synthetic(spec);
    REQUIRE(obj.count() == 200);
    REQUIRE(obj.dim() == 10);
    const double ratio = obj.max_component_smoothness() / obj.smoothness();
    CHECK(ratio >= cond / 2.0);
    CHECK(ratio <= cond * 2.0);
  }
}

TEST_CASE("synthetic generator is deterministic in the seed") {
  SyntheticSpec spec;
  spec.loss = LossKind::Logistic;
  spec.n = 30;
  spec.d = 5;
  spec.condition = 5.0;
  spec.seed = 42;
  const FiniteSumObjective a = gen_synthetic(spec);
  const FiniteSumObjective b = gen_synthetic(spec);
  const auto& fa = dynamic_cast<const DataFamily&>(a.family());
  const auto& fb = dynamic_cast<const DataFamily&>(b.family());
  CHECK(fa.matrix() == fb.matrix());
  CHECK(fa.labels() == fb.labels());
  for (int i = 0; i < 30; ++i)
    CHECK(std::abs(fa.labels()[i]) == 1.0);  // logistic labels are signs

  spec.seed = 43;
  const FiniteSumObjective c = gen_synthetic(spec);
  const auto& fc = dynamic_cast<const DataFamily&>(c.family());
  CHECK(fa.matrix() != fc.matrix());
}

TEST_CASE("synthetic generator validates its arguments") {
  SyntheticSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(gen_synthetic(spec), std::invalid_argument);
  spec.n = 10;
  spec.d = 0;
  CHECK_THROWS_AS(gen_synthetic(spec), std::invalid_argument);
  spec.d = 3;
  spec.condition = 0.5;
  CHECK_THROWS_AS(gen_synthetic(spec), std::invalid_argument);
  spec.condition = 1.0;
  spec.n = 1;  // single-row designs are legal; ratio is exactly 1
  const FiniteSumObjective obj = gen_synthetic(spec);
  CHECK(obj.max_component_smoothness() ==
        doctest::Approx(obj.smoothness()));
}

TEST_CASE("run-record CSV has a fixed layout") {
  std::vector<RunRecord> records(2);
  records[0] = {"saga", 2, 0.25, 7, 100, 204.0, 0.5};
  records[1] = {"sgd", 1, 0.1, 0, 3, 3.5, 1e-6};
  std::ostringstream out;
  write_run_records_csv(out, records);
  CHECK(out.str() ==
        "algo,b,gamma,seed,iters,grad_evals,rel_subopt\n"
        "saga,2,0.25,7,100,204,0.5\n"
        "sgd,1,0.1,0,3,3.5,1e-06\n");
}
