// Python bindings for the proxsg core: problem construction, reference
// solutions, gradient estimators, the proximal stochastic runner, the
// batch-size theory helpers and the certification suite.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "proxsg/data_io.hpp"
#include "proxsg/estimators.hpp"
#include "proxsg/problem.hpp"
#include "proxsg/runner.hpp"
#include "proxsg/theory.hpp"
#include "proxsg/verify.hpp"

namespace py = pybind11;
using namespace proxsg;

namespace {

FiniteSumObjective objective_from_data(Mat A, Vec y, LossKind loss) {
  return FiniteSumObjective(
      std::make_shared<DataFamily>(std::move(A), std::move(y), loss));
}

FiniteSumObjective objective_from_centers(Mat centers) {
  return FiniteSumObjective(
      std::make_shared<QuadraticFamily>(std::move(centers)));
}

FiniteSumObjective load_libsvm_objective(const std::string& path,
                                         LossKind loss, int min_dim) {
  return make_objective(parse_libsvm_file(path), loss, min_dim);
}

Regularizer make_regularizer(RegKind kind, double lambda) {
  switch (kind) {
    case RegKind::Zero:
      return Regularizer::zero();
    case RegKind::L1:
      return Regularizer::l1(lambda);
    case RegKind::SquaredL2:
      return Regularizer::squared_l2(lambda);
  }
  throw std::invalid_argument("unknown regularizer kind");
}

}  // namespace

PYBIND11_MODULE(proxsg, m) {
  m.doc() = "stochastic proximal gradient methods for composite finite-sum "
            "problems";

  py::enum_<LossKind>(m, "LossKind")
      .value("least_squares", LossKind::LeastSquares)
      .value("logistic", LossKind::Logistic);

  py::enum_<RegKind>(m, "RegKind")
      .value("zero", RegKind::Zero)
      .value("l1", RegKind::L1)
      .value("squared_l2", RegKind::SquaredL2);

  py::class_<FiniteSumObjective>(m, "Objective")
      .def_property_readonly("n", &FiniteSumObjective::count)
      .def_property_readonly("dim", &FiniteSumObjective::dim)
      .def("value", &FiniteSumObjective::value, py::arg("x"))
      .def("gradient", &FiniteSumObjective::gradient, py::arg("x"))
      .def("component_value", &FiniteSumObjective::component_value,
           py::arg("i"), py::arg("x"))
      .def("component_gradient", &FiniteSumObjective::component_gradient,
           py::arg("i"), py::arg("x"))
      .def_property_readonly("component_smoothness",
                             &FiniteSumObjective::component_smoothness)
      .def_property_readonly("L", &FiniteSumObjective::smoothness)
      .def_property_readonly("L_max",
                             &FiniteSumObjective::max_component_smoothness);

  m.def("objective_from_data", &objective_from_data, py::arg("A"),
        py::arg("y"), py::arg("loss"),
        "Finite sum over the rows of a data matrix (least squares or "
        "logistic).");
  m.def("objective_from_centers", &objective_from_centers, py::arg("centers"),
        "Finite sum of quadratics f_i(x) = 0.5 |x - c_i|^2, one row per "
        "center.");
  m.def("load_libsvm", &load_libsvm_objective, py::arg("path"),
        py::arg("loss"), py::arg("min_dim") = 0,
        "Parse a sparse 'label idx:value ...' file into an objective.");

  m.def(
      "gen_synthetic",
      [](LossKind loss, int n, int d, double condition, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.loss = loss;
        spec.n = n;
        spec.d = d;
        spec.condition = condition;
        spec.seed = seed;
        return gen_synthetic(spec);
      },
      py::arg("loss"), py::arg("n"), py::arg("d"), py::arg("condition"),
      py::arg("seed"),
      "Random design with a targeted L_max / L ratio and planted labels.");

  py::class_<Regularizer>(m, "Regularizer")
      .def_property_readonly("kind", &Regularizer::kind)
      .def_property_readonly("lam", &Regularizer::lambda)
      .def("value", &Regularizer::value, py::arg("x"))
      .def("prox", &Regularizer::prox, py::arg("gamma"), py::arg("y"));
  m.def("regularizer", &make_regularizer, py::arg("kind"),
        py::arg("lam") = 0.0);

  py::class_<CompositeProblem>(m, "Problem")
      .def(py::init([](FiniteSumObjective obj, Regularizer reg) {
             return CompositeProblem{std::move(obj), std::move(reg)};
           }),
           py::arg("objective"), py::arg("reg"))
      .def_readonly("objective", &CompositeProblem::objective)
      .def_readonly("reg", &CompositeProblem::reg)
      .def("value", &CompositeProblem::full_value, py::arg("x"));

  py::class_<ReferenceSolution>(m, "ReferenceSolution")
      .def_readonly("x_star", &ReferenceSolution::x_star)
      .def_readonly("F_star", &ReferenceSolution::F_star)
      .def_readonly("residual", &ReferenceSolution::residual)
      .def_readonly("iters", &ReferenceSolution::iters)
      .def_readonly("converged", &ReferenceSolution::converged);

  m.def("solve_reference", &solve_reference, py::arg("problem"),
        py::arg("tol") = 1e-10, py::arg("max_iters") = 10000000,
        "Deterministic proximal gradient run to high accuracy.");

  py::class_<EstimatorConstants>(m, "EstimatorConstants")
      .def_readonly("A", &EstimatorConstants::A)
      .def_readonly("B", &EstimatorConstants::B)
      .def_readonly("rho", &EstimatorConstants::rho)
      .def_readonly("C", &EstimatorConstants::C)
      .def_readonly("D1", &EstimatorConstants::D1)
      .def_readonly("D2", &EstimatorConstants::D2)
      .def_readonly("G", &EstimatorConstants::G)
      .def("__repr__", [](const EstimatorConstants& c) {
        std::ostringstream out;
        out << "EstimatorConstants(A=" << c.A << ", B=" << c.B
            << ", rho=" << c.rho << ", C=" << c.C << ", D1=" << c.D1
            << ", D2=" << c.D2;
        if (c.G) out << ", G=" << *c.G;
        out << ")";
        return out.str();
      });

  py::class_<Quantizer>(m, "Quantizer")
      .def_static("identity", &Quantizer::identity, py::arg("dim"))
      .def_static("random_sparsification", &Quantizer::random_sparsification,
                  py::arg("dim"), py::arg("r"))
      .def_property_readonly("omega", &Quantizer::omega);

  py::class_<Estimator>(m, "Estimator")
      .def_property_readonly("name", &Estimator::name)
      .def("constants", &Estimator::constants, py::arg("ref"))
      .def("sigma_sq",
           [](const Estimator& est, const ReferenceSolution& ref) {
             return est.sigma_sq(ref, nullptr);
           },
           py::arg("ref"));

  m.def(
      "sgd",
      [](const FiniteSumObjective& obj, int b) {
        return make_sgd(obj, SamplingScheme::b_nice(obj.count(), b));
      },
      py::arg("objective"), py::arg("b") = 1);
  m.def(
      "saga",
      [](const FiniteSumObjective& obj, int b) { return make_saga(obj, b); },
      py::arg("objective"), py::arg("b") = 1);
  m.def(
      "lsvrg",
      [](const FiniteSumObjective& obj, int b, double p) {
        return make_lsvrg(obj, b, p > 0.0 ? p : 1.0 / double(obj.count()));
      },
      py::arg("objective"), py::arg("b") = 1, py::arg("p") = 0.0);
  m.def(
      "sega",
      [](const FiniteSumObjective& obj, int block) {
        return make_sega(obj, block);
      },
      py::arg("objective"), py::arg("block") = 1);
  m.def(
      "diana",
      [](const FiniteSumObjective& obj, int nodes, const Quantizer& q,
         double alpha) {
        return make_diana(obj, nodes, q,
                          alpha > 0.0 ? alpha : 1.0 / (1.0 + q.omega()));
      },
      py::arg("objective"), py::arg("nodes"), py::arg("quantizer"),
      py::arg("alpha") = 0.0);

  py::class_<StepSizePolicy>(m, "StepSizePolicy")
      .def_static("constant", &StepSizePolicy::constant, py::arg("gamma"))
      .def_static("inv_sqrt", &StepSizePolicy::inv_sqrt, py::arg("gamma0"))
      .def("at", &StepSizePolicy::at, py::arg("k"));

  py::class_<StoppingRule>(m, "StoppingRule")
      .def(py::init<>())
      .def_readwrite("max_iters", &StoppingRule::max_iters)
      .def_readwrite("eps_rel", &StoppingRule::eps_rel)
      .def_readwrite("cadence", &StoppingRule::cadence)
      .def_readwrite("check_every", &StoppingRule::check_every);

  py::class_<TrajectoryPoint>(m, "TrajectoryPoint")
      .def_readonly("k", &TrajectoryPoint::k)
      .def_readonly("subopt", &TrajectoryPoint::subopt)
      .def_readonly("avg_subopt", &TrajectoryPoint::avg_subopt)
      .def_readonly("sigma_sq", &TrajectoryPoint::sigma_sq)
      .def_readonly("grad_evals", &TrajectoryPoint::grad_evals)
      .def_readonly("gamma", &TrajectoryPoint::gamma);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("points", &Trajectory::points)
      .def_readonly("iters", &Trajectory::iters)
      .def_readonly("grad_evals", &Trajectory::grad_evals)
      .def_readonly("final_subopt", &Trajectory::final_subopt)
      .def_readonly("final_rel_subopt", &Trajectory::final_rel_subopt)
      .def_readonly("reached_target", &Trajectory::reached_target)
      .def_readonly("diverged", &Trajectory::diverged)
      .def_readonly("uniform_weight_fallback",
                    &Trajectory::uniform_weight_fallback)
      .def_readonly("x_final", &Trajectory::x_final)
      .def_readonly("x_avg", &Trajectory::x_avg);

  m.def(
      "run",
      [](const CompositeProblem& problem, Estimator& est,
         const StepSizePolicy& policy, const StoppingRule& stop,
         const ReferenceSolution& ref, std::uint64_t seed,
         bool allow_unsafe_step, bool log_sigma, std::optional<Vec> x0) {
        RunOptions opts;
        opts.allow_unsafe_step = allow_unsafe_step;
        opts.log_sigma = log_sigma;
        if (x0) opts.x0 = std::move(*x0);
        return run(problem, est, policy, stop, ref, seed, opts);
      },
      py::arg("problem"), py::arg("estimator"), py::arg("policy"),
      py::arg("stop"), py::arg("ref"), py::arg("seed") = 0,
      py::arg("allow_unsafe_step") = false, py::arg("log_sigma") = true,
      py::arg("x0") = std::nullopt,
      "Proximal stochastic iteration with trajectory logging.");

  // theory: safe step sizes, convergence bounds, batch-size complexities
  m.def("default_constant_step", &default_constant_step, py::arg("constants"),
        py::arg("L"));
  m.def("vr_constant_step", &vr_constant_step, py::arg("constants"));
  m.def("neighborhood_radius", &neighborhood_radius, py::arg("constants"),
        py::arg("gamma"));

  py::class_<BoundInputs>(m, "BoundInputs")
      .def(py::init<>())
      .def_readwrite("r0_sq", &BoundInputs::r0_sq)
      .def_readwrite("delta0", &BoundInputs::delta0)
      .def_readwrite("sigma0_sq", &BoundInputs::sigma0_sq)
      .def_readwrite("c", &BoundInputs::c)
      .def_readwrite("L", &BoundInputs::L)
      .def_readwrite("zero_regularizer", &BoundInputs::zero_regularizer);

  m.def("unified_bound", &unified_bound, py::arg("inputs"), py::arg("policy"),
        py::arg("t"));
  m.def("fixed_step_bound", &fixed_step_bound, py::arg("inputs"),
        py::arg("gamma"), py::arg("t"));
  m.def("decaying_step_bound", &decaying_step_bound, py::arg("inputs"),
        py::arg("gamma0"), py::arg("t"));
  m.def("vr_bound", &vr_bound, py::arg("inputs"), py::arg("gamma"),
        py::arg("k"));
  m.def("k_saga", &k_saga, py::arg("b"), py::arg("n"), py::arg("L"),
        py::arg("L_max"), py::arg("r0_sq"), py::arg("eps"));
  m.def("k_svrg", &k_svrg, py::arg("b"), py::arg("n"), py::arg("L"),
        py::arg("L_max"), py::arg("r0_sq"), py::arg("eps"));
  m.def("k_sega", &k_sega, py::arg("b"), py::arg("d"), py::arg("L"),
        py::arg("r0_sq"), py::arg("eps"));
  m.def("optimal_b_saga", &optimal_b_saga, py::arg("n"), py::arg("L"),
        py::arg("L_max"));
  m.def("optimal_b_svrg", &optimal_b_svrg, py::arg("n"), py::arg("L"),
        py::arg("L_max"));
  m.def("optimal_b_sega", &optimal_b_sega, py::arg("d"));

  // certification
  py::class_<CheckReport>(m, "CheckReport")
      .def_readonly("check_id", &CheckReport::check_id)
      .def_readonly("instance", &CheckReport::instance)
      .def_readonly("max_violation", &CheckReport::max_violation)
      .def_readonly("tolerance", &CheckReport::tolerance)
      .def_readonly("passed", &CheckReport::passed)
      .def_readonly("samples", &CheckReport::samples)
      .def_readonly("notes", &CheckReport::notes)
      .def("__repr__", [](const CheckReport& r) {
        return "CheckReport(" + r.check_id + "/" + r.instance + ", " +
               (r.passed ? "passed" : "FAILED") + ")";
      });

  m.def("default_suite", &default_suite, py::arg("seed") = 0,
        "Built-in certification checks; every report must pass.");
  m.def("render_summary", &render_summary, py::arg("reports"));
  m.def("all_passed", &all_passed, py::arg("reports"));
}
