#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fdqn/crn.hpp"
#include "fdqn/experiment.hpp"
#include "fdqn/lbfgs.hpp"
#include "fdqn/linesearch.hpp"
#include "fdqn/oracle.hpp"
#include "fdqn/problems.hpp"
#include "fdqn/sampling.hpp"
#include "fdqn/solver.hpp"
#include "fdqn/version.hpp"

namespace py = pybind11;
using namespace fdqn;

PYBIND11_MODULE(_fdqn, m) {
  m.doc() = "Finite-difference stochastic quasi-Newton optimization with adaptive sampling";
  m.attr("__version__") = kVersion;

  py::enum_<NoiseModel>(m, "NoiseModel")
      .value("abs", NoiseModel::abs)
      .value("rel", NoiseModel::rel);
  py::enum_<TestKind>(m, "TestKind")
      .value("norm", TestKind::norm)
      .value("ipqn", TestKind::ipqn)
      .value("fixed", TestKind::fixed);
  py::enum_<GrowthRule>(m, "GrowthRule")
      .value("exact_required", GrowthRule::exact_required)
      .value("geometric", GrowthRule::geometric);
  py::enum_<Method>(m, "Method")
      .value("fd_norm", Method::fd_norm)
      .value("fd_ipqn", Method::fd_ipqn)
      .value("fd_sg", Method::fd_sg);
  py::enum_<StopReason>(m, "StopReason")
      .value("budget", StopReason::budget)
      .value("line_search_failure", StopReason::line_search_failure)
      .value("gradient_degenerate", StopReason::gradient_degenerate)
      .value("max_iters", StopReason::max_iters)
      .value("diverged", StopReason::diverged);
  py::enum_<LsStatus>(m, "LsStatus")
      .value("accepted", LsStatus::accepted)
      .value("failed", LsStatus::failed)
      .value("none", LsStatus::none);
  py::enum_<LsFailurePolicy>(m, "LsFailurePolicy")
      .value("stop", LsFailurePolicy::stop)
      .value("resample", LsFailurePolicy::resample);

  py::class_<CrnSample>(m, "CrnSample")
      .def(py::init<std::uint64_t>(), py::arg("id") = 0)
      .def_readwrite("id", &CrnSample::id);

  py::class_<Batch>(m, "Batch")
      .def_readwrite("samples", &Batch::samples)
      .def_readwrite("variance_subset_size", &Batch::variance_subset_size)
      .def("__len__", &Batch::size);
  m.def("make_batch", &make_batch, py::arg("first_id"), py::arg("n"),
        py::arg("variance_fraction") = 1.0);

  py::class_<GradientEstimate>(m, "GradientEstimate")
      .def_readonly("batch_gradient", &GradientEstimate::batch_gradient)
      .def_readonly("per_sample_gradients", &GradientEstimate::per_sample_gradients)
      .def_readonly("sample_variance", &GradientEstimate::sample_variance)
      .def_readonly("evals_used", &GradientEstimate::evals_used)
      .def_readonly("base_values", &GradientEstimate::base_values)
      .def_readonly("base_mean", &GradientEstimate::base_mean);

  py::class_<Problem>(m, "Problem")
      .def_readonly("d", &Problem::d)
      .def_readonly("p", &Problem::p)
      .def_readonly("noise_model", &Problem::noise_model)
      .def_readonly("sigma", &Problem::sigma)
      .def_readonly("x_standard", &Problem::x_standard)
      .def_readonly("name", &Problem::name)
      .def_property_readonly(
          "f_star", [](const Problem& p) { return p.f_star ? py::cast(*p.f_star) : py::none(); });

  m.def("chebyquad_residuals", &chebyquad_residuals, py::arg("x"), py::arg("p"));
  m.def("chebyquad_jacobian", &chebyquad_jacobian, py::arg("x"), py::arg("p"));
  m.def("standard_start", &standard_start, py::arg("d"));
  m.def("make_chebyquad", &make_chebyquad, py::arg("d"), py::arg("p"), py::arg("noise_model"),
        py::arg("sigma"));
  m.def("make_problem", &make_problem, py::arg("name"), py::arg("d"), py::arg("p"),
        py::arg("noise_model"), py::arg("sigma"));
  m.def("true_objective", &true_objective, py::arg("problem"), py::arg("x"));
  m.def("realize_noise", &realize_noise, py::arg("sample"), py::arg("p"), py::arg("sigma"),
        py::arg("master_seed"));

  py::class_<ReferenceResult>(m, "ReferenceResult")
      .def_readonly("x", &ReferenceResult::x)
      .def_readonly("f_star", &ReferenceResult::f_star)
      .def_readonly("grad_inf_norm", &ReferenceResult::grad_inf_norm)
      .def_readonly("iterations", &ReferenceResult::iterations)
      .def_readonly("converged", &ReferenceResult::converged);
  m.def(
      "solve_reference", [](const Problem& p) { return solve_reference(p); }, py::arg("problem"));

  py::class_<EvalCounter>(m, "EvalCounter")
      .def_property_readonly("total", &EvalCounter::total);

  py::register_exception<EvaluationError>(m, "EvaluationError");

  py::class_<Oracle>(m, "Oracle")
      .def(py::init<const Problem&, std::uint64_t>(), py::arg("problem"), py::arg("master_seed"),
           py::keep_alive<1, 2>())
      .def("eval_f", &Oracle::eval_f, py::arg("x"), py::arg("sample"))
      .def("fd_gradient_sample", &Oracle::fd_gradient_sample, py::arg("x"), py::arg("nu"),
           py::arg("sample"))
      .def("fd_gradient_batch",
           py::overload_cast<const Eigen::VectorXd&, double, const Batch&>(
               &Oracle::fd_gradient_batch),
           py::arg("x"), py::arg("nu"), py::arg("batch"))
      .def("eval_batch_mean", &Oracle::eval_batch_mean, py::arg("x"), py::arg("batch"))
      .def("noise_for", &Oracle::noise_for, py::arg("sample"))
      .def_property_readonly("evals", [](const Oracle& o) { return o.counter().total(); });

  py::class_<SampleSizePolicy>(m, "SampleSizePolicy")
      .def(py::init<>())
      .def_readwrite("theta", &SampleSizePolicy::theta)
      .def_readwrite("test_kind", &SampleSizePolicy::test_kind)
      .def_readwrite("s0", &SampleSizePolicy::s0)
      .def_readwrite("s_max", &SampleSizePolicy::s_max)
      .def_readwrite("growth_rule", &SampleSizePolicy::growth_rule)
      .def_readwrite("variance_subset_fraction", &SampleSizePolicy::variance_subset_fraction);

  py::class_<TestOutcome>(m, "TestOutcome")
      .def_readonly("passed", &TestOutcome::passed)
      .def_readonly("lhs", &TestOutcome::lhs)
      .def_readonly("rhs", &TestOutcome::rhs)
      .def_readonly("required_size", &TestOutcome::required_size);
  m.def("norm_test", &norm_test, py::arg("estimate"), py::arg("batch_size"), py::arg("policy"));
  m.def("ipqn_test", &ipqn_test, py::arg("estimate"), py::arg("hg"), py::arg("hhg"),
        py::arg("batch_size"), py::arg("policy"));

  py::class_<LbfgsMemory>(m, "LbfgsMemory")
      .def(py::init<std::size_t, double>(), py::arg("m"), py::arg("gamma_init") = 1.0)
      .def("apply_h", &LbfgsMemory::apply_h, py::arg("v"))
      .def("apply_h_squared", &LbfgsMemory::apply_h_squared, py::arg("v"))
      .def("try_update", &LbfgsMemory::try_update, py::arg("s"), py::arg("y"), py::arg("beta"))
      .def("__len__", &LbfgsMemory::size)
      .def_property_readonly("gamma", &LbfgsMemory::gamma);

  py::class_<LineSearchConfig>(m, "LineSearchConfig")
      .def(py::init<>())
      .def_readwrite("c1", &LineSearchConfig::c1)
      .def_readwrite("tau", &LineSearchConfig::tau)
      .def_readwrite("max_backtracks", &LineSearchConfig::max_backtracks);

  py::class_<InitialStep>(m, "InitialStep")
      .def_readonly("alpha", &InitialStep::alpha)
      .def_readonly("degenerate", &InitialStep::degenerate);
  m.def("initial_steplength", &initial_steplength, py::arg("estimate"), py::arg("batch_size"));
  m.def("fd_parameter", &fd_parameter, py::arg("eps_m"), py::arg("lipschitz"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("method", &SolverConfig::method)
      .def_readwrite("nu", &SolverConfig::nu)
      .def_readwrite("policy", &SolverConfig::policy)
      .def_readwrite("ls", &SolverConfig::ls)
      .def_readwrite("lbfgs_m", &SolverConfig::lbfgs_m)
      .def_readwrite("beta", &SolverConfig::beta)
      .def_readwrite("gamma_init", &SolverConfig::gamma_init)
      .def_readwrite("alpha_max", &SolverConfig::alpha_max)
      .def_readwrite("ls_failure_policy", &SolverConfig::ls_failure_policy)
      .def_readwrite("max_evals", &SolverConfig::max_evals)
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("master_seed", &SolverConfig::master_seed)
      .def_readwrite("sg_alpha", &SolverConfig::sg_alpha);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("k", &IterationRecord::k)
      .def_readonly("batch_size", &IterationRecord::batch_size)
      .def_readonly("alpha", &IterationRecord::alpha)
      .def_readonly("f_sampled", &IterationRecord::f_sampled)
      .def_readonly("f_true", &IterationRecord::f_true)
      .def_readonly("err", &IterationRecord::err)
      .def_readonly("grad_norm_est", &IterationRecord::grad_norm_est)
      .def_readonly("test_passed", &IterationRecord::test_passed)
      .def_readonly("ls_status", &IterationRecord::ls_status)
      .def_readonly("cum_evals", &IterationRecord::cum_evals);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("records", &RunResult::records)
      .def_readonly("stop_reason", &RunResult::stop_reason)
      .def_readonly("final_x", &RunResult::final_x)
      .def_readonly("total_evals", &RunResult::total_evals);

  m.def("run_adaptive", &run_adaptive, py::arg("problem"), py::arg("x0"), py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_fd_sg", &run_fd_sg, py::arg("problem"), py::arg("x0"), py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run", &run, py::arg("problem"), py::arg("x0"), py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<TuneTrial>(m, "TuneTrial")
      .def_readonly("j", &TuneTrial::j)
      .def_readonly("alpha", &TuneTrial::alpha)
      .def_readonly("final_f_true", &TuneTrial::final_f_true)
      .def_readonly("final_err", &TuneTrial::final_err)
      .def_readonly("stop_reason", &TuneTrial::stop_reason)
      .def_readonly("evals", &TuneTrial::evals);
  py::class_<TuneResult>(m, "TuneResult")
      .def_readonly("best_alpha", &TuneResult::best_alpha)
      .def_readonly("best_j", &TuneResult::best_j)
      .def_readonly("trials", &TuneResult::trials);
  m.def("tune_fd_sg", &tune_fd_sg, py::arg("problem"), py::arg("x0"), py::arg("base_cfg"),
        py::arg("budget_per_trial"), py::call_guard<py::gil_scoped_release>());
}
