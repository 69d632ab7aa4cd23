#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nlgd/config.hpp"
#include "nlgd/experiments.hpp"
#include "nlgd/network.hpp"
#include "nlgd/objectives.hpp"
#include "nlgd/optimizer.hpp"
#include "nlgd/stationarity.hpp"

namespace py = pybind11;
using namespace nlgd;

namespace {

using PyObjective = std::shared_ptr<LocalObjective>;

PyObjective to_py(ObjectivePtr p) { return std::const_pointer_cast<LocalObjective>(std::move(p)); }

py::dict trace_columns(const Trace& t) {
  const auto rows = static_cast<Eigen::Index>(t.records.size());
  Eigen::VectorXd f(rows), feas(rows), grad(rows), curv(rows), dist(rows);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> iter(rows);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = t.records[i];
    iter(i) = r.iter;
    f(i) = r.f_value;
    feas(i) = r.feas_residual;
    grad(i) = r.proj_grad_norm;
    curv(i) = r.tangent_curvature.value_or(nan);
    dist(i) = r.dist_to_ref.value_or(nan);
  }
  py::dict d;
  d["iter"] = iter;
  d["f_value"] = f;
  d["feas_residual"] = feas;
  d["proj_grad_norm"] = grad;
  d["tangent_curvature"] = curv;
  d["dist_to_ref"] = dist;
  return d;
}

}  // namespace

PYBIND11_MODULE(_nlgd, m) {
  m.doc() = "Laplacian-weighted gradient descent for distributed resource allocation";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DisconnectedGraph>(m, "DisconnectedGraph", PyExc_ValueError);
  py::register_exception<InfeasibleStart>(m, "InfeasibleStart", PyExc_ValueError);
  py::register_exception<Divergence>(m, "Divergence", PyExc_RuntimeError);

  // ---- network
  py::class_<Graph>(m, "Graph")
      .def(py::init<int>(), py::arg("node_count"))
      .def(py::init<int, const std::vector<Graph::Edge>&>(), py::arg("node_count"), py::arg("edges"))
      .def("add_edge", &Graph::add_edge)
      .def("has_edge", &Graph::has_edge)
      .def_property_readonly("node_count", &Graph::node_count)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def_property_readonly("edges", &Graph::edges)
      .def("component_count", &Graph::component_count)
      .def("is_connected", &Graph::is_connected)
      .def("adjacency", &Graph::adjacency);

  m.def("path_graph", &path_graph, py::arg("m"));
  m.def("ring_graph", &ring_graph, py::arg("m"));
  m.def("complete_graph", &complete_graph, py::arg("m"));
  m.def("watts_strogatz", &watts_strogatz, py::arg("m"), py::arg("k"), py::arg("p"), py::arg("seed"));
  m.def("read_edge_list", py::overload_cast<const std::filesystem::path&>(&read_edge_list), py::arg("path"));
  m.def("write_edge_list", py::overload_cast<const std::filesystem::path&, const Graph&>(&write_edge_list),
        py::arg("path"), py::arg("graph"));
  m.def("matrix_sqrt_psd", &matrix_sqrt_psd, py::arg("a"), py::arg("tol") = 1e-12);
  m.def("apply_lifted", &apply_lifted, py::arg("matrix"), py::arg("v"), py::arg("n"));

  py::class_<NetworkOperator>(m, "NetworkOperator")
      .def_static("from_graph", &NetworkOperator::from_graph, py::arg("graph"), py::arg("agent_dim") = 1)
      .def_static("from_weights", &NetworkOperator::from_weights, py::arg("weights"), py::arg("agent_dim") = 1)
      .def_property_readonly("laplacian", &NetworkOperator::laplacian)
      .def_property_readonly("sqrt_laplacian", &NetworkOperator::sqrt_laplacian)
      .def_property_readonly("eigenvalues", &NetworkOperator::eigenvalues)
      .def_property_readonly("lambda_min_plus", &NetworkOperator::lambda_min_plus)
      .def_property_readonly("lambda_max", &NetworkOperator::lambda_max)
      .def_property_readonly("sqrt_norm_sq", &NetworkOperator::sqrt_norm_sq)
      .def_property_readonly("agent_count", &NetworkOperator::agent_count)
      .def_property_readonly("agent_dim", &NetworkOperator::agent_dim)
      .def("with_agent_dim", &NetworkOperator::with_agent_dim)
      .def("apply", &NetworkOperator::apply)
      .def("apply_sqrt", &NetworkOperator::apply_sqrt)
      .def("sqrt_residual", &NetworkOperator::sqrt_residual);

  // ---- objectives
  py::class_<LocalObjective, PyObjective>(m, "LocalObjective")
      .def_property_readonly("family", &LocalObjective::family)
      .def_property_readonly("dim", &LocalObjective::dim)
      .def("value", &LocalObjective::value)
      .def("gradient", &LocalObjective::gradient)
      .def("hessian", &LocalObjective::hessian)
      .def("lip_grad", &LocalObjective::lip_grad)
      .def("lip_hess", &LocalObjective::lip_hess)
      .def("minimum_value", &LocalObjective::minimum_value);

  m.def(
      "quadratic_objective", [](double a, const Vector& c) { return to_py(quadratic_objective(a, c)); },
      py::arg("curvature"), py::arg("linear"));
  m.def(
      "quadratic_objective", [](const Matrix& a, const Vector& c) { return to_py(quadratic_objective(a, c)); },
      py::arg("curvature"), py::arg("linear"));
  m.def(
      "smart_grid_objective", [](double a, double b, int dim) { return to_py(smart_grid_objective(a, b, dim)); },
      py::arg("a"), py::arg("b"), py::arg("dim") = 1);
  m.def(
      "portfolio_objective",
      [](const Vector& mu, const Matrix& sigma, double risk, double reg) {
        return to_py(portfolio_objective(mu, sigma, risk, reg));
      },
      py::arg("mu"), py::arg("sigma"), py::arg("risk_aversion"), py::arg("regularization"));
  m.def(
      "function_objective",
      [](int dim, std::function<double(const Vector&)> value, std::function<Vector(const Vector&)> gradient,
         std::function<Matrix(const Vector&)> hessian, std::optional<double> lip_grad,
         std::optional<double> lip_hess) -> PyObjective {
        return std::make_shared<FunctionObjective>(
            dim, FunctionObjective::Callbacks{std::move(value), std::move(gradient), std::move(hessian)}, lip_grad,
            lip_hess);
      },
      py::arg("dim"), py::arg("value"), py::arg("gradient"), py::arg("hessian"), py::arg("lip_grad") = py::none(),
      py::arg("lip_hess") = py::none());
  m.def(
      "fd_check",
      [](const LocalObjective& f, const Vector& x, double h) {
        const auto r = fd_check(f, x, h);
        return py::make_tuple(r.grad_rel_err, r.hess_rel_err);
      },
      py::arg("objective"), py::arg("point"), py::arg("h") = 1e-5);

  py::class_<ProblemInstance>(m, "ProblemInstance")
      .def(py::init([](const std::vector<PyObjective>& objs, const Vector& demand) {
             return ProblemInstance(std::vector<ObjectivePtr>(objs.begin(), objs.end()), demand);
           }),
           py::arg("objectives"), py::arg("demand"))
      .def_property_readonly("agent_count", &ProblemInstance::agent_count)
      .def_property_readonly("agent_dim", &ProblemInstance::agent_dim)
      .def_property_readonly("demand", &ProblemInstance::demand)
      .def("value", &ProblemInstance::value)
      .def("gradient", &ProblemInstance::gradient)
      .def("hessian", [](const ProblemInstance& p, const Vector& theta) { return p.evaluate(theta).hessian(); })
      .def("global_min_sum", &ProblemInstance::global_min_sum)
      .def("lipschitz_constants", [](const ProblemInstance& p) {
        const auto l = lipschitz_constants(p);
        return py::make_tuple(l.grad, l.hess);
      });

  // ---- stationarity
  py::enum_<Classification>(m, "Classification")
      .value("INFEASIBLE", Classification::kInfeasible)
      .value("NOT_STATIONARY", Classification::kNotStationary)
      .value("FIRST_ORDER_ONLY", Classification::kFirstOrderOnly)
      .value("SECOND_ORDER", Classification::kSecondOrder);

  py::class_<StationarityReport>(m, "StationarityReport")
      .def_readonly("feasibility_residual", &StationarityReport::feasibility_residual)
      .def_readonly("projected_grad_norm", &StationarityReport::projected_grad_norm)
      .def_readonly("tangent_min_curvature", &StationarityReport::tangent_min_curvature)
      .def_readonly("classification", &StationarityReport::classification)
      .def_readonly("epsilon", &StationarityReport::epsilon)
      .def_readonly("gamma", &StationarityReport::gamma)
      .def("__str__", &format_report);

  m.def("classify", &classify, py::arg("theta"), py::arg("problem"), py::arg("net"), py::arg("epsilon"),
        py::arg("gamma"));
  m.def("feasibility_residual", &feasibility_residual, py::arg("theta"), py::arg("demand"), py::arg("n"));
  m.def("projected_grad_norm", &projected_grad_norm, py::arg("theta"), py::arg("problem"), py::arg("net"));
  m.def("tangent_min_curvature", py::overload_cast<const Vector&, const ProblemInstance&>(&tangent_min_curvature),
        py::arg("theta"), py::arg("problem"));
  m.def("tangent_basis", &tangent_basis, py::arg("m"), py::arg("n"));
  m.def("aux_gradient", &aux_gradient, py::arg("x"), py::arg("theta0"), py::arg("problem"), py::arg("net"));
  m.def("aux_hessian", &aux_hessian, py::arg("x"), py::arg("theta0"), py::arg("problem"), py::arg("net"));
  m.def(
      "transfer_certificate",
      [](double eps, double gamma, const NetworkOperator& net) {
        const auto c = transfer_certificate(eps, gamma, net);
        return py::make_tuple(c.epsilon, c.gamma);
      },
      py::arg("aux_eps"), py::arg("aux_gamma"), py::arg("net"));

  // ---- optimizer
  py::enum_<Algorithm>(m, "Algorithm")
      .value("LGD", Algorithm::kLgd)
      .value("NLGD", Algorithm::kNlgd)
      .value("AUX_GD", Algorithm::kAuxGd)
      .value("AUX_NGD", Algorithm::kAuxNgd);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("algorithm", &RunConfig::algorithm)
      .def_readwrite("step_size", &RunConfig::step_size)
      .def_readwrite("noise_variance", &RunConfig::noise_variance)
      .def_readwrite("max_iters", &RunConfig::max_iters)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("record_every", &RunConfig::record_every)
      .def_readwrite("track_auxiliary", &RunConfig::track_auxiliary)
      .def_readwrite("record_curvature", &RunConfig::record_curvature)
      .def_readwrite("monitor_descent", &RunConfig::monitor_descent)
      .def_readwrite("reference", &RunConfig::reference)
      .def_readwrite("escape_margin", &RunConfig::escape_margin);

  m.def(
      "run",
      [](const ProblemInstance& problem, const NetworkOperator& net, const Vector& theta0, const RunConfig& config) {
        Trace t;
        {
          py::gil_scoped_release release;
          t = run(problem, net, theta0, config);
        }
        py::dict out = trace_columns(t);
        out["theta"] = t.final_state.theta;
        out["iterations_run"] = t.iterations_run;
        out["escape_iteration"] = t.escape_iteration;
        out["descent_violations"] = t.descent_violations;
        out["max_coupling_error"] = t.max_coupling_error;
        return out;
      },
      py::arg("problem"), py::arg("net"), py::arg("theta0"), py::arg("config"));

  m.def("theoretical_step_bound", &theoretical_step_bound, py::arg("p"), py::arg("lip_grad_f"),
        py::arg("sqrt_norm_sq"));
  m.def("variance_for_tolerance", &variance_for_tolerance, py::arg("eps_g"), py::arg("m"), py::arg("n"));
  m.def("second_order_tolerance", &second_order_tolerance, py::arg("eps_g"), py::arg("sqrt_norm_sq"),
        py::arg("lip_hess_f"));
  m.def(
      "iteration_budget",
      [](double psi0, double f_star, double lip_grad_psi, double eps_g, double alpha) {
        return iteration_budget(psi0, f_star, lip_grad_psi, eps_g, alpha);
      },
      py::arg("psi_at_x0"), py::arg("sum_f_star"), py::arg("lip_grad_psi"), py::arg("eps_g"), py::arg("step_size"));

  // ---- experiments
  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readonly("seed", &Scenario::seed)
      .def_readonly("problem", &Scenario::problem)
      .def_readonly("graph", &Scenario::graph)
      .def_readonly("net", &Scenario::net)
      .def_readonly("reference", &Scenario::reference)
      .def_property_readonly("labels",
                             [](const Scenario& s) {
                               std::vector<std::string> out;
                               for (const auto& v : s.variants) out.push_back(v.label);
                               return out;
                             })
      .def("set_max_iters",
           [](Scenario& s, std::int64_t iters) {
             for (auto& v : s.variants) v.config.max_iters = iters;
           })
      .def("initial_point", &Scenario::initial_point, py::arg("run_seed"));

  m.def("build_scenario", &build_named_scenario, py::arg("name"), py::arg("seed") = 0);
  m.def("load_scenario", &load_scenario, py::arg("path"), py::arg("seed") = py::none());
  m.def(
      "run_comparison",
      [](const Scenario& scenario, const std::vector<std::uint64_t>& seeds, unsigned threads) {
        BatchResult batch;
        {
          py::gil_scoped_release release;
          batch = run_comparison(scenario, seeds, threads);
        }
        py::list runs;
        for (const auto& r : batch.runs) {
          py::dict d = trace_columns(r.trace);
          d["seed"] = r.seed;
          d["label"] = r.label;
          d["escape_iteration"] = r.trace.escape_iteration;
          d["final_report"] = r.final_report;
          d["curvature_tolerance"] = r.curvature_tolerance;
          d["diverged"] = r.diverged;
          runs.append(d);
        }
        return runs;
      },
      py::arg("scenario"), py::arg("seeds"), py::arg("threads") = 0);
}
