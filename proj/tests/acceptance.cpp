// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nlgd/experiments.hpp"
#include "nlgd/network.hpp"
#include "nlgd/objectives.hpp"
#include "nlgd/optimizer.hpp"
#include "nlgd/rng.hpp"
#include "nlgd/stationarity.hpp"

using namespace nlgd;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

struct Instance {
  ProblemInstance problem;
  NetworkOperator net;
  Vector theta0;
};

Instance two_agent_quadratic() {
  std::vector<ObjectivePtr> objs{quadratic_objective(1.0, Vector::Zero(1)), quadratic_objective(1.0, Vector::Zero(1))};
  Vector theta0(2);
  theta0 << 1.0, 0.0;
  return {ProblemInstance(objs, Vector::Ones(1)), NetworkOperator::from_graph(path_graph(2)), theta0};
}

Instance six_agent_smart_grid() {
  Rng rng(derive_seed(2024, Stream::kTest));
  auto agents = sample_smart_grid_agents(6, 1, rng);
  const Graph g = watts_strogatz(6, 2, 0.3, derive_seed(2024, Stream::kGraph));
  return {ProblemInstance(agents, Vector::Zero(1)), NetworkOperator::from_graph(g),
          tangent_perturbation(6, 1, 0.1, rng)};
}

// Max |theta_lgd - theta_aux| over `iters` steps; noisy variants share one noise stream seed.
double trajectory_gap(const Instance& in, double alpha, int iters, double variance) {
  IterateState direct = IterateState::start(in.theta0, false);
  IterateState aux = IterateState::start(in.theta0, true);
  Rng ra(77), rb(77);
  double gap = 0.0;
  for (int k = 0; k < iters; ++k) {
    if (variance > 0.0) {
      direct = nlgd_step(direct, in.problem, in.net, alpha, variance, ra);
      aux = aux_ngd_step(aux, in.problem, in.net, alpha, variance, rb);
    } else {
      direct = lgd_step(direct, in.problem, in.net, alpha);
      aux = aux_gd_step(aux, in.problem, in.net, alpha);
    }
    gap = std::max(gap, (direct.theta - aux.theta).lpNorm<Eigen::Infinity>());
  }
  return gap;
}

Outcome equivalence(int iters, double variance) {
  const double g1 = trajectory_gap(two_agent_quadratic(), 0.1, iters, variance);
  const double g2 = trajectory_gap(six_agent_smart_grid(), 0.01, iters, variance);
  const double worst = std::max(g1, g2);
  return {worst <= 1e-10, fmt("max deviation quadratic %.3g, smart grid %.3g", g1, g2)};
}

Outcome feasibility_invariance() {
  Scenario s = build_smart_grid_scenario(0);
  RunConfig c = s.variants.at(1).config;
  c.max_iters = 100000;
  c.record_every = 1000;
  c.record_curvature = false;
  c.seed = derive_seed(1, Stream::kNoise);
  const Trace t = run(s.problem, s.net, s.initial_point(1), c);
  double worst = 0.0;
  for (const auto& r : t.records) worst = std::max(worst, r.feas_residual);
  worst = std::max(worst, feasibility_residual(t.final_state.theta, s.problem.demand(), 1));
  return {worst <= 1e-8, fmt("max feasibility residual %.3g over %.0f iterations", worst, double(t.iterations_run))};
}

Outcome first_order_convergence() {
  const int m = 20;
  Rng rng(derive_seed(7, Stream::kParameters));
  const auto agents = sample_quadratic_agents(m, 1, rng);
  const double r = 1.0;
  const ProblemInstance problem(agents, Vector::Constant(1, r));
  const NetworkOperator net = NetworkOperator::from_graph(watts_strogatz(m, 4, 0.2, derive_seed(7, Stream::kGraph)));
  const double alpha = 1.0 / (net.sqrt_norm_sq() * lipschitz_constants(problem).grad);

  // Equal marginal costs a_i theta_i with sum theta = r.
  Vector a(m);
  for (int i = 0; i < m; ++i) a(i) = agents[i]->hessian(Vector::Zero(1))(0, 0);
  const double common = r / a.cwiseInverse().sum();
  const Vector optimum = common * a.cwiseInverse();

  RunConfig c;
  c.algorithm = Algorithm::kLgd;
  c.step_size = alpha;
  c.max_iters = 20000;
  c.record_every = 1000;
  const Trace t = run(problem, net, Vector::Constant(m, r / m), c);
  const double grad = projected_grad_norm(t.final_state.theta, problem, net);
  const double err = (t.final_state.theta - optimum).lpNorm<Eigen::Infinity>();
  return {grad < 1e-6 && err <= 1e-6, fmt("projected gradient %.3g, distance to closed form %.3g", grad, err)};
}

Outcome derivative_correctness() {
  Rng rng(derive_seed(5, Stream::kTest));
  double worst_g = 0.0, worst_h = 0.0;
  std::size_t points = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + static_cast<int>(rng.index(4));
    std::vector<ObjectivePtr> family;
    family.push_back(sample_quadratic_agents(2, n, rng)[0]);
    family.push_back(sample_smart_grid_agents(2, n, rng)[0]);
    family.push_back(sample_portfolio_agents(2, n, rng)[0]);
    for (const auto& f : family) {
      const auto res = fd_check(*f, rng.normal_vector(n, 2.0));
      worst_g = std::max(worst_g, res.grad_rel_err);
      worst_h = std::max(worst_h, res.hess_rel_err);
      ++points;
    }
  }
  return {worst_g <= 1e-6 && worst_h <= 1e-6,
          fmt("%.0f points, worst gradient %.3g, worst hessian %.3g", double(points), worst_g, worst_h)};
}

Outcome spectral_correctness() {
  double worst_sqrt = 0.0, worst_norm = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto net = NetworkOperator::from_graph(watts_strogatz(20, 4, 0.2, seed));
    const Matrix& l = net.laplacian();
    const Matrix& s = net.sqrt_laplacian();
    worst_sqrt = std::max(worst_sqrt, (s * s - l).norm() / l.norm());
    const double op_norm = Eigen::JacobiSVD<Matrix>(s).singularValues()(0);
    worst_norm = std::max(worst_norm, std::abs(net.lambda_max() - op_norm * op_norm) / net.lambda_max());
  }
  return {worst_sqrt <= 1e-10 && worst_norm <= 1e-10,
          fmt("relative sqrt residual %.3g, |lambda_max - ||sqrt L||^2| / lambda_max %.3g", worst_sqrt, worst_norm)};
}

Outcome certificate_transfer() {
  Rng rng(derive_seed(11, Stream::kTest));
  int instances = 0, failures = 0;
  for (int k = 0; k < 150; ++k) {
    const int m = 2 + static_cast<int>(rng.index(5));
    const int n = 1 + static_cast<int>(rng.index(3));
    std::vector<ObjectivePtr> agents;
    switch (k % 3) {
      case 0: agents = sample_quadratic_agents(m, n, rng); break;
      case 1: agents = sample_smart_grid_agents(m, n, rng); break;
      default: agents = sample_portfolio_agents(m, n, rng); break;
    }
    Graph g = path_graph(m);
    for (int i = 0; i < m; ++i) {
      for (int j = i + 2; j < m; ++j) {
        if (rng.uniform() < 0.4) g.add_edge(i, j);
      }
    }
    const auto net = NetworkOperator::from_graph(g, n);
    const Vector r = rng.normal_vector(n);
    const ProblemInstance problem(agents, r);
    Vector theta0(m * n);
    for (int i = 0; i < m; ++i) theta0.segment(i * n, n) = r / m;
    theta0 += tangent_perturbation(m, n, 0.5, rng);
    const Vector x = rng.normal_vector(m * n, 0.5);

    const auto aux = aux_second_order_check(x, theta0, problem, net, 1.0, 1.0);
    const double g_cert = aux.grad_norm;
    const double c_cert = std::max(0.0, -aux.min_eig);
    const Certificate cert = transfer_certificate(g_cert, c_cert, net);
    const Vector theta = theta0 + net.apply_sqrt(x);
    const auto report = classify(theta, problem, net, cert.epsilon + 1e-9, cert.gamma + 1e-9);
    ++instances;
    if (report.classification != Classification::kSecondOrder) ++failures;
  }
  return {instances >= 100 && failures == 0,
          fmt("%.0f instances, %.0f not certified after transfer", double(instances), double(failures))};
}

// Criteria 8 and 9 share one batch.
struct SaddleBatch {
  bool ready = false;
  BatchResult batch;
};
SaddleBatch& saddle_batch() {
  static SaddleBatch cache;
  if (!cache.ready) {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
    cache.batch = run_comparison(build_smart_grid_scenario(0), seeds);
    cache.ready = true;
  }
  return cache;
}

Outcome saddle_escape() {
  const auto& batch = saddle_batch().batch;
  int nlgd_escaped = 0, nlgd_not_later = 0, lgd_escaped = 0;
  for (std::uint64_t seed : batch.seeds) {
    const RunOutcome* lgd = batch.find(seed, "LGD");
    const RunOutcome* nlgd = batch.find(seed, "NLGD");
    if (!lgd || !nlgd) return {false, "missing runs"};
    const auto le = lgd->trace.escape_iteration;
    const auto ne = nlgd->trace.escape_iteration;
    if (le) ++lgd_escaped;
    if (ne) {
      ++nlgd_escaped;
      if (!le || *ne <= *le) ++nlgd_not_later;
    }
  }
  const double total = static_cast<double>(batch.seeds.size());
  const bool ok = nlgd_not_later >= 0.9 * total && nlgd_escaped >= 0.9 * total;
  return {ok, fmt("NLGD escaped %.0f/20, no later than LGD in %.0f/20, LGD escaped %.0f/20", nlgd_escaped,
                  nlgd_not_later, lgd_escaped)};
}

Outcome second_order_at_termination() {
  const auto& batch = saddle_batch().batch;
  int checked = 0, violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : batch.runs) {
    if (r.label != "NLGD" || !r.trace.escape_iteration) continue;
    ++checked;
    const double margin = r.final_report.tangent_min_curvature + r.curvature_tolerance;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0.0) ++violations;
  }
  return {checked > 0 && violations == 0,
          fmt("%.0f escaped NLGD runs, %.0f violations, smallest curvature + eps_H/lambda_min_plus %.3g",
              double(checked), double(violations), worst_margin)};
}

Outcome parameter_formulas() {
  const double sigma_sq = variance_for_tolerance(0.1, 20, 1);
  const std::int64_t k = iteration_budget(1.0, 0.0, 1.0, 0.1, 0.1);
  const bool ok = std::abs(sigma_sq - 4.1667e-5) < 5e-10 && std::abs(sigma_sq - 0.01 / 240.0) <= 1e-18 && k == 10000;
  return {ok, fmt("sigma^2 = %.6g, K = %.0f", sigma_sq, double(k))};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "LGD matches auxiliary gradient descent", 1.0, [] { return equivalence(1000, 0.0); }},
      {2, "NLGD matches auxiliary noisy gradient descent", 1.0, [] { return equivalence(100, 0.01); }},
      {3, "feasibility invariance", 30.0, feasibility_invariance},
      {4, "first-order convergence", 5.0, first_order_convergence},
      {5, "derivative correctness", 5.0, derivative_correctness},
      {6, "spectral correctness", 5.0, spectral_correctness},
      {7, "certificate transfer", 30.0, certificate_transfer},
      {8, "saddle escape", 300.0, saddle_escape},
      {9, "second-order certification at termination", 300.0, second_order_at_termination},
      {10, "parameter formulas", 1.0, parameter_formulas},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = out.passed && in_time;
    if (!pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.2fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs, c.time_limit_s, in_time ? "" : ", over time");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
