#include "nlgd/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "nlgd/stationarity.hpp"

namespace nlgd {

namespace {

constexpr double kDivergenceNorm = 1e12;
constexpr double kDescentSlack = 1e-9;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void require_compatible(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net) {
  if (net.agent_count() != problem.agent_count() || net.agent_dim() != problem.agent_dim()) {
    throw DimensionMismatch("network operator is " + std::to_string(net.agent_count()) + " agents x dim " +
                            std::to_string(net.agent_dim()) + ", problem is " +
                            std::to_string(problem.agent_count()) + " x " + std::to_string(problem.agent_dim()));
  }
  if (state.theta.size() != problem.stacked_size()) {
    throw DimensionMismatch("iterate has length " + std::to_string(state.theta.size()) + ", expected " +
                            std::to_string(problem.stacked_size()));
  }
}

bool diverged(const Vector& theta) { return !theta.allFinite() || theta.norm() > kDivergenceNorm; }

void require_finite(const IterateState& state) {
  if (diverged(state.theta)) {
    throw Divergence(state.iter, Trace{});
  }
}

IterateState aux_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                      double step_size, const Vector* noise) {
  require_compatible(state, problem, net);
  if (!state.aux_x || !state.anchor) throw InvalidArgument("auxiliary step needs x^k and theta0");
  require_finite(state);
  const int n = problem.agent_dim();
  // grad Psi(x) = sqrt(L_hat) grad F(theta0 + sqrt(L_hat) x); state.theta holds that point.
  Vector direction = apply_lifted(net.sqrt_laplacian(), problem.gradient(state.theta), n);
  if (noise) direction += *noise;
  IterateState next;
  next.aux_x = *state.aux_x - step_size * direction;
  next.anchor = state.anchor;
  next.theta = *state.anchor + apply_lifted(net.sqrt_laplacian(), *next.aux_x, n);
  next.iter = state.iter + 1;
  return next;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kLgd:
      return "LGD";
    case Algorithm::kNlgd:
      return "NLGD";
    case Algorithm::kAuxGd:
      return "AUX_GD";
    case Algorithm::kAuxNgd:
      return "AUX_NGD";
  }
  return "UNKNOWN";
}

Algorithm parse_algorithm(std::string_view name) {
  const std::string s = lower(name);
  if (s == "lgd") return Algorithm::kLgd;
  if (s == "nlgd") return Algorithm::kNlgd;
  if (s == "aux_gd") return Algorithm::kAuxGd;
  if (s == "aux_ngd") return Algorithm::kAuxNgd;
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "' (expected LGD, NLGD, AUX_GD or AUX_NGD)");
}

void RunConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("step_size must be positive");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw InvalidArgument("noise_variance must be non-negative");
  }
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (record_every < 1) throw InvalidArgument("record_every must be at least 1");
  if (escape_margin && !(*escape_margin >= 0.0)) throw InvalidArgument("escape_margin must be non-negative");
  if (early_exit && (!(early_exit->epsilon > 0.0) || !(early_exit->gamma > 0.0))) {
    throw InvalidArgument("early-exit epsilon and gamma must be positive");
  }
}

IterateState IterateState::start(const Vector& theta0, bool with_auxiliary) {
  IterateState s;
  s.theta = theta0;
  if (with_auxiliary) {
    s.aux_x = Vector::Zero(theta0.size());
    s.anchor = theta0;
  }
  return s;
}

Divergence::Divergence(std::int64_t iteration, Trace partial)
    : Error("iterate diverged at iteration " + std::to_string(iteration)),
      iteration_(iteration),
      partial_(std::move(partial)) {}

Vector sample_perturbation(int m, int n, double noise_variance, Rng& rng) {
  if (!(noise_variance >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
  const Eigen::Index size = static_cast<Eigen::Index>(m) * n;
  if (noise_variance == 0.0) return Vector::Zero(size);
  return rng.normal_vector(size, std::sqrt(noise_variance));
}

IterateState lgd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                      double step_size) {
  require_compatible(state, problem, net);
  require_finite(state);
  IterateState next;
  next.theta = state.theta - step_size * apply_lifted(net.laplacian(), problem.gradient(state.theta),
                                                      problem.agent_dim());
  next.iter = state.iter + 1;
  return next;
}

IterateState nlgd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                       double step_size, const Vector& noise) {
  require_compatible(state, problem, net);
  require_finite(state);
  const int n = problem.agent_dim();
  if (noise.size() != state.theta.size()) throw DimensionMismatch("perturbation length differs from iterate");
  IterateState next;
  next.theta = state.theta - step_size * (apply_lifted(net.laplacian(), problem.gradient(state.theta), n) +
                                          apply_lifted(net.sqrt_laplacian(), noise, n));
  next.iter = state.iter + 1;
  return next;
}

IterateState nlgd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                       double step_size, double noise_variance, Rng& rng) {
  if (noise_variance == 0.0) return lgd_step(state, problem, net, step_size);
  const Vector noise = sample_perturbation(problem.agent_count(), problem.agent_dim(), noise_variance, rng);
  return nlgd_step(state, problem, net, step_size, noise);
}

IterateState aux_gd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                         double step_size) {
  return aux_step(state, problem, net, step_size, nullptr);
}

IterateState aux_ngd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                          double step_size, double noise_variance, Rng& rng) {
  if (noise_variance == 0.0) return aux_step(state, problem, net, step_size, nullptr);
  const Vector noise = sample_perturbation(problem.agent_count(), problem.agent_dim(), noise_variance, rng);
  return aux_step(state, problem, net, step_size, &noise);
}

Trace run(const ProblemInstance& problem, const NetworkOperator& net, const Vector& theta0,
          const RunConfig& config) {
  config.validate();
  const int m = problem.agent_count();
  const int n = problem.agent_dim();
  IterateState state = IterateState::start(theta0, config.track_auxiliary || config.algorithm == Algorithm::kAuxGd ||
                                                       config.algorithm == Algorithm::kAuxNgd);
  require_compatible(state, problem, net);

  const double residual0 = feasibility_residual(theta0, problem.demand(), n);
  const double start_tol = 1e-10 * std::max(1.0, problem.demand().norm());
  if (!(residual0 <= start_tol)) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "infeasible initial point: ||sum_i theta_i - r|| = " << residual0
        << " exceeds the feasibility tolerance " << start_tol;
    throw InfeasibleStart(msg.str());
  }
  if (config.reference && config.reference->size() != theta0.size()) {
    throw DimensionMismatch("reference point has the wrong length");
  }

  double descent_lip = 0.0;
  if (config.monitor_descent) {
    descent_lip = psi_lipschitz(lipschitz_constants(problem), net).grad;
  }

  std::optional<double> escape_level;
  if (config.reference) {
    const double f_ref = problem.value(*config.reference);
    const double margin = config.escape_margin.value_or(1e-4 * (1.0 + std::abs(f_ref)));
    escape_level = f_ref - margin;
  }

  Rng rng(config.seed);
  Trace trace;

  auto record = [&](const IterateState& s) {
    TraceRecord r;
    r.iter = s.iter;
    r.f_value = problem.value(s.theta);
    r.feas_residual = feasibility_residual(s.theta, problem.demand(), n);
    r.proj_grad_norm = projected_grad_norm(s.theta, problem, net);
    if (config.record_curvature) r.tangent_curvature = tangent_min_curvature(s.theta, problem);
    if (config.reference) r.dist_to_ref = (s.theta - *config.reference).norm();
    trace.records.push_back(r);
  };
  auto coupling_error = [&](const IterateState& s) {
    if (!s.aux_x) return;
    const double err = (s.theta - *s.anchor - apply_lifted(net.sqrt_laplacian(), *s.aux_x, n)).norm();
    trace.max_coupling_error = std::max(trace.max_coupling_error, err);
  };
  auto fail = [&](const IterateState& s) {
    trace.final_state = s;
    trace.iterations_run = s.iter;
    throw Divergence(s.iter, std::move(trace));
  };

  double f_current = problem.value(state.theta);
  if (escape_level && f_current < *escape_level) trace.escape_iteration = 0;

  for (std::int64_t k = 0; k < config.max_iters; ++k) {
    if (k % config.record_every == 0) {
      record(state);
      if (config.early_exit) {
        const auto report = classify(state.theta, problem, net, config.early_exit->epsilon, config.early_exit->gamma);
        if (report.classification == Classification::kSecondOrder) {
          trace.certified_iteration = k;
          break;
        }
      }
    }

    Vector noise;
    if (config.noisy() && config.noise_variance > 0.0) noise = sample_perturbation(m, n, config.noise_variance, rng);

    const Vector grad = problem.gradient(state.theta);
    const Vector sqrt_grad = apply_lifted(net.sqrt_laplacian(), grad, n);
    IterateState next;
    next.iter = state.iter + 1;
    switch (config.algorithm) {
      case Algorithm::kLgd:
      case Algorithm::kNlgd: {
        Vector direction = apply_lifted(net.laplacian(), grad, n);
        if (noise.size() > 0) direction += apply_lifted(net.sqrt_laplacian(), noise, n);
        next.theta = state.theta - config.step_size * direction;
        if (state.aux_x) {
          Vector aux_dir = sqrt_grad;
          if (noise.size() > 0) aux_dir += noise;
          next.aux_x = *state.aux_x - config.step_size * aux_dir;
          next.anchor = state.anchor;
        }
        break;
      }
      case Algorithm::kAuxGd:
      case Algorithm::kAuxNgd: {
        Vector direction = sqrt_grad;
        if (noise.size() > 0) direction += noise;
        next.aux_x = *state.aux_x - config.step_size * direction;
        next.anchor = state.anchor;
        next.theta = *state.anchor + apply_lifted(net.sqrt_laplacian(), *next.aux_x, n);
        break;
      }
    }
    if (diverged(next.theta)) fail(next);

    const bool need_value = escape_level.has_value() || config.monitor_descent;
    if (need_value) {
      const double f_next = problem.value(next.theta);
      if (config.monitor_descent && !config.noisy()) {
        const double step_sq = config.step_size * config.step_size * sqrt_grad.squaredNorm();
        const double bound = (-1.0 / config.step_size + 0.5 * descent_lip) * step_sq;
        if (f_next - f_current > bound + kDescentSlack) ++trace.descent_violations;
      }
      if (escape_level && !trace.escape_iteration && f_next < *escape_level) trace.escape_iteration = next.iter;
      f_current = f_next;
    }
    coupling_error(next);
    state = std::move(next);
  }

  if (!trace.certified_iteration && (trace.records.empty() || trace.records.back().iter != state.iter)) {
    record(state);
  }
  trace.iterations_run = state.iter;
  trace.final_state = std::move(state);
  return trace;
}

PsiLipschitz psi_lipschitz(const LipschitzConstants& f, const NetworkOperator& net) {
  const double s = net.sqrt_norm_sq();
  return PsiLipschitz{s * f.grad, s * std::sqrt(s) * f.hess};
}

double theoretical_step_bound(double confidence, double lip_grad_f, double sqrt_norm_sq) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence p must lie in (0, 1)");
  if (!(lip_grad_f > 0.0) || !(sqrt_norm_sq > 0.0)) {
    throw InvalidArgument("Lipschitz constant and ||sqrt L||^2 must be positive");
  }
  const double denom = sqrt_norm_sq * lip_grad_f;
  return std::min(1.0 / denom, -2.0 * std::log(confidence) / denom);
}

double variance_for_tolerance(double eps_g, int m, int n) {
  if (!(eps_g > 0.0)) throw InvalidArgument("eps_g must be positive");
  if (m < 1 || n < 1) throw InvalidArgument("m and n must be positive");
  return eps_g * eps_g / (12.0 * m * n);
}

double second_order_tolerance(double eps_g, double sqrt_norm_sq, double lip_hess_f) {
  if (!(eps_g >= 0.0) || !(sqrt_norm_sq >= 0.0) || !(lip_hess_f >= 0.0)) {
    throw InvalidArgument("second_order_tolerance: arguments must be non-negative");
  }
  const double sqrt_norm = std::sqrt(sqrt_norm_sq);
  return std::sqrt(eps_g * sqrt_norm_sq * sqrt_norm * lip_hess_f);
}

std::int64_t iteration_budget(double psi_at_x0, double sum_f_star, double lip_grad_psi, double eps_g,
                              double step_size, BudgetFormula formula, double rho) {
  if (psi_at_x0 < sum_f_star) {
    throw InvalidArgument("iteration_budget: Psi(x0) is below the supplied lower bound sum f_i^*");
  }
  if (!(eps_g > 0.0) || !(step_size > 0.0)) throw InvalidArgument("iteration_budget: eps_g and alpha must be positive");
  const double gap = psi_at_x0 - sum_f_star;
  double quotient = 0.0;
  if (formula == BudgetFormula::kStatement) {
    if (!(lip_grad_psi > 0.0)) throw InvalidArgument("iteration_budget: L^g_Psi must be positive");
    quotient = gap / (lip_grad_psi * eps_g * eps_g * step_size * step_size);
  } else {
    if (!(rho > 0.0)) throw InvalidArgument("iteration_budget: rho must be positive");
    quotient = gap / (eps_g * eps_g * step_size) * std::pow(rho, 7);
  }
  const double k = std::ceil(quotient);
  if (!(k < 9.0e18)) throw InvalidArgument("iteration_budget: budget overflows a 64-bit count");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(k));
}

}  // namespace nlgd
