#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlgd/network.hpp"
#include "nlgd/objectives.hpp"
#include "nlgd/rng.hpp"

namespace nlgd {

enum class Algorithm {
  kLgd,     // theta <- theta - a L_hat grad F(theta)
  kNlgd,    // theta <- theta - a (L_hat grad F(theta) + sqrt(L_hat) noise)
  kAuxGd,   // gradient descent on Psi(x) = F(theta0 + sqrt(L_hat) x)
  kAuxNgd,  // noisy gradient descent on Psi
};

std::string_view to_string(Algorithm a);
// Accepts the names printed by to_string, case-insensitively.
Algorithm parse_algorithm(std::string_view name);

struct StopCriterion {
  double epsilon = 0.0;
  double gamma = 0.0;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::kLgd;
  double step_size = 1e-3;
  // Per-coordinate Gaussian variance sigma^2.
  double noise_variance = 0.0;
  std::int64_t max_iters = 1;
  // Seed of the perturbation stream.
  std::uint64_t seed = 0;
  std::int64_t record_every = 1;
  // Co-run x^k with theta^k = theta0 + sqrt(L_hat) x^k next to an LGD/NLGD run.
  bool track_auxiliary = false;
  // Adds the tangent-space minimum curvature to every record (one eigensolve each).
  bool record_curvature = false;
  // Sufficient-descent check for noiseless runs; needs declared Lipschitz constants.
  bool monitor_descent = false;
  // Reference point for distance records and escape detection.
  std::optional<Vector> reference;
  // Escape margin; defaults to 1e-4 (1 + |F(reference)|).
  std::optional<double> escape_margin;
  // Stop at the first recorded iterate classified SECOND_ORDER.
  std::optional<StopCriterion> early_exit;

  void validate() const;
  bool noisy() const { return algorithm == Algorithm::kNlgd || algorithm == Algorithm::kAuxNgd; }
};

struct IterateState {
  Vector theta;
  // Auxiliary iterate x^k and the anchor theta0 it is measured from.
  std::optional<Vector> aux_x;
  std::optional<Vector> anchor;
  std::int64_t iter = 0;

  static IterateState start(const Vector& theta0, bool with_auxiliary);
};

struct TraceRecord {
  std::int64_t iter = 0;
  double f_value = 0.0;
  double feas_residual = 0.0;
  double proj_grad_norm = 0.0;
  std::optional<double> tangent_curvature;
  std::optional<double> dist_to_ref;
};

struct Trace {
  std::vector<TraceRecord> records;
  IterateState final_state;
  std::int64_t iterations_run = 0;
  // First k with F(theta^k) < F(reference) - margin.
  std::optional<std::int64_t> escape_iteration;
  std::optional<std::int64_t> certified_iteration;
  std::int64_t descent_violations = 0;
  // max_k ||theta^k - theta0 - sqrt(L_hat) x^k|| when x^k is tracked.
  double max_coupling_error = 0.0;
};

// Raised when an iterate is non-finite or exceeds 1e12 in norm. Carries the
// trace recorded so far.
class Divergence : public Error {
 public:
  Divergence(std::int64_t iteration, Trace partial);
  std::int64_t iteration() const noexcept { return iteration_; }
  const Trace& partial_trace() const noexcept { return partial_; }

 private:
  std::int64_t iteration_;
  Trace partial_;
};

// n^k with i.i.d. N(0, sigma^2) coordinates; no draws when sigma^2 == 0.
Vector sample_perturbation(int m, int n, double noise_variance, Rng& rng);

IterateState lgd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                      double step_size);
IterateState nlgd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                       double step_size, double noise_variance, Rng& rng);
// Same as nlgd_step with the perturbation supplied by the caller.
IterateState nlgd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                       double step_size, const Vector& noise);
IterateState aux_gd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                         double step_size);
IterateState aux_ngd_step(const IterateState& state, const ProblemInstance& problem, const NetworkOperator& net,
                          double step_size, double noise_variance, Rng& rng);

Trace run(const ProblemInstance& problem, const NetworkOperator& net, const Vector& theta0,
          const RunConfig& config);

// ---- parameter calculators

struct PsiLipschitz {
  double grad = 0.0;  // ||sqrt L||^2 L^g_F
  double hess = 0.0;  // ||sqrt L||^3 L^H_F
};
PsiLipschitz psi_lipschitz(const LipschitzConstants& f, const NetworkOperator& net);

// min{1, -2 ln p} / (||sqrt L||^2 L^g_F), p in (0, 1).
double theoretical_step_bound(double confidence, double lip_grad_f, double sqrt_norm_sq);

// sigma^2 = eps_g^2 / (12 m n).
double variance_for_tolerance(double eps_g, int m, int n);

// eps_H = sqrt(eps_g ||sqrt L||^3 L^H_F).
double second_order_tolerance(double eps_g, double sqrt_norm_sq, double lip_hess_f);

enum class BudgetFormula {
  // ceil(gap / (L^g_Psi eps_g^2 alpha^2))
  kStatement,
  // ceil(gap eps_g^-2 alpha^-1 rho^7), the form used inside the convergence argument.
  kProof,
};

// Iteration budget K, at least 1. Throws if psi_at_x0 < sum_f_star.
std::int64_t iteration_budget(double psi_at_x0, double sum_f_star, double lip_grad_psi, double eps_g,
                              double step_size, BudgetFormula formula = BudgetFormula::kStatement,
                              double rho = 1.0);

}  // namespace nlgd
