#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nlgd/types.hpp"

namespace nlgd {

class Rng;

// Smooth private cost f_i of one agent.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;

  virtual std::string family() const = 0;
  virtual int dim() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const = 0;

  // Declared Lipschitz constants of the gradient and the Hessian; empty when
  // the objective does not know them.
  virtual std::optional<double> lip_grad() const { return std::nullopt; }
  virtual std::optional<double> lip_hess() const { return std::nullopt; }
  // Unconstrained global minimum value f_i^*, if known or computable.
  virtual std::optional<double> minimum_value() const { return std::nullopt; }
};

using ObjectivePtr = std::shared_ptr<const LocalObjective>;

// f(x) = 1/2 x^T A x + c^T x with A symmetric positive definite.
class QuadraticObjective final : public LocalObjective {
 public:
  QuadraticObjective(Matrix curvature, Vector linear);

  std::string family() const override { return "quadratic"; }
  int dim() const override { return static_cast<int>(linear_.size()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  std::optional<double> lip_grad() const override { return lip_grad_; }
  std::optional<double> lip_hess() const override { return 0.0; }
  std::optional<double> minimum_value() const override { return min_value_; }

  const Matrix& curvature() const noexcept { return curvature_; }
  const Vector& linear() const noexcept { return linear_; }
  Vector minimizer() const;

 private:
  Matrix curvature_;
  Vector linear_;
  double lip_grad_;
  double min_value_;
};

// Prosumer cost a*x^2 - b*log(1 + x^2), applied to each coordinate and summed.
class SmartGridObjective final : public LocalObjective {
 public:
  SmartGridObjective(double a, double b, int dim = 1);

  std::string family() const override { return "smart_grid"; }
  int dim() const override { return dim_; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  // |f''| <= 2a + 2b everywhere.
  std::optional<double> lip_grad() const override { return 2.0 * a_ + 2.0 * b_; }
  // sup |f'''| = b (3 + 2 sqrt 2) / 2, attained at |x| = sqrt 2 - 1.
  std::optional<double> lip_hess() const override;
  std::optional<double> minimum_value() const override;

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

 private:
  double a_;
  double b_;
  int dim_;
};

// Agent portfolio cost -mu^T x + lambda x^T Sigma x + gamma sum_j log(1 + x_j^2).
class PortfolioObjective final : public LocalObjective {
 public:
  PortfolioObjective(Vector mu, Matrix sigma, double risk_aversion, double regularization);

  std::string family() const override { return "portfolio"; }
  int dim() const override { return static_cast<int>(mu_.size()); }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  std::optional<double> lip_grad() const override { return lip_grad_; }
  std::optional<double> lip_hess() const override;
  // Found numerically (multi-start descent) at construction.
  std::optional<double> minimum_value() const override { return min_value_; }

  const Vector& mu() const noexcept { return mu_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  double risk_aversion() const noexcept { return risk_aversion_; }
  double regularization() const noexcept { return regularization_; }

 private:
  double compute_minimum() const;

  Vector mu_;
  Matrix sigma_;
  double risk_aversion_;
  double regularization_;
  double lip_grad_;
  double min_value_;
};

// Objective assembled from callables; used for ad-hoc problems and bindings.
class FunctionObjective final : public LocalObjective {
 public:
  struct Callbacks {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
  };

  FunctionObjective(int dim, Callbacks callbacks, std::optional<double> lip_grad = std::nullopt,
                    std::optional<double> lip_hess = std::nullopt,
                    std::optional<double> minimum_value = std::nullopt);

  std::string family() const override { return "custom"; }
  int dim() const override { return dim_; }
  double value(const Vector& x) const override { return cb_.value(x); }
  Vector gradient(const Vector& x) const override { return cb_.gradient(x); }
  Matrix hessian(const Vector& x) const override { return cb_.hessian(x); }
  std::optional<double> lip_grad() const override { return lip_grad_; }
  std::optional<double> lip_hess() const override { return lip_hess_; }
  std::optional<double> minimum_value() const override { return min_value_; }

 private:
  int dim_;
  Callbacks cb_;
  std::optional<double> lip_grad_, lip_hess_, min_value_;
};

ObjectivePtr quadratic_objective(const Matrix& curvature, const Vector& linear);
ObjectivePtr quadratic_objective(double curvature, const Vector& linear);
ObjectivePtr smart_grid_objective(double a, double b, int dim = 1);
ObjectivePtr portfolio_objective(const Vector& mu, const Matrix& sigma, double risk_aversion,
                                 double regularization);

// Default seeded parameter draws for each family.
//   quadratic:  a_i ~ U[0.5, 1.5] (times I_n), c_i = 0
//   smart grid: a_i ~ U[0.5, 1.5], b_i ~ U[2, 3]
//   portfolio:  mu_i ~ U[0,1]^n, Sigma_i = B B^T / n + 0.1 I (B standard normal),
//               lambda_i ~ U[0.5, 1.5], gamma_i ~ U[0.5, 1.5]
std::vector<ObjectivePtr> sample_quadratic_agents(int m, int n, Rng& rng);
std::vector<ObjectivePtr> sample_smart_grid_agents(int m, int n, Rng& rng);
std::vector<ObjectivePtr> sample_portfolio_agents(int m, int n, Rng& rng);

struct GlobalEval {
  double value = 0.0;
  Vector gradient;
  std::vector<Matrix> hessian_blocks;

  // Dense block-diagonal Hessian.
  Matrix hessian() const;
};

// min sum_i f_i(theta_i) subject to sum_i theta_i = r.
class ProblemInstance {
 public:
  ProblemInstance(std::vector<ObjectivePtr> objectives, Vector demand);

  int agent_count() const noexcept { return static_cast<int>(objectives_.size()); }
  int agent_dim() const noexcept { return static_cast<int>(demand_.size()); }
  Eigen::Index stacked_size() const noexcept { return demand_.size() * agent_count(); }
  const std::vector<ObjectivePtr>& objectives() const noexcept { return objectives_; }
  const LocalObjective& objective(int i) const { return *objectives_.at(i); }
  const Vector& demand() const noexcept { return demand_; }

  // Sum of the per-agent global minima; nullopt if any agent lacks one.
  std::optional<double> global_min_sum() const;

  double value(const Vector& theta) const;
  Vector gradient(const Vector& theta) const;
  std::vector<Matrix> hessian_blocks(const Vector& theta) const;
  GlobalEval evaluate(const Vector& theta) const;

 private:
  void check_length(const Vector& theta) const;

  std::vector<ObjectivePtr> objectives_;
  Vector demand_;
};

GlobalEval eval_global(const ProblemInstance& problem, const Vector& theta);

struct LipschitzConstants {
  double grad = 0.0;
  double hess = 0.0;
};

// Agent-wise maxima of the declared constants. Throws if any agent does not
// declare them.
LipschitzConstants lipschitz_constants(const ProblemInstance& problem);

struct FdCheckResult {
  double grad_rel_err = 0.0;
  double hess_rel_err = 0.0;
};

// Central differences of value against gradient and of gradient against
// Hessian. Errors are ||fd - analytic|| / max(1, ||analytic||).
FdCheckResult fd_check(const LocalObjective& objective, const Vector& point, double h = 1e-5);

}  // namespace nlgd
