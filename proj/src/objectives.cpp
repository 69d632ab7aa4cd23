#include "nlgd/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nlgd/rng.hpp"

namespace nlgd {

namespace {

// sup_t |d^3/dt^3 log(1 + t^2)| / 2 = (3 + 2 sqrt 2) / 4, attained at |t| = sqrt 2 - 1.
constexpr double kLogThirdDerivativeHalfBound = (3.0 + 2.0 * std::numbers::sqrt2) / 4.0;

void require_finite_dim(const Vector& x, int dim, const char* who) {
  if (x.size() != dim) {
    throw DimensionMismatch(std::string(who) + ": expected length " + std::to_string(dim) + ", got " +
                            std::to_string(x.size()));
  }
}

double symmetric_min_eig(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double symmetric_max_eig(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

void require_spd(const Matrix& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DimensionMismatch(std::string(who) + ": matrix not square");
  if (!a.allFinite()) throw InvalidArgument(std::string(who) + ": matrix has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument(std::string(who) + ": matrix not symmetric");
  }
  if (!(symmetric_min_eig(a) > 0.0)) throw InvalidArgument(std::string(who) + ": matrix not positive definite");
}

}  // namespace

// ---------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(Matrix curvature, Vector linear)
    : curvature_(std::move(curvature)), linear_(std::move(linear)) {
  if (linear_.size() == 0) throw InvalidArgument("quadratic objective: empty dimension");
  if (curvature_.rows() != linear_.size()) {
    throw DimensionMismatch("quadratic objective: curvature and linear term sizes differ");
  }
  require_spd(curvature_, "quadratic objective");
  lip_grad_ = symmetric_max_eig(curvature_);
  min_value_ = -0.5 * linear_.dot(curvature_.ldlt().solve(linear_));
}

double QuadraticObjective::value(const Vector& x) const {
  require_finite_dim(x, dim(), "quadratic objective");
  return 0.5 * x.dot(curvature_ * x) + linear_.dot(x);
}

Vector QuadraticObjective::gradient(const Vector& x) const {
  require_finite_dim(x, dim(), "quadratic objective");
  return curvature_ * x + linear_;
}

Matrix QuadraticObjective::hessian(const Vector& x) const {
  require_finite_dim(x, dim(), "quadratic objective");
  return curvature_;
}

Vector QuadraticObjective::minimizer() const { return -curvature_.ldlt().solve(linear_); }

// ---------------------------------------------------------------- smart grid

SmartGridObjective::SmartGridObjective(double a, double b, int dim) : a_(a), b_(b), dim_(dim) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("smart grid objective: a must be positive");
  // b = 0 is accepted and degenerates to a pure quadratic.
  if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("smart grid objective: b must be non-negative");
  if (dim < 1) throw InvalidArgument("smart grid objective: dimension must be positive");
}

double SmartGridObjective::value(const Vector& x) const {
  require_finite_dim(x, dim_, "smart grid objective");
  double total = 0.0;
  for (double t : x) total += a_ * t * t - b_ * std::log1p(t * t);
  return total;
}

Vector SmartGridObjective::gradient(const Vector& x) const {
  require_finite_dim(x, dim_, "smart grid objective");
  Vector g(dim_);
  for (int j = 0; j < dim_; ++j) {
    const double t = x[j];
    g[j] = 2.0 * a_ * t - 2.0 * b_ * t / (1.0 + t * t);
  }
  return g;
}

Matrix SmartGridObjective::hessian(const Vector& x) const {
  require_finite_dim(x, dim_, "smart grid objective");
  Matrix h = Matrix::Zero(dim_, dim_);
  for (int j = 0; j < dim_; ++j) {
    const double t2 = x[j] * x[j];
    const double q = 1.0 + t2;
    h(j, j) = 2.0 * a_ - 2.0 * b_ * (1.0 - t2) / (q * q);
  }
  return h;
}

std::optional<double> SmartGridObjective::lip_hess() const {
  return 2.0 * b_ * kLogThirdDerivativeHalfBound;
}

std::optional<double> SmartGridObjective::minimum_value() const {
  // Stationary points: x = 0 or x^2 = b/a - 1.
  if (b_ <= a_) return 0.0;
  return dim_ * (b_ - a_ - b_ * std::log(b_ / a_));
}

// ---------------------------------------------------------------- portfolio

PortfolioObjective::PortfolioObjective(Vector mu, Matrix sigma, double risk_aversion, double regularization)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), risk_aversion_(risk_aversion), regularization_(regularization) {
  if (mu_.size() == 0) throw InvalidArgument("portfolio objective: empty dimension");
  if (sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size()) {
    throw DimensionMismatch("portfolio objective: covariance size does not match return vector");
  }
  require_spd(sigma_, "portfolio objective covariance");
  if (!(risk_aversion_ > 0.0)) throw InvalidArgument("portfolio objective: lambda must be positive");
  if (!(regularization_ >= 0.0)) throw InvalidArgument("portfolio objective: gamma must be non-negative");
  // Hessian = 2 lambda Sigma + gamma diag(2(1-t^2)/(1+t^2)^2), the latter in [-gamma/4, 2 gamma].
  lip_grad_ = 2.0 * risk_aversion_ * symmetric_max_eig(sigma_) + 2.0 * regularization_;
  min_value_ = compute_minimum();
}

double PortfolioObjective::value(const Vector& x) const {
  require_finite_dim(x, dim(), "portfolio objective");
  double reg = 0.0;
  for (double t : x) reg += std::log1p(t * t);
  return -mu_.dot(x) + risk_aversion_ * x.dot(sigma_ * x) + regularization_ * reg;
}

Vector PortfolioObjective::gradient(const Vector& x) const {
  require_finite_dim(x, dim(), "portfolio objective");
  Vector g = -mu_ + 2.0 * risk_aversion_ * (sigma_ * x);
  for (Eigen::Index j = 0; j < x.size(); ++j) g[j] += regularization_ * 2.0 * x[j] / (1.0 + x[j] * x[j]);
  return g;
}

Matrix PortfolioObjective::hessian(const Vector& x) const {
  require_finite_dim(x, dim(), "portfolio objective");
  Matrix h = 2.0 * risk_aversion_ * sigma_;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double t2 = x[j] * x[j];
    const double q = 1.0 + t2;
    h(j, j) += regularization_ * 2.0 * (1.0 - t2) / (q * q);
  }
  return h;
}

std::optional<double> PortfolioObjective::lip_hess() const {
  return 2.0 * regularization_ * kLogThirdDerivativeHalfBound;
}

double PortfolioObjective::compute_minimum() const {
  const int n = dim();
  // Starts: origin, the minimizer of the convex part, and signed coordinate
  // probes scaled to it.
  std::vector<Vector> starts;
  starts.push_back(Vector::Zero(n));
  const Vector convex_min = (2.0 * risk_aversion_ * sigma_).ldlt().solve(mu_);
  starts.push_back(convex_min);
  const double scale = std::max(1.0, convex_min.cwiseAbs().maxCoeff());
  for (int j = 0; j < n; ++j) {
    for (double sign : {-1.0, 1.0}) {
      Vector s = Vector::Zero(n);
      s[j] = sign * scale;
      starts.push_back(s);
    }
  }
  const double step = 1.0 / lip_grad_;
  double best = std::numeric_limits<double>::infinity();
  for (Vector x : starts) {
    for (int it = 0; it < 20000; ++it) {
      const Vector g = gradient(x);
      if (g.norm() < 1e-12) break;
      x -= step * g;
    }
    best = std::min(best, value(x));
  }
  return best;
}

// ---------------------------------------------------------------- callables

FunctionObjective::FunctionObjective(int dim, Callbacks callbacks, std::optional<double> lip_grad,
                                     std::optional<double> lip_hess, std::optional<double> minimum_value)
    : dim_(dim), cb_(std::move(callbacks)), lip_grad_(lip_grad), lip_hess_(lip_hess), min_value_(minimum_value) {
  if (dim < 1) throw InvalidArgument("function objective: dimension must be positive");
  if (!cb_.value || !cb_.gradient || !cb_.hessian) {
    throw InvalidArgument("function objective: value, gradient and hessian callbacks are required");
  }
}

// ---------------------------------------------------------------- factories

ObjectivePtr quadratic_objective(const Matrix& curvature, const Vector& linear) {
  return std::make_shared<QuadraticObjective>(curvature, linear);
}

ObjectivePtr quadratic_objective(double curvature, const Vector& linear) {
  if (!(curvature > 0.0)) throw InvalidArgument("quadratic objective: matrix not positive definite");
  return std::make_shared<QuadraticObjective>(curvature * Matrix::Identity(linear.size(), linear.size()), linear);
}

ObjectivePtr smart_grid_objective(double a, double b, int dim) {
  return std::make_shared<SmartGridObjective>(a, b, dim);
}

ObjectivePtr portfolio_objective(const Vector& mu, const Matrix& sigma, double risk_aversion,
                                 double regularization) {
  return std::make_shared<PortfolioObjective>(mu, sigma, risk_aversion, regularization);
}

std::vector<ObjectivePtr> sample_quadratic_agents(int m, int n, Rng& rng) {
  std::vector<ObjectivePtr> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) out.push_back(quadratic_objective(rng.uniform(0.5, 1.5), Vector::Zero(n)));
  return out;
}

std::vector<ObjectivePtr> sample_smart_grid_agents(int m, int n, Rng& rng) {
  std::vector<ObjectivePtr> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    const double a = rng.uniform(0.5, 1.5);
    const double b = rng.uniform(2.0, 3.0);
    out.push_back(smart_grid_objective(a, b, n));
  }
  return out;
}

std::vector<ObjectivePtr> sample_portfolio_agents(int m, int n, Rng& rng) {
  std::vector<ObjectivePtr> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    Vector mu(n);
    for (int j = 0; j < n; ++j) mu[j] = rng.uniform();
    Matrix b(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) b(r, c) = rng.normal();
    Matrix sigma = b * b.transpose() / n + 0.1 * Matrix::Identity(n, n);
    sigma = 0.5 * (sigma + sigma.transpose());
    const double lambda = rng.uniform(0.5, 1.5);
    const double gamma = rng.uniform(0.5, 1.5);
    out.push_back(portfolio_objective(mu, sigma, lambda, gamma));
  }
  return out;
}

// ---------------------------------------------------------------- global

Matrix GlobalEval::hessian() const {
  Eigen::Index total = 0;
  for (const auto& b : hessian_blocks) total += b.rows();
  Matrix h = Matrix::Zero(total, total);
  Eigen::Index offset = 0;
  for (const auto& b : hessian_blocks) {
    h.block(offset, offset, b.rows(), b.cols()) = b;
    offset += b.rows();
  }
  return h;
}

ProblemInstance::ProblemInstance(std::vector<ObjectivePtr> objectives, Vector demand)
    : objectives_(std::move(objectives)), demand_(std::move(demand)) {
  if (objectives_.size() < 2) throw InvalidArgument("problem needs at least 2 agents");
  if (demand_.size() < 1) throw InvalidArgument("problem demand vector is empty");
  for (std::size_t i = 0; i < objectives_.size(); ++i) {
    if (!objectives_[i]) throw InvalidArgument("problem agent " + std::to_string(i) + " has no objective");
    if (objectives_[i]->dim() != demand_.size()) {
      throw DimensionMismatch("agent " + std::to_string(i) + " has dimension " +
                              std::to_string(objectives_[i]->dim()) + ", demand has " +
                              std::to_string(demand_.size()));
    }
  }
}

void ProblemInstance::check_length(const Vector& theta) const {
  if (theta.size() != stacked_size()) {
    throw DimensionMismatch("stacked vector has length " + std::to_string(theta.size()) + ", expected " +
                            std::to_string(stacked_size()));
  }
}

std::optional<double> ProblemInstance::global_min_sum() const {
  double total = 0.0;
  for (const auto& obj : objectives_) {
    const auto v = obj->minimum_value();
    if (!v) return std::nullopt;
    total += *v;
  }
  return total;
}

double ProblemInstance::value(const Vector& theta) const {
  check_length(theta);
  const int n = agent_dim();
  double total = 0.0;
  for (int i = 0; i < agent_count(); ++i) total += objectives_[i]->value(theta.segment(i * n, n));
  return total;
}

Vector ProblemInstance::gradient(const Vector& theta) const {
  check_length(theta);
  const int n = agent_dim();
  Vector g(theta.size());
  for (int i = 0; i < agent_count(); ++i) g.segment(i * n, n) = objectives_[i]->gradient(theta.segment(i * n, n));
  return g;
}

std::vector<Matrix> ProblemInstance::hessian_blocks(const Vector& theta) const {
  check_length(theta);
  const int n = agent_dim();
  std::vector<Matrix> blocks;
  blocks.reserve(agent_count());
  for (int i = 0; i < agent_count(); ++i) blocks.push_back(objectives_[i]->hessian(theta.segment(i * n, n)));
  return blocks;
}

GlobalEval ProblemInstance::evaluate(const Vector& theta) const {
  return GlobalEval{value(theta), gradient(theta), hessian_blocks(theta)};
}

GlobalEval eval_global(const ProblemInstance& problem, const Vector& theta) { return problem.evaluate(theta); }

LipschitzConstants lipschitz_constants(const ProblemInstance& problem) {
  LipschitzConstants out;
  for (int i = 0; i < problem.agent_count(); ++i) {
    const auto g = problem.objective(i).lip_grad();
    const auto h = problem.objective(i).lip_hess();
    if (!g || !h) {
      throw InvalidArgument("agent " + std::to_string(i) + " (" + problem.objective(i).family() +
                            ") declares no Lipschitz constants");
    }
    out.grad = std::max(out.grad, *g);
    out.hess = std::max(out.hess, *h);
  }
  return out;
}

FdCheckResult fd_check(const LocalObjective& objective, const Vector& point, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_check: step must be positive");
  const int n = objective.dim();
  require_finite_dim(point, n, "fd_check");
  const Vector grad = objective.gradient(point);
  const Matrix hess = objective.hessian(point);
  Vector fd_grad(n);
  Matrix fd_hess(n, n);
  for (int j = 0; j < n; ++j) {
    Vector plus = point, minus = point;
    plus[j] += h;
    minus[j] -= h;
    fd_grad[j] = (objective.value(plus) - objective.value(minus)) / (2.0 * h);
    fd_hess.col(j) = (objective.gradient(plus) - objective.gradient(minus)) / (2.0 * h);
  }
  FdCheckResult out;
  out.grad_rel_err = (fd_grad - grad).norm() / std::max(1.0, grad.norm());
  out.hess_rel_err = (fd_hess - hess).norm() / std::max(1.0, hess.norm());
  return out;
}

}  // namespace nlgd
