#include "nlgd/stationarity.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <utility>

namespace nlgd {

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::kInfeasible:
      return "INFEASIBLE";
    case Classification::kNotStationary:
      return "NOT_STATIONARY";
    case Classification::kFirstOrderOnly:
      return "FIRST_ORDER_ONLY";
    case Classification::kSecondOrder:
      return "SECOND_ORDER";
  }
  return "UNKNOWN";
}

std::string format_report(const StationarityReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "classification = " << to_string(r.classification) << '\n'
      << "feasibility_residual = " << r.feasibility_residual << '\n'
      << "projected_grad_norm = " << r.projected_grad_norm << '\n'
      << "tangent_min_curvature = " << r.tangent_min_curvature << '\n'
      << "epsilon = " << r.epsilon << '\n'
      << "gamma = " << r.gamma << '\n'
      << "feasibility_tol = " << r.feasibility_tol << '\n';
  return out.str();
}

double feasibility_residual(const Vector& theta, const Vector& demand, int n) {
  if (demand.size() != n) throw DimensionMismatch("feasibility_residual: demand length differs from agent dim");
  return (block_sum(theta, n) - demand).norm();
}

double projected_grad_norm(const Vector& theta, const ProblemInstance& problem, const NetworkOperator& net) {
  if (net.agent_count() != problem.agent_count()) {
    throw DimensionMismatch("network and problem disagree on the agent count");
  }
  return apply_lifted(net.sqrt_laplacian(), problem.gradient(theta), problem.agent_dim()).norm();
}

namespace {

Matrix make_tangent_basis(int m, int n) {
  Matrix q = Matrix::Zero(static_cast<Eigen::Index>(m) * n, static_cast<Eigen::Index>(m - 1) * n);
  for (int k = 0; k < m - 1; ++k) {
    const double norm = std::sqrt(static_cast<double>(k + 1) * (k + 2));
    for (int c = 0; c < n; ++c) {
      const Eigen::Index col = static_cast<Eigen::Index>(k) * n + c;
      for (int i = 0; i <= k; ++i) q(static_cast<Eigen::Index>(i) * n + c, col) = 1.0 / norm;
      q(static_cast<Eigen::Index>(k + 1) * n + c, col) = -(k + 1) / norm;
    }
  }
  return q;
}

}  // namespace

const Matrix& tangent_basis(int m, int n) {
  if (m < 2 || n < 1) throw InvalidArgument("tangent_basis: need m >= 2 and n >= 1");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<const Matrix>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{m, n}];
  if (!slot) slot = std::make_unique<const Matrix>(make_tangent_basis(m, n));
  return *slot;
}

double tangent_min_curvature(const std::vector<Matrix>& hessian_blocks, int m, int n) {
  if (static_cast<int>(hessian_blocks.size()) != m) {
    throw DimensionMismatch("tangent_min_curvature: expected " + std::to_string(m) + " Hessian blocks");
  }
  const Matrix& q = tangent_basis(m, n);
  // H Q computed block-wise; H is block diagonal.
  Matrix hq(q.rows(), q.cols());
  for (int i = 0; i < m; ++i) {
    const Matrix& block = hessian_blocks[i];
    if (block.rows() != n || block.cols() != n) throw DimensionMismatch("tangent_min_curvature: bad block size");
    hq.middleRows(static_cast<Eigen::Index>(i) * n, n).noalias() =
        block * q.middleRows(static_cast<Eigen::Index>(i) * n, n);
  }
  Matrix reduced = q.transpose() * hq;
  reduced = 0.5 * (reduced + reduced.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(reduced, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double tangent_min_curvature(const Vector& theta, const ProblemInstance& problem) {
  return tangent_min_curvature(problem.hessian_blocks(theta), problem.agent_count(), problem.agent_dim());
}

double feasibility_tolerance(const Vector& demand) { return 1e-8 * (1.0 + demand.norm()); }

StationarityReport classify(const Vector& theta, const ProblemInstance& problem, const NetworkOperator& net,
                            double epsilon, double gamma) {
  if (!(epsilon > 0.0) || !(gamma > 0.0)) throw InvalidArgument("classify: epsilon and gamma must be positive");
  StationarityReport r;
  r.epsilon = epsilon;
  r.gamma = gamma;
  r.feasibility_tol = feasibility_tolerance(problem.demand());
  r.feasibility_residual = feasibility_residual(theta, problem.demand(), problem.agent_dim());
  r.projected_grad_norm = projected_grad_norm(theta, problem, net);
  r.tangent_min_curvature = tangent_min_curvature(theta, problem);
  if (r.feasibility_residual > r.feasibility_tol) {
    r.classification = Classification::kInfeasible;
  } else if (r.projected_grad_norm <= epsilon) {
    r.classification = r.tangent_min_curvature >= -gamma ? Classification::kSecondOrder
                                                         : Classification::kFirstOrderOnly;
  } else {
    r.classification = Classification::kNotStationary;
  }
  return r;
}

Vector aux_gradient(const Vector& x, const Vector& theta0, const ProblemInstance& problem,
                    const NetworkOperator& net) {
  const int n = problem.agent_dim();
  const Vector theta = theta0 + apply_lifted(net.sqrt_laplacian(), x, n);
  return apply_lifted(net.sqrt_laplacian(), problem.gradient(theta), n);
}

Matrix aux_hessian(const Vector& x, const Vector& theta0, const ProblemInstance& problem,
                   const NetworkOperator& net) {
  const int n = problem.agent_dim();
  const int m = problem.agent_count();
  const Vector theta = theta0 + apply_lifted(net.sqrt_laplacian(), x, n);
  const auto blocks = problem.hessian_blocks(theta);
  // Block (i, j) of (S blkdiag(H_k) S), S = sqrt(L) kron I_n, is
  // sum_k S_ik S_kj H_k.
  const Matrix& s = net.sqrt_laplacian();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(m) * n, static_cast<Eigen::Index>(m) * n);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      Matrix block = Matrix::Zero(n, n);
      for (int k = 0; k < m; ++k) block += (s(i, k) * s(k, j)) * blocks[k];
      out.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) = block;
      out.block(static_cast<Eigen::Index>(j) * n, static_cast<Eigen::Index>(i) * n, n, n) = block.transpose();
    }
  }
  return 0.5 * (out + out.transpose());
}

AuxiliaryCheck aux_second_order_check(const Vector& x, const Vector& theta0, const ProblemInstance& problem,
                                      const NetworkOperator& net, double eps_g, double eps_h) {
  AuxiliaryCheck out;
  out.grad_norm = aux_gradient(x, theta0, problem, net).norm();
  out.min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(aux_hessian(x, theta0, problem, net), Eigen::EigenvaluesOnly)
                    .eigenvalues()
                    .minCoeff();
  out.passed = out.grad_norm <= eps_g && out.min_eig >= -eps_h;
  return out;
}

Certificate transfer_certificate(double aux_eps, double aux_gamma, const NetworkOperator& net) {
  if (!(net.lambda_min_plus() > 0.0)) throw InvalidArgument("transfer_certificate: lambda_min_plus must be positive");
  return Certificate{aux_eps, aux_gamma / net.lambda_min_plus()};
}

}  // namespace nlgd
