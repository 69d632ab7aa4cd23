#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlgd/network.hpp"
#include "nlgd/objectives.hpp"

namespace nlgd {

enum class Classification { kInfeasible, kNotStationary, kFirstOrderOnly, kSecondOrder };

std::string_view to_string(Classification c);

struct StationarityReport {
  double feasibility_residual = 0.0;
  double projected_grad_norm = 0.0;
  double tangent_min_curvature = 0.0;
  Classification classification = Classification::kNotStationary;
  double epsilon = 0.0;
  double gamma = 0.0;
  double feasibility_tol = 0.0;
};

// "key = value" lines, one per field.
std::string format_report(const StationarityReport& report);

// ||(1_m^T kron I_n) theta - r||.
double feasibility_residual(const Vector& theta, const Vector& demand, int n);

// ||(sqrt(L) kron I_n) grad F(theta)||.
double projected_grad_norm(const Vector& theta, const ProblemInstance& problem, const NetworkOperator& net);

// Orthonormal basis of {d : (1_m^T kron I_n) d = 0}: the Helmert basis of
// 1_m's orthogonal complement, lifted by kron I_n. Size mn x (m-1)n. Cached
// per (m, n).
const Matrix& tangent_basis(int m, int n);

// min over unit d in the tangent space of d^T H d, H = blkdiag(blocks).
double tangent_min_curvature(const std::vector<Matrix>& hessian_blocks, int m, int n);
double tangent_min_curvature(const Vector& theta, const ProblemInstance& problem);

// Tolerance on the constraint residual below which a point counts as feasible.
double feasibility_tolerance(const Vector& demand);

StationarityReport classify(const Vector& theta, const ProblemInstance& problem, const NetworkOperator& net,
                            double epsilon, double gamma);

struct AuxiliaryCheck {
  double grad_norm = 0.0;
  double min_eig = 0.0;
  bool passed = false;
};

// Psi(x) = F(theta0 + sqrt(L_hat) x).
Vector aux_gradient(const Vector& x, const Vector& theta0, const ProblemInstance& problem,
                    const NetworkOperator& net);
Matrix aux_hessian(const Vector& x, const Vector& theta0, const ProblemInstance& problem,
                   const NetworkOperator& net);

// ||grad Psi(x)|| <= eps_g and lambda_min(hess Psi(x)) >= -eps_h.
AuxiliaryCheck aux_second_order_check(const Vector& x, const Vector& theta0, const ProblemInstance& problem,
                                      const NetworkOperator& net, double eps_g, double eps_h);

struct Certificate {
  double epsilon = 0.0;
  double gamma = 0.0;
};

// Maps an auxiliary-space (eps, gamma) certificate at x onto the original
// space point theta0 + sqrt(L_hat) x: (eps, gamma / lambda_min_plus(L)).
Certificate transfer_certificate(double aux_eps, double aux_gamma, const NetworkOperator& net);

}  // namespace nlgd
