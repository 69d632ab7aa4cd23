#pragma once

#include <cmath>
#include <vector>

#include "nlgd/network.hpp"
#include "nlgd/objectives.hpp"
#include "nlgd/rng.hpp"

namespace nlgd::testing {

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Matrix kron_identity(const Matrix& m, int n) {
  Matrix out = Matrix::Zero(m.rows() * n, m.cols() * n);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out.block(i * n, j * n, n, n) = m(i, j) * Matrix::Identity(n, n);
    }
  }
  return out;
}

inline NetworkOperator path2(int n = 1) { return NetworkOperator::from_graph(path_graph(2), n); }

// Agents f_i = 1/2 a_i x^2 with demand r.
inline ProblemInstance scalar_quadratics(const std::vector<double>& a, double r) {
  std::vector<ObjectivePtr> objs;
  for (double ai : a) objs.push_back(quadratic_objective(ai, Vector::Zero(1)));
  return ProblemInstance(objs, vec({r}));
}

inline ProblemInstance smart_grid_problem(const std::vector<double>& a, const std::vector<double>& b, int n = 1) {
  std::vector<ObjectivePtr> objs;
  for (std::size_t i = 0; i < a.size(); ++i) objs.push_back(smart_grid_objective(a[i], b[i], n));
  return ProblemInstance(objs, Vector::Zero(n));
}

// Random connected graph: a spanning path plus extra random edges.
inline Graph random_connected_graph(int m, Rng& rng) {
  Graph g = path_graph(m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 2; j < m; ++j) {
      if (rng.uniform() < 0.4) g.add_edge(i, j);
    }
  }
  return g;
}

}  // namespace nlgd::testing
