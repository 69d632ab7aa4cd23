#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "nlgd/types.hpp"

namespace nlgd {

// Undirected simple graph on nodes 0..m-1.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  explicit Graph(int node_count);
  Graph(int node_count, const std::vector<Edge>& edges);

  // Throws on self-loops, duplicates and out-of-range endpoints.
  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;

  int node_count() const noexcept { return m_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  // Stored with first < second, in insertion order.
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  // Breadth-first traversal.
  std::size_t component_count() const;
  bool is_connected() const { return component_count() == 1; }

  Matrix adjacency() const;

 private:
  int m_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

// Edge-list text format: first non-comment line holds m, every further line
// holds "i j" with 0-based node indices. Lines starting with '#' are ignored.
Graph read_edge_list(std::istream& in);
Graph read_edge_list(const std::filesystem::path& path);
void write_edge_list(std::ostream& out, const Graph& graph);
void write_edge_list(const std::filesystem::path& path, const Graph& graph);

Graph path_graph(int m);
Graph ring_graph(int m);
Graph complete_graph(int m);

// Watts-Strogatz small world graph. Ring lattice edges (u, u+j mod m) are
// scanned for j = 1..k/2 and u = 0..m-1; each has its far endpoint rewired
// with probability p to a uniform node that creates neither a self-loop nor a
// duplicate. A disconnected result is regenerated with seed+1, up to 100
// attempts.
Graph watts_strogatz(int m, int k, double p, std::uint64_t seed);

// Symmetric eigendecomposition based square root of a symmetric PSD matrix.
// Eigenvalues within tol*lambda_max of zero are set to zero; anything below
// -tol*lambda_max is rejected.
Matrix matrix_sqrt_psd(const Matrix& a, double tol = 1e-12);

// (M kron I_n) * v without forming the Kronecker product.
Vector apply_lifted(const Matrix& m, const Vector& v, int n);

// 1_m^T kron I_n applied to v: the sum of the m length-n blocks.
Vector block_sum(const Vector& v, int n);

// Laplacian (or any symmetric zero-row-sum PSD weighting) of a connected
// network, together with its PSD square root and spectral summary.
class NetworkOperator {
 public:
  // L = D - A. Throws DisconnectedGraph when the graph has more than one
  // component.
  static NetworkOperator from_graph(const Graph& graph, int agent_dim = 1);
  // User supplied weighting; must be symmetric, PSD, with zero row sums and a
  // one-dimensional kernel.
  static NetworkOperator from_weights(const Matrix& weights, int agent_dim = 1);

  const Matrix& laplacian() const noexcept { return laplacian_; }
  const Matrix& sqrt_laplacian() const noexcept { return sqrt_laplacian_; }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  double lambda_min_plus() const noexcept { return lambda_min_plus_; }
  double lambda_max() const noexcept { return lambda_max_; }
  // ||sqrt(L)||^2, computed from the square root itself.
  double sqrt_norm_sq() const noexcept { return sqrt_norm_sq_; }
  int agent_count() const noexcept { return static_cast<int>(laplacian_.rows()); }
  int agent_dim() const noexcept { return agent_dim_; }
  NetworkOperator with_agent_dim(int n) const;

  Vector apply(const Vector& v) const { return apply_lifted(laplacian_, v, agent_dim_); }
  Vector apply_sqrt(const Vector& v) const { return apply_lifted(sqrt_laplacian_, v, agent_dim_); }

  // ||sqrt(L) sqrt(L) - L||_F
  double sqrt_residual() const;

 private:
  NetworkOperator(Matrix laplacian, int agent_dim);

  Matrix laplacian_;
  Matrix sqrt_laplacian_;
  Vector eigenvalues_;
  double lambda_min_plus_ = 0.0;
  double lambda_max_ = 0.0;
  double sqrt_norm_sq_ = 0.0;
  int agent_dim_ = 1;
};

}  // namespace nlgd
