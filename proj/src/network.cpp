#include "nlgd/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <string>

#include "nlgd/rng.hpp"

namespace nlgd {

namespace {

constexpr int kMaxWattsStrogatzAttempts = 100;
constexpr double kSqrtClampTol = 1e-12;
constexpr double kKernelTol = 1e-10;

}  // namespace

Graph::Graph(int node_count) : m_(node_count), neighbors_(node_count > 0 ? node_count : 0) {
  if (node_count < 2) throw InvalidArgument("graph needs at least 2 nodes, got " + std::to_string(node_count));
}

Graph::Graph(int node_count, const std::vector<Edge>& edges) : Graph(node_count) {
  for (const auto& [i, j] : edges) add_edge(i, j);
}

void Graph::add_edge(int i, int j) {
  if (i < 0 || j < 0 || i >= m_ || j >= m_) {
    throw InvalidArgument("edge (" + std::to_string(i) + "," + std::to_string(j) +
                          ") out of range for " + std::to_string(m_) + " nodes");
  }
  if (i == j) throw InvalidArgument("self-loop at node " + std::to_string(i));
  if (has_edge(i, j)) {
    throw InvalidArgument("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  edges_.emplace_back(std::min(i, j), std::max(i, j));
  neighbors_[i].push_back(j);
  neighbors_[j].push_back(i);
}

bool Graph::has_edge(int i, int j) const {
  if (i < 0 || i >= m_) return false;
  const auto& nb = neighbors_[i];
  return std::find(nb.begin(), nb.end(), j) != nb.end();
}

std::size_t Graph::component_count() const {
  std::vector<bool> seen(m_, false);
  std::size_t components = 0;
  for (int start = 0; start < m_; ++start) {
    if (seen[start]) continue;
    ++components;
    std::queue<int> frontier;
    frontier.push(start);
    seen[start] = true;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : neighbors_[u]) {
        if (!seen[v]) {
          seen[v] = true;
          frontier.push(v);
        }
      }
    }
  }
  return components;
}

Matrix Graph::adjacency() const {
  Matrix a = Matrix::Zero(m_, m_);
  for (const auto& [i, j] : edges_) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      const auto first = out.find_first_not_of(" \t\r");
      if (first == std::string::npos || out[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line(line)) throw IoError("edge list is empty");
  int m = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> m)) throw IoError("edge list line " + std::to_string(line_no) + ": expected node count");
  }
  Graph graph(m);
  while (next_line(line)) {
    std::istringstream ss(line);
    int i = 0, j = 0;
    if (!(ss >> i >> j)) {
      throw IoError("edge list line " + std::to_string(line_no) + ": expected \"i j\"");
    }
    try {
      graph.add_edge(i, j);
    } catch (const InvalidArgument& e) {
      throw IoError("edge list line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return graph;
}

Graph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());
  try {
    return read_edge_list(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  out << graph.node_count() << '\n';
  for (const auto& [i, j] : graph.edges()) out << i << ' ' << j << '\n';
}

void write_edge_list(const std::filesystem::path& path, const Graph& graph) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list " + path.string());
  write_edge_list(out, graph);
}

Graph path_graph(int m) {
  Graph g(m);
  for (int i = 0; i + 1 < m; ++i) g.add_edge(i, i + 1);
  return g;
}

Graph ring_graph(int m) {
  if (m < 3) throw InvalidArgument("ring graph needs at least 3 nodes");
  Graph g = path_graph(m);
  g.add_edge(m - 1, 0);
  return g;
}

Graph complete_graph(int m) {
  Graph g(m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) g.add_edge(i, j);
  return g;
}

namespace {

Graph watts_strogatz_once(int m, int k, double p, std::uint64_t seed) {
  Rng rng(seed);
  // Adjacency sets for the lattice, then rewire in place.
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
  std::vector<Graph::Edge> order;
  for (int j = 1; j <= k / 2; ++j) {
    for (int u = 0; u < m; ++u) {
      const int v = (u + j) % m;
      adj[u][v] = adj[v][u] = true;
      order.emplace_back(u, v);
    }
  }
  for (auto& [u, v] : order) {
    if (rng.uniform() >= p) continue;
    std::vector<int> candidates;
    for (int w = 0; w < m; ++w) {
      if (w != u && !adj[u][w]) candidates.push_back(w);
    }
    if (candidates.empty()) continue;
    const int w = candidates[rng.index(candidates.size())];
    adj[u][v] = adj[v][u] = false;
    adj[u][w] = adj[w][u] = true;
    v = w;
  }
  Graph g(m);
  for (const auto& [u, v] : order) g.add_edge(u, v);
  return g;
}

}  // namespace

Graph watts_strogatz(int m, int k, double p, std::uint64_t seed) {
  if (k < 2 || k % 2 != 0 || k >= m) {
    throw InvalidArgument("watts_strogatz requires even k with 2 <= k < m");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("rewiring probability must lie in [0, 1]");
  for (int attempt = 0; attempt < kMaxWattsStrogatzAttempts; ++attempt) {
    Graph g = watts_strogatz_once(m, k, p, seed + static_cast<std::uint64_t>(attempt));
    if (g.is_connected()) return g;
  }
  throw Error("watts_strogatz: no connected graph after " + std::to_string(kMaxWattsStrogatzAttempts) +
              " attempts");
}

Matrix matrix_sqrt_psd(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) throw DimensionMismatch("matrix_sqrt_psd: matrix is not square");
  if (a.size() == 0) return a;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("matrix_sqrt_psd: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  Vector values = eig.eigenvalues();
  const double top = std::max(values.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -tol * top) {
      throw NotPositiveSemidefinite("matrix_sqrt_psd: eigenvalue " + std::to_string(values[i]) +
                                    " below -tol*lambda_max");
    }
    // Rounding noise around a zero eigenvalue would otherwise survive as its square root.
    values[i] = values[i] <= tol * top ? 0.0 : std::sqrt(values[i]);
  }
  const Matrix& v = eig.eigenvectors();
  Matrix root = v * values.asDiagonal() * v.transpose();
  return 0.5 * (root + root.transpose());
}

Vector apply_lifted(const Matrix& m, const Vector& v, int n) {
  if (n < 1) throw InvalidArgument("apply_lifted: block size must be positive");
  if (m.rows() != m.cols() || v.size() != m.cols() * n) {
    throw DimensionMismatch("apply_lifted: vector length " + std::to_string(v.size()) + " != " +
                            std::to_string(m.cols()) + " x " + std::to_string(n));
  }
  // Columns of `blocks` are the per-agent blocks v_j.
  Eigen::Map<const Matrix> blocks(v.data(), n, m.cols());
  Vector out(v.size());
  Eigen::Map<Matrix> result(out.data(), n, m.rows());
  result.noalias() = blocks * m.transpose();
  return out;
}

Vector block_sum(const Vector& v, int n) {
  if (n < 1 || v.size() % n != 0) throw DimensionMismatch("block_sum: length not a multiple of block size");
  Eigen::Map<const Matrix> blocks(v.data(), n, v.size() / n);
  return blocks.rowwise().sum();
}

NetworkOperator::NetworkOperator(Matrix laplacian, int agent_dim)
    : laplacian_(std::move(laplacian)), agent_dim_(agent_dim) {
  if (agent_dim < 1) throw InvalidArgument("agent dimension must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian_);
  eigenvalues_ = eig.eigenvalues();
  lambda_max_ = eigenvalues_.maxCoeff();
  sqrt_laplacian_ = matrix_sqrt_psd(laplacian_, kSqrtClampTol);
  const double sqrt_norm = Eigen::SelfAdjointEigenSolver<Matrix>(sqrt_laplacian_, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .cwiseAbs()
                               .maxCoeff();
  sqrt_norm_sq_ = sqrt_norm * sqrt_norm;

  std::size_t zero_count = 0;
  lambda_min_plus_ = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    if (eigenvalues_[i] > kKernelTol * lambda_max_) {
      if (lambda_min_plus_ == 0.0) lambda_min_plus_ = eigenvalues_[i];
    } else {
      ++zero_count;
    }
  }
  if (zero_count != 1) {
    throw DisconnectedGraph(zero_count, "network is disconnected: " + std::to_string(zero_count) +
                                            " components (kernel dimension of the Laplacian)");
  }
}

NetworkOperator NetworkOperator::from_graph(const Graph& graph, int agent_dim) {
  const std::size_t components = graph.component_count();
  if (components != 1) {
    throw DisconnectedGraph(components,
                            "graph is disconnected: " + std::to_string(components) + " components");
  }
  const Matrix a = graph.adjacency();
  Matrix l = -a;
  l.diagonal() = a.rowwise().sum();
  return NetworkOperator(std::move(l), agent_dim);
}

NetworkOperator NetworkOperator::from_weights(const Matrix& weights, int agent_dim) {
  if (weights.rows() != weights.cols() || weights.rows() < 2) {
    throw DimensionMismatch("weight matrix must be square with at least 2 rows");
  }
  const double scale = std::max(1.0, weights.cwiseAbs().maxCoeff());
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("weight matrix is not symmetric");
  }
  if (weights.rowwise().sum().cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("weight matrix rows must sum to zero");
  }
  return NetworkOperator(weights, agent_dim);
}

NetworkOperator NetworkOperator::with_agent_dim(int n) const {
  if (n < 1) throw InvalidArgument("agent dimension must be positive");
  NetworkOperator copy = *this;
  copy.agent_dim_ = n;
  return copy;
}

double NetworkOperator::sqrt_residual() const {
  return (sqrt_laplacian_ * sqrt_laplacian_ - laplacian_).norm();
}

}  // namespace nlgd
