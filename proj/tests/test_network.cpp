#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "nlgd/network.hpp"

using namespace nlgd;
using nlgd::testing::kron_identity;
using nlgd::testing::vec;

TEST_CASE("path graph on two nodes") {
  const auto net = NetworkOperator::from_graph(path_graph(2));
  Matrix expected(2, 2);
  expected << 1, -1, -1, 1;
  CHECK((net.laplacian() - expected).norm() == 0.0);
  // Characteristic polynomial t^2 - 2t has roots 0 and 2.
  CHECK(net.lambda_min_plus() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(net.lambda_max() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("triangle laplacian and spectrum") {
  const auto net = NetworkOperator::from_graph(complete_graph(3));
  Matrix expected(3, 3);
  expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  CHECK((net.laplacian() - expected).norm() == 0.0);
  // Brute-force oracle: L - 3I = -J has rank one, so 3 is a double eigenvalue.
  const Matrix shifted = expected - 3.0 * Matrix::Identity(3, 3);
  CHECK(Eigen::FullPivLU<Matrix>(shifted).rank() == 1);
  CHECK(net.lambda_min_plus() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(net.lambda_max() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("disconnected graph is rejected with its component count") {
  Graph g(4);
  g.add_edge(0, 1);
  g.add_edge(2, 3);
  CHECK(g.component_count() == 2);
  try {
    (void)NetworkOperator::from_graph(g);
    FAIL("expected DisconnectedGraph");
  } catch (const DisconnectedGraph& e) {
    CHECK(e.components() == 2);
  }
}

TEST_CASE("graph edge validation") {
  Graph g(3);
  CHECK_THROWS_AS(g.add_edge(0, 0), InvalidArgument);
  CHECK_THROWS_AS(g.add_edge(0, 3), InvalidArgument);
  g.add_edge(0, 1);
  CHECK_THROWS_AS(g.add_edge(1, 0), InvalidArgument);
  CHECK(g.has_edge(1, 0));
  CHECK_THROWS(Graph(1));
}

TEST_CASE("matrix_sqrt_psd examples") {
  Matrix l(2, 2);
  l << 1, -1, -1, 1;
  const Matrix s = matrix_sqrt_psd(l);
  CHECK((s - l / std::sqrt(2.0)).norm() < 1e-14);
  CHECK(matrix_sqrt_psd(Matrix::Zero(3, 3)).norm() == 0.0);
  CHECK((matrix_sqrt_psd(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("matrix_sqrt_psd rejects bad input") {
  Matrix neg(2, 2);
  neg << 1, 0, 0, -1;
  CHECK_THROWS_AS(matrix_sqrt_psd(neg), NotPositiveSemidefinite);
  Matrix asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(matrix_sqrt_psd(asym), InvalidArgument);
}

TEST_CASE("watts_strogatz without rewiring") {
  const Graph cycle = watts_strogatz(6, 2, 0.0, 1);
  CHECK(cycle.edge_count() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(cycle.has_edge(i, (i + 1) % 6));
  }
  const Graph k5 = watts_strogatz(5, 4, 0.0, 1);
  CHECK(k5.edge_count() == 10);
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) CHECK(k5.has_edge(i, j));
  }
}

TEST_CASE("watts_strogatz(20, 4, 0.2) is connected with 40 edges") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = watts_strogatz(20, 4, 0.2, seed);
    CHECK(g.node_count() == 20);
    CHECK(g.edge_count() == 40);
    CHECK(g.is_connected());
  }
  // Same seed, same graph.
  CHECK(watts_strogatz(20, 4, 0.2, 3).edges() == watts_strogatz(20, 4, 0.2, 3).edges());
}

TEST_CASE("watts_strogatz preconditions") {
  CHECK_THROWS(watts_strogatz(4, 3, 0.1, 0));
  CHECK_THROWS(watts_strogatz(4, 4, 0.1, 0));
  CHECK_THROWS(watts_strogatz(10, 4, 1.5, 0));
}

TEST_CASE("apply_lifted examples") {
  Matrix l(2, 2);
  l << 1, -1, -1, 1;
  CHECK((apply_lifted(l, vec({1, 0}), 1) - vec({1, -1})).norm() == 0.0);
  const Vector v = vec({1, 2, 3, 4});
  CHECK((apply_lifted(l, v, 2) - vec({-2, -2, 2, 2})).norm() == 0.0);
  CHECK((apply_lifted(l, v, 2) - kron_identity(l, 2) * v).norm() == 0.0);
  CHECK((apply_lifted(Matrix::Identity(2, 2), v, 2) - v).norm() == 0.0);
  CHECK_THROWS_AS(apply_lifted(l, vec({1, 2, 3}), 2), DimensionMismatch);
}

TEST_CASE("apply_lifted matches the explicit Kronecker product") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng.index(5));
    const int n = 1 + static_cast<int>(rng.index(4));
    const Matrix a = Matrix::NullaryExpr(m, m, [&] { return rng.normal(); });
    const Vector v = rng.normal_vector(m * n);
    CHECK((apply_lifted(a, v, n) - kron_identity(a, n) * v).norm() < 1e-12 * (1 + v.norm() * a.norm()));
  }
}

TEST_CASE("lifted operator invariants on random graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng.index(8));
    const int n = 1 + static_cast<int>(rng.index(3));
    const auto net = NetworkOperator::from_graph(nlgd::testing::random_connected_graph(m, rng), n);
    const Vector v = rng.normal_vector(m * n);
    // Row sums vanish after lifting.
    CHECK(block_sum(net.apply(v), n).norm() < 1e-10);
    // sqrt(L) sqrt(L) = L.
    const Vector lv = net.apply(v);
    CHECK((net.apply_sqrt(net.apply_sqrt(v)) - lv).norm() <= 1e-9 * std::max(1.0, lv.norm()));
    // Consensus vectors are in the kernel.
    const Vector w = rng.normal_vector(n);
    Vector consensus(m * n);
    for (int i = 0; i < m; ++i) consensus.segment(i * n, n) = w;
    CHECK(net.apply(consensus).norm() < 1e-10);
    // Range of sqrt(L) lies in the tangent space.
    CHECK(block_sum(net.apply_sqrt(v), n).norm() < 1e-10);
    CHECK(net.lambda_max() == doctest::Approx(net.sqrt_norm_sq()).epsilon(1e-10));
  }
}

TEST_CASE("from_weights accepts a weighted laplacian") {
  Matrix w(3, 3);
  w << 3, -1, -2, -1, 1, 0, -2, 0, 2;
  const auto net = NetworkOperator::from_weights(w);
  CHECK(net.sqrt_residual() < 1e-12);
  Matrix bad = w;
  bad(0, 0) = 4;
  CHECK_THROWS_AS(NetworkOperator::from_weights(bad), InvalidArgument);
  Matrix split = Matrix::Zero(3, 3);
  split << 1, -1, 0, -1, 1, 0, 0, 0, 0;
  CHECK_THROWS_AS(NetworkOperator::from_weights(split), DisconnectedGraph);
}

TEST_CASE("with_agent_dim keeps the spectrum") {
  const auto net = NetworkOperator::from_graph(ring_graph(5));
  const auto lifted = net.with_agent_dim(3);
  CHECK(lifted.agent_dim() == 3);
  CHECK(lifted.lambda_min_plus() == net.lambda_min_plus());
  CHECK(lifted.apply(Vector::Ones(15)).norm() < 1e-12);
}

TEST_CASE("edge list round trip") {
  const Graph g = watts_strogatz(12, 4, 0.3, 5);
  std::stringstream ss;
  write_edge_list(ss, g);
  const Graph back = read_edge_list(ss);
  CHECK(back.node_count() == 12);
  CHECK(back.edges() == g.edges());
}

TEST_CASE("edge list parsing errors") {
  std::stringstream comments("# header\n3\n0 1 # first\n1 2\n");
  CHECK(read_edge_list(comments).edge_count() == 2);
  std::stringstream out_of_range("3\n0 5\n");
  CHECK_THROWS_AS(read_edge_list(out_of_range), Error);
  std::stringstream garbage("3\n0 x\n");
  CHECK_THROWS_AS(read_edge_list(garbage), Error);
  CHECK_THROWS_AS(read_edge_list(std::filesystem::path("/nonexistent/graph.txt")), IoError);
}
