#include <algorithm>
#include <set>

#include "doctest.h"
#include "graphhist/graph.hpp"
#include "graphhist/rng.hpp"
#include "oracles.hpp"

using namespace graphhist;

namespace {

Graph random_graph(Rng& rng, std::int64_t n, double p) {
  std::vector<Edge> edges;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) edges.push_back({i, j, 1.0});
    }
  }
  return add_self_loops(make_graph(n, edges));
}

std::set<std::tuple<std::int64_t, std::int64_t, double>> edge_set(const Graph& g) {
  std::set<std::tuple<std::int64_t, std::int64_t, double>> s;
  for (const Edge& e : g.edges) s.insert({e.src, e.dst, e.weight});
  return s;
}

}  // namespace

TEST_CASE("add_self_loops inserts unit loops on every node") {
  Graph g = make_graph(2, {{0, 1, 1.0}});
  Graph with = add_self_loops(g);
  CHECK(edge_set(with) == std::set<std::tuple<std::int64_t, std::int64_t, double>>{
                              {0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});

  Graph empty = add_self_loops(make_graph(3, {}));
  CHECK(empty.edges.size() == 3);
  for (const Edge& e : empty.edges) {
    CHECK(e.src == e.dst);
    CHECK(e.weight == 1.0);
  }

  // pre-existing self-loop weight is overwritten with 1
  Graph heavy = add_self_loops(make_graph(1, {{0, 0, 5.0}}));
  CHECK(heavy.edges.size() == 1);
  CHECK(heavy.edges[0].weight == 1.0);
}

TEST_CASE("make_graph rejects out-of-range indices") {
  CHECK_THROWS(make_graph(2, {{0, 2, 1.0}}));
  CHECK_THROWS(make_graph(2, {{-1, 0, 1.0}}));
}

TEST_CASE("degree_vector sums rows including self-loops") {
  Graph g = add_self_loops(make_graph(2, {{0, 1, 1.0}}));
  auto d = degree_vector(g);
  CHECK(d == std::vector<double>{2.0, 2.0});

  Graph isolated = add_self_loops(make_graph(1, {}));
  CHECK(degree_vector(isolated) == std::vector<double>{1.0});

  Graph weighted = add_self_loops(make_graph(2, {{0, 1, 3.0}}));
  CHECK(degree_vector(weighted) == std::vector<double>{4.0, 4.0});
}

TEST_CASE("normalized_laplacian matches closed forms") {
  Graph pair = add_self_loops(make_graph(2, {{0, 1, 1.0}}));
  Tensor lap = oracles::dense_from_sparse(normalized_laplacian(pair));
  CHECK(lap(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lap(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(lap(1, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(lap(1, 1) == doctest::Approx(0.5).epsilon(1e-14));

  Graph single = add_self_loops(make_graph(1, {}));
  Tensor lone = oracles::dense_from_sparse(normalized_laplacian(single));
  CHECK(lone(0, 0) == 0.0);

  CHECK_THROWS(normalized_laplacian(Graph{}));
}

TEST_CASE("normalized_laplacian agrees with the dense oracle entrywise") {
  Graph path = add_self_loops(make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}}));
  const Tensor got = oracles::dense_from_sparse(normalized_laplacian(path));
  const Tensor want = oracles::dense_normalized_laplacian(path);
  CHECK(oracles::max_abs_diff(got, want) <= 1e-12);

  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    Graph g = random_graph(rng, 2 + rng.uniform_int(11), 0.4);
    const Tensor a = oracles::dense_from_sparse(normalized_laplacian(g));
    const Tensor b = oracles::dense_normalized_laplacian(g);
    CHECK(oracles::max_abs_diff(a, b) <= 1e-12);
  }
}

TEST_CASE("normalized_laplacian is bitwise symmetric") {
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    Graph g = random_graph(rng, 2 + rng.uniform_int(11), 0.5);
    const Tensor lap = oracles::dense_from_sparse(normalized_laplacian(g));
    for (std::int64_t i = 0; i < lap.rows(); ++i) {
      for (std::int64_t j = 0; j < lap.cols(); ++j) {
        CHECK(lap(i, j) == lap(j, i));  // exact
      }
    }
  }
}

TEST_CASE("laplacian eigenvalues lie in [0, 2]") {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    Graph g = random_graph(rng, 2 + rng.uniform_int(11), 0.4);
    const auto eig = oracles::jacobi_eigenvalues(oracles::dense_from_sparse(normalized_laplacian(g)));
    CHECK(eig.front() >= -1e-9);
    CHECK(eig.back() <= 2.0 + 1e-9);
  }
}

TEST_CASE("laplacian_power_apply matches the dense power oracle") {
  Graph pair = add_self_loops(make_graph(2, {{0, 1, 1.0}}));
  const SparseLaplacian lap = normalized_laplacian(pair);

  Tensor eye({2, 2});
  eye(0, 0) = eye(1, 1) = 1.0;

  // s = 0 is the identity branch
  const Tensor same = laplacian_power_apply(lap, eye, 0);
  CHECK(oracles::max_abs_diff(same, eye) == 0.0);

  // this laplacian is idempotent: L^2 = L
  const Tensor sq = laplacian_power_apply(lap, eye, 2);
  CHECK(sq(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sq(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));

  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = 2 + rng.uniform_int(11);
    Graph g = random_graph(rng, n, 0.4);
    const SparseLaplacian sl = normalized_laplacian(g);
    const Tensor dense = oracles::dense_from_sparse(sl);
    Tensor x({n, 3});
    for (std::int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    for (int s : {1, 2, 5, 8}) {
      const Tensor got = laplacian_power_apply(sl, x, s);
      const Tensor want = oracles::dense_power_apply(dense, x, s);
      CHECK(oracles::max_rel_diff(got, want) <= 1e-10);
    }
  }
}

TEST_CASE("laplacian powers compose: a then b equals a+b") {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t n = 3 + rng.uniform_int(10);
    Graph g = random_graph(rng, n, 0.5);
    const SparseLaplacian lap = normalized_laplacian(g);
    Tensor x({n, 2});
    for (std::int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    const int a = 1 + static_cast<int>(rng.uniform_int(3));
    const int b = 1 + static_cast<int>(rng.uniform_int(3));
    const Tensor chained = laplacian_power_apply(lap, laplacian_power_apply(lap, x, a), b);
    const Tensor direct = laplacian_power_apply(lap, x, a + b);
    CHECK(oracles::max_rel_diff(chained, direct) <= 1e-10);
  }
}

TEST_CASE("default_features: degree column plus constant column") {
  Graph pair = add_self_loops(make_graph(2, {{0, 1, 1.0}}));
  const Tensor f = default_features(pair);
  CHECK(f.rows() == 2);
  CHECK(f.cols() == 2);
  CHECK(f(0, 0) == 2.0);
  CHECK(f(0, 1) == 1.0);
  CHECK(f(1, 0) == 2.0);
  CHECK(f(1, 1) == 1.0);

  Graph isolated = add_self_loops(make_graph(1, {}));
  const Tensor lone = default_features(isolated);
  CHECK(lone(0, 0) == 1.0);
  CHECK(lone(0, 1) == 1.0);
}

TEST_CASE("minimum degree after self-loops is at least 1") {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = random_graph(rng, 1 + rng.uniform_int(12), 0.3);
    for (double d : degree_vector(g)) CHECK(d >= 1.0);
  }
}
