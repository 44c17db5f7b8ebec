#include "graphhist/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace graphhist {

namespace {

void check_index(std::int64_t v, std::int64_t n, const char* what) {
  if (v < 0 || v >= n) {
    throw std::out_of_range(std::string(what) + " index " + std::to_string(v) +
                            " outside [0, " + std::to_string(n) + ")");
  }
}

std::vector<Edge> to_sorted_edges(const std::map<std::pair<std::int64_t, std::int64_t>, double>& adj) {
  std::vector<Edge> edges;
  edges.reserve(adj.size());
  for (const auto& [key, w] : adj) edges.push_back({key.first, key.second, w});
  return edges;
}

}  // namespace

Graph make_graph(std::int64_t n, const std::vector<Edge>& directed_edges) {
  if (n < 0) throw std::invalid_argument("make_graph: negative node count");
  std::map<std::pair<std::int64_t, std::int64_t>, double> adj;
  for (const Edge& e : directed_edges) {
    check_index(e.src, n, "edge source");
    check_index(e.dst, n, "edge target");
    adj[{e.src, e.dst}] = e.weight;
    adj[{e.dst, e.src}] = e.weight;
  }
  Graph g;
  g.n = n;
  g.edges = to_sorted_edges(adj);
  return g;
}

Graph add_self_loops(const Graph& g) {
  std::map<std::pair<std::int64_t, std::int64_t>, double> adj;
  for (const Edge& e : g.edges) adj[{e.src, e.dst}] = e.weight;
  for (std::int64_t i = 0; i < g.n; ++i) adj[{i, i}] = 1.0;
  Graph out;
  out.n = g.n;
  out.edges = to_sorted_edges(adj);
  out.features = g.features;
  return out;
}

std::vector<double> degree_vector(const Graph& g) {
  std::vector<double> d(static_cast<std::size_t>(g.n), 0.0);
  for (const Edge& e : g.edges) d[static_cast<std::size_t>(e.src)] += e.weight;
  return d;
}

SparseLaplacian normalized_laplacian(const Graph& g) {
  if (g.n == 0) throw std::invalid_argument("normalized_laplacian: empty graph");
  const std::vector<double> deg = degree_vector(g);
  std::vector<double> inv_sqrt_deg(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) {
    if (deg[i] <= 0.0) {
      throw std::invalid_argument("normalized_laplacian: node " + std::to_string(i) +
                                  " has nonpositive degree; add self-loops first");
    }
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg[i]);
  }

  // Pattern of A plus the diagonal. Edges are already sorted by (src, dst).
  SparseLaplacian lap;
  lap.n = g.n;
  lap.row_ptr.assign(static_cast<std::size_t>(g.n) + 1, 0);

  std::vector<bool> has_diag(static_cast<std::size_t>(g.n), false);
  for (const Edge& e : g.edges) {
    ++lap.row_ptr[static_cast<std::size_t>(e.src) + 1];
    if (e.src == e.dst) has_diag[static_cast<std::size_t>(e.src)] = true;
  }
  for (std::int64_t i = 0; i < g.n; ++i) {
    if (!has_diag[static_cast<std::size_t>(i)]) ++lap.row_ptr[static_cast<std::size_t>(i) + 1];
  }
  for (std::size_t i = 1; i < lap.row_ptr.size(); ++i) lap.row_ptr[i] += lap.row_ptr[i - 1];

  const std::int64_t nnz = lap.row_ptr.back();
  lap.col.assign(static_cast<std::size_t>(nnz), 0);
  lap.val.assign(static_cast<std::size_t>(nnz), 0.0);

  std::int64_t cursor = 0;
  auto emit = [&lap, &cursor](std::int64_t column, double value) {
    lap.col[static_cast<std::size_t>(cursor)] = column;
    lap.val[static_cast<std::size_t>(cursor)] = value;
    ++cursor;
  };

  std::size_t edge_idx = 0;
  for (std::int64_t i = 0; i < g.n; ++i) {
    const double di = deg[static_cast<std::size_t>(i)];
    bool diag_written = false;
    while (edge_idx < g.edges.size() && g.edges[edge_idx].src == i) {
      const Edge& e = g.edges[edge_idx];
      if (e.dst == i) {
        emit(i, (di - e.weight) / di);  // 1 - A_ii / d_i
        diag_written = true;
      } else {
        if (!diag_written && e.dst > i) {
          emit(i, 1.0);  // node without self-loop: A_ii = 0
          diag_written = true;
        }
        emit(e.dst, -e.weight * inv_sqrt_deg[static_cast<std::size_t>(e.src)] *
                        inv_sqrt_deg[static_cast<std::size_t>(e.dst)]);
      }
      ++edge_idx;
    }
    if (!diag_written) emit(i, 1.0);
  }
  return lap;
}

Tensor laplacian_apply(const SparseLaplacian& laplacian, const Tensor& x) {
  check_shape(x.rank() == 2 && x.rows() == laplacian.n, "laplacian_apply input " + x.shape_str());
  const std::int64_t f = x.cols();
  Tensor y({laplacian.n, f});
#pragma omp parallel for schedule(static) if (laplacian.n >= 64)
  for (std::int64_t i = 0; i < laplacian.n; ++i) {
    double* out_row = &y.data[static_cast<std::size_t>(i * f)];
    for (std::int64_t p = laplacian.row_ptr[static_cast<std::size_t>(i)];
         p < laplacian.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
      const double v = laplacian.val[static_cast<std::size_t>(p)];
      const double* in_row =
          &x.data[static_cast<std::size_t>(laplacian.col[static_cast<std::size_t>(p)] * f)];
      for (std::int64_t j = 0; j < f; ++j) out_row[j] += v * in_row[j];
    }
  }
  return y;
}

Tensor laplacian_power_apply(const SparseLaplacian& laplacian, const Tensor& x, int s) {
  if (s < 0) throw std::invalid_argument("laplacian_power_apply: negative power");
  check_shape(x.rank() == 2 && x.rows() == laplacian.n,
              "laplacian_power_apply input " + x.shape_str());
  Tensor y = x;
  for (int iter = 0; iter < s; ++iter) y = laplacian_apply(laplacian, y);
  return y;
}

Tensor default_features(const Graph& g) {
  const std::vector<double> deg = degree_vector(g);
  Tensor x({g.n, 2});
  for (std::int64_t i = 0; i < g.n; ++i) {
    x(i, 0) = deg[static_cast<std::size_t>(i)];
    x(i, 1) = 1.0;
  }
  return x;
}

}  // namespace graphhist
