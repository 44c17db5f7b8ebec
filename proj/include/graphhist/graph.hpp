#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "graphhist/tensor.hpp"

namespace graphhist {

struct Edge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  double weight = 1.0;
};

/// Undirected weighted graph. Edges are stored as a symmetric closure:
/// an entry (i,j,w) always has a mirror (j,i,w), sorted by (src,dst) with at
/// most one entry per ordered pair.
struct Graph {
  std::int64_t n = 0;
  std::vector<Edge> edges;
  std::optional<Tensor> features;  // n x f when present
};

/// Build a graph from directed edge pairs. Pairs are symmetrized; when the
/// same pair appears more than once the last weight wins. Indices outside
/// [0, n) are rejected.
Graph make_graph(std::int64_t n, const std::vector<Edge>& directed_edges);

/// Returns a copy with A_{i,i} = 1 for every node. Pre-existing self-loop
/// weights are overwritten with 1.
Graph add_self_loops(const Graph& g);

/// Weighted row sums d_i = sum_j A_{i,j}, including self-loops.
std::vector<double> degree_vector(const Graph& g);

/// Symmetric normalized Laplacian in CSR form.
struct SparseLaplacian {
  std::int64_t n = 0;
  std::vector<std::int64_t> row_ptr;  // length n+1
  std::vector<std::int64_t> col;
  std::vector<double> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }
};

/// L = D^{-1/2} (D - A) D^{-1/2}. Requires every degree positive (guaranteed
/// after add_self_loops). Rejects n = 0.
SparseLaplacian normalized_laplacian(const Graph& g);

/// One sparse-dense product Y = L * X.
Tensor laplacian_apply(const SparseLaplacian& laplacian, const Tensor& x);

/// Y = L^s * X computed as s successive sparse-dense products; L^s is never
/// materialized. s = 0 returns X unchanged.
Tensor laplacian_power_apply(const SparseLaplacian& laplacian, const Tensor& x, int s);

/// Fallback node features when the dataset carries none: column 0 is the
/// degree (self-loop included), column 1 is constant 1.
Tensor default_features(const Graph& g);

}  // namespace graphhist
