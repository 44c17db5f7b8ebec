#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphhist::oracles {

Tensor dense_adjacency(const Graph& g) {
  Tensor a({g.n, g.n});
  for (const Edge& e : g.edges) a(e.src, e.dst) = e.weight;
  return a;
}

Tensor dense_normalized_laplacian(const Graph& g) {
  const Tensor a = dense_adjacency(g);
  std::vector<double> deg(static_cast<std::size_t>(g.n), 0.0);
  for (std::int64_t i = 0; i < g.n; ++i) {
    for (std::int64_t j = 0; j < g.n; ++j) deg[static_cast<std::size_t>(i)] += a(i, j);
  }
  Tensor lap({g.n, g.n});
  for (std::int64_t i = 0; i < g.n; ++i) {
    for (std::int64_t j = 0; j < g.n; ++j) {
      const double dij = (i == j ? deg[static_cast<std::size_t>(i)] : 0.0) - a(i, j);
      lap(i, j) = dij / std::sqrt(deg[static_cast<std::size_t>(i)] *
                                  deg[static_cast<std::size_t>(j)]);
    }
  }
  return lap;
}

Tensor dense_from_sparse(const SparseLaplacian& lap) {
  Tensor d({lap.n, lap.n});
  for (std::int64_t i = 0; i < lap.n; ++i) {
    for (std::int64_t p = lap.row_ptr[static_cast<std::size_t>(i)];
         p < lap.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
      d(i, lap.col[static_cast<std::size_t>(p)]) = lap.val[static_cast<std::size_t>(p)];
    }
  }
  return d;
}

Tensor dense_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    for (std::int64_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Tensor dense_power_apply(const Tensor& laplacian, const Tensor& x, int s) {
  Tensor power({laplacian.rows(), laplacian.cols()});
  for (std::int64_t i = 0; i < laplacian.rows(); ++i) power(i, i) = 1.0;
  for (int iter = 0; iter < s; ++iter) power = dense_matmul(power, laplacian);
  return dense_matmul(power, x);
}

std::vector<double> jacobi_eigenvalues(Tensor m) {
  const std::int64_t n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("jacobi: square matrix required");
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    }
    if (off < 1e-26) break;
    for (std::int64_t p = 0; p < n; ++p) {
      for (std::int64_t q = p + 1; q < n; ++q) {
        if (std::fabs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::int64_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::int64_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = m(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

Tensor histogram_backward_literal(const Tensor& c2, const Tensor& dh, const BinLayout& layout,
                                  double alpha) {
  Tensor dc2({c2.rows(), c2.cols()});
  for (std::int64_t l = 0; l < c2.rows(); ++l) {
    for (std::int64_t j = 0; j < c2.cols(); ++j) {
      double num = 0.0, den = 0.0;
      for (std::int64_t i = 0; i < layout.k; ++i) {
        const double d = layout.centers[static_cast<std::size_t>(i)] - c2(l, j);
        const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        num += std::exp(-alpha * std::fabs(d)) * sign * dh(i, j);
        den += std::exp(-alpha * std::fabs(d));
      }
      dc2(l, j) = num / den;
    }
  }
  return dc2;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i])});
    if (denom > 0.0) m = std::max(m, std::fabs(a[i] - b[i]) / denom);
    else if (a[i] != b[i]) m = std::max(m, 1.0);
  }
  return m;
}

}  // namespace graphhist::oracles
