#include "graphhist/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphhist::kernels {

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_shape(a.rank() == 2 && b.rank() == 2 && a.cols() == b.rows(),
              "matmul " + a.shape_str() + " * " + b.shape_str());
  const std::int64_t p = a.rows(), q = a.cols(), r = b.cols();
  Tensor c({p, r});
#pragma omp parallel for schedule(static) if (p * q * r >= 16384)
  for (std::int64_t i = 0; i < p; ++i) {
    double* crow = &c.data[static_cast<std::size_t>(i * r)];
    for (std::int64_t k = 0; k < q; ++k) {
      const double av = a(i, k);
      const double* brow = &b.data[static_cast<std::size_t>(k * r)];
      for (std::int64_t j = 0; j < r; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& g, Tensor& da, Tensor& db) {
  check_shape(g.rank() == 2 && g.rows() == a.rows() && g.cols() == b.cols(),
              "matmul_backward gradient " + g.shape_str());
  check_shape(da.same_shape(a) && db.same_shape(b), "matmul_backward accumulators");
  const std::int64_t p = a.rows(), q = a.cols(), r = b.cols();
  // da += g * b^T
#pragma omp parallel for schedule(static) if (p * q * r >= 16384)
  for (std::int64_t i = 0; i < p; ++i) {
    for (std::int64_t k = 0; k < q; ++k) {
      const double* grow = &g.data[static_cast<std::size_t>(i * r)];
      const double* brow = &b.data[static_cast<std::size_t>(k * r)];
      double acc = 0.0;
      for (std::int64_t j = 0; j < r; ++j) acc += grow[j] * brow[j];
      da(i, k) += acc;
    }
  }
  // db += a^T * g
#pragma omp parallel for schedule(static) if (p * q * r >= 16384)
  for (std::int64_t k = 0; k < q; ++k) {
    double* dbrow = &db.data[static_cast<std::size_t>(k * r)];
    for (std::int64_t i = 0; i < p; ++i) {
      const double av = a(i, k);
      const double* grow = &g.data[static_cast<std::size_t>(i * r)];
      for (std::int64_t j = 0; j < r; ++j) dbrow[j] += av * grow[j];
    }
  }
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& bias) {
  check_shape(bias.rank() == 1 && bias.dim(0) == w.cols(),
              "affine bias " + bias.shape_str() + " vs weight " + w.shape_str());
  Tensor y = matmul(x, w);
  const std::int64_t n = y.rows(), q = y.cols();
#pragma omp parallel for schedule(static) if (n * q >= 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    double* row = &y.data[static_cast<std::size_t>(i * q)];
    for (std::int64_t j = 0; j < q; ++j) row[j] += bias[j];
  }
  return y;
}

void affine_backward(const Tensor& x, const Tensor& w, const Tensor& g, Tensor& dx, Tensor& dw,
                     Tensor& dbias) {
  matmul_backward(x, w, g, dx, dw);
  const std::int64_t n = g.rows(), q = g.cols();
#pragma omp parallel for schedule(static) if (n * q >= 65536)
  for (std::int64_t j = 0; j < q; ++j) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += g(i, j);
    dbias[j] += acc;
  }
}

Tensor tanh_act(const Tensor& x) {
  Tensor y(x.shape);
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& g) {
  check_shape(y.same_shape(g), "tanh_backward");
  Tensor dx(y.shape);
  const std::int64_t n = y.numel();
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) dx[i] = g[i] * (1.0 - y[i] * y[i]);
  return dx;
}

Tensor relu_act(const Tensor& x) {
  Tensor y(x.shape);
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& g) {
  check_shape(x.same_shape(g), "relu_backward");
  Tensor dx(x.shape);
  const std::int64_t n = x.numel();
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? g[i] : 0.0;
  return dx;
}

DropoutResult dropout(const Tensor& x, double rate, bool train_mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate outside [0, 1)");
  DropoutResult r;
  if (!train_mode || rate == 0.0) {
    r.y = x;
    r.mask.assign(static_cast<std::size_t>(x.numel()), 1);
    return r;
  }
  const std::int64_t n = x.numel();
  r.mask.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    r.mask[static_cast<std::size_t>(i)] = rng.uniform() >= rate ? 1 : 0;
  }
  const double scale = 1.0 / (1.0 - rate);
  r.y = Tensor(x.shape);
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    r.y[i] = r.mask[static_cast<std::size_t>(i)] ? x[i] * scale : 0.0;
  }
  return r;
}

Tensor dropout_backward(const std::vector<std::uint8_t>& mask, double rate, const Tensor& g) {
  check_shape(static_cast<std::int64_t>(mask.size()) == g.numel(), "dropout_backward mask");
  Tensor dx(g.shape);
  const double scale = rate == 0.0 ? 1.0 : 1.0 / (1.0 - rate);
  const std::int64_t n = g.numel();
#pragma omp parallel for schedule(static) if (n >= 16384)
  for (std::int64_t i = 0; i < n; ++i) {
    dx[i] = mask[static_cast<std::size_t>(i)] ? g[i] * scale : 0.0;
  }
  return dx;
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  check_shape(x.rank() == 2 && kernel.rank() == 3 && kernel.dim(1) == x.dim(0),
              "conv1d input " + x.shape_str() + " kernel " + kernel.shape_str());
  const std::int64_t c_in = x.dim(0), len = x.dim(1);
  const std::int64_t c_out = kernel.dim(0), f = kernel.dim(2);
  check_shape(bias.rank() == 1 && bias.dim(0) == c_out, "conv1d bias");
  if (f > len) {
    throw std::invalid_argument("conv1d: filter size " + std::to_string(f) +
                                " exceeds input length " + std::to_string(len));
  }
  const std::int64_t out_len = len - f + 1;
  Tensor y({c_out, out_len});
#pragma omp parallel for schedule(static) if (c_out * out_len * c_in * f >= 16384)
  for (std::int64_t o = 0; o < c_out; ++o) {
    for (std::int64_t t = 0; t < out_len; ++t) {
      double acc = bias[o];
      for (std::int64_t c = 0; c < c_in; ++c) {
        const double* xrow = &x.data[static_cast<std::size_t>(c * len + t)];
        const double* krow = &kernel.data[static_cast<std::size_t>((o * c_in + c) * f)];
        for (std::int64_t dt = 0; dt < f; ++dt) acc += krow[dt] * xrow[dt];
      }
      y(o, t) = acc;
    }
  }
  return y;
}

void conv1d_backward(const Tensor& x, const Tensor& kernel, const Tensor& g, Tensor& dx,
                     Tensor& dkernel, Tensor& dbias) {
  const std::int64_t c_in = x.dim(0), len = x.dim(1);
  const std::int64_t c_out = kernel.dim(0), f = kernel.dim(2);
  const std::int64_t out_len = len - f + 1;
  check_shape(g.rank() == 2 && g.dim(0) == c_out && g.dim(1) == out_len,
              "conv1d_backward gradient " + g.shape_str());
  check_shape(dx.same_shape(x) && dkernel.same_shape(kernel) &&
                  dbias.rank() == 1 && dbias.dim(0) == c_out,
              "conv1d_backward accumulators");
#pragma omp parallel for schedule(static) if (c_out * out_len >= 4096)
  for (std::int64_t o = 0; o < c_out; ++o) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < out_len; ++t) acc += g(o, t);
    dbias[o] += acc;
  }
#pragma omp parallel for collapse(2) schedule(static) if (c_out * c_in * f * out_len >= 16384)
  for (std::int64_t o = 0; o < c_out; ++o) {
    for (std::int64_t c = 0; c < c_in; ++c) {
      for (std::int64_t dt = 0; dt < f; ++dt) {
        const double* grow = &g.data[static_cast<std::size_t>(o * out_len)];
        const double* xrow = &x.data[static_cast<std::size_t>(c * len + dt)];
        double acc = 0.0;
        for (std::int64_t t = 0; t < out_len; ++t) acc += grow[t] * xrow[t];
        dkernel(o, c, dt) += acc;
      }
    }
  }
#pragma omp parallel for schedule(static) if (c_in * len * c_out * f >= 16384)
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (std::int64_t pos = 0; pos < len; ++pos) {
      double acc = 0.0;
      for (std::int64_t o = 0; o < c_out; ++o) {
        const double* grow = &g.data[static_cast<std::size_t>(o * out_len)];
        const double* krow = &kernel.data[static_cast<std::size_t>((o * c_in + c) * f)];
        const std::int64_t dt_lo = std::max<std::int64_t>(0, pos - (out_len - 1));
        const std::int64_t dt_hi = std::min<std::int64_t>(f - 1, pos);
        for (std::int64_t dt = dt_lo; dt <= dt_hi; ++dt) acc += grow[pos - dt] * krow[dt];
      }
      dx(c, pos) += acc;
    }
  }
}

Tensor maxpool1d(const Tensor& x) {
  check_shape(x.rank() == 2, "maxpool1d input " + x.shape_str());
  const std::int64_t ch = x.dim(0), len = x.dim(1), out_len = len / 2;
  Tensor y({ch, out_len});
  for (std::int64_t c = 0; c < ch; ++c) {
    for (std::int64_t t = 0; t < out_len; ++t) {
      const double a = x(c, 2 * t), b = x(c, 2 * t + 1);
      y(c, t) = a >= b ? a : b;
    }
  }
  return y;
}

Tensor maxpool1d_backward(const Tensor& x, const Tensor& g) {
  const std::int64_t ch = x.dim(0), len = x.dim(1), out_len = len / 2;
  check_shape(g.rank() == 2 && g.dim(0) == ch && g.dim(1) == out_len, "maxpool1d_backward");
  Tensor dx({ch, len});
  for (std::int64_t c = 0; c < ch; ++c) {
    for (std::int64_t t = 0; t < out_len; ++t) {
      // ties go to the first position
      if (x(c, 2 * t) >= x(c, 2 * t + 1)) {
        dx(c, 2 * t) += g(c, t);
      } else {
        dx(c, 2 * t + 1) += g(c, t);
      }
    }
  }
  return dx;
}

Tensor flatten_concat(const std::vector<const Tensor*>& parts) {
  std::int64_t total = 0;
  for (const Tensor* p : parts) total += p->numel();
  Tensor y({total});
  std::int64_t offset = 0;
  for (const Tensor* p : parts) {
    for (std::int64_t i = 0; i < p->numel(); ++i) y[offset + i] = (*p)[i];
    offset += p->numel();
  }
  return y;
}

std::vector<Tensor> flatten_concat_backward(const std::vector<const Tensor*>& parts,
                                            const Tensor& g) {
  std::int64_t total = 0;
  for (const Tensor* p : parts) total += p->numel();
  check_shape(g.rank() == 1 && g.numel() == total, "flatten_concat_backward");
  std::vector<Tensor> grads;
  grads.reserve(parts.size());
  std::int64_t offset = 0;
  for (const Tensor* p : parts) {
    Tensor dp(p->shape);
    for (std::int64_t i = 0; i < p->numel(); ++i) dp[i] = g[offset + i];
    offset += p->numel();
    grads.push_back(std::move(dp));
  }
  return grads;
}

SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::int64_t true_class) {
  check_shape(logits.rank() == 1, "softmax logits " + logits.shape_str());
  const std::int64_t m = logits.numel();
  if (true_class < 0 || true_class >= m) {
    throw std::out_of_range("softmax_cross_entropy: class " + std::to_string(true_class) +
                            " outside [0, " + std::to_string(m) + ")");
  }
  double max_logit = logits[0];
  for (std::int64_t i = 1; i < m; ++i) max_logit = std::max(max_logit, logits[i]);
  SoftmaxLoss out;
  out.probs = Tensor({m});
  double denom = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    out.probs[i] = std::exp(logits[i] - max_logit);
    denom += out.probs[i];
  }
  for (std::int64_t i = 0; i < m; ++i) out.probs[i] /= denom;
  out.loss = -(logits[true_class] - max_logit - std::log(denom));
  return out;
}

Tensor softmax_cross_entropy_backward(const Tensor& probs, std::int64_t true_class) {
  Tensor g = probs;
  g[true_class] -= 1.0;
  return g;
}

}  // namespace graphhist::kernels
