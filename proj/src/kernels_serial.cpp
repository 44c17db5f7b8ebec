#include "graphhist/kernels_serial.hpp"

#include <cmath>
#include <stdexcept>

namespace graphhist::serial {

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_shape(a.rank() == 2 && b.rank() == 2 && a.cols() == b.rows(),
              "serial matmul " + a.shape_str() + " * " + b.shape_str());
  const std::int64_t p = a.rows(), q = a.cols(), r = b.cols();
  Tensor c({p, r});
  for (std::int64_t i = 0; i < p; ++i) {
    for (std::int64_t k = 0; k < q; ++k) {
      const double av = a(i, k);
      for (std::int64_t j = 0; j < r; ++j) c(i, j) += av * b(k, j);
    }
  }
  return c;
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  const std::int64_t c_in = x.dim(0), len = x.dim(1);
  const std::int64_t c_out = kernel.dim(0), f = kernel.dim(2);
  if (f > len) throw std::invalid_argument("serial conv1d: filter exceeds input length");
  const std::int64_t out_len = len - f + 1;
  Tensor y({c_out, out_len});
  for (std::int64_t o = 0; o < c_out; ++o) {
    for (std::int64_t t = 0; t < out_len; ++t) {
      double acc = bias[o];
      for (std::int64_t c = 0; c < c_in; ++c) {
        for (std::int64_t dt = 0; dt < f; ++dt) acc += kernel(o, c, dt) * x(c, t + dt);
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
  for (std::int64_t o = 0; o < c_out; ++o) {
    double acc = 0.0;
    for (std::int64_t t = 0; t < out_len; ++t) acc += g(o, t);
    dbias[o] += acc;
  }
  for (std::int64_t o = 0; o < c_out; ++o) {
    for (std::int64_t c = 0; c < c_in; ++c) {
      for (std::int64_t dt = 0; dt < f; ++dt) {
        double acc = 0.0;
        for (std::int64_t t = 0; t < out_len; ++t) acc += g(o, t) * x(c, t + dt);
        dkernel(o, c, dt) += acc;
      }
    }
  }
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (std::int64_t pos = 0; pos < len; ++pos) {
      double acc = 0.0;
      for (std::int64_t o = 0; o < c_out; ++o) {
        const std::int64_t dt_lo = pos - (out_len - 1) > 0 ? pos - (out_len - 1) : 0;
        const std::int64_t dt_hi = pos < f - 1 ? pos : f - 1;
        for (std::int64_t dt = dt_lo; dt <= dt_hi; ++dt) acc += g(o, pos - dt) * kernel(o, c, dt);
      }
      dx(c, pos) += acc;
    }
  }
}

Tensor laplacian_apply(const SparseLaplacian& laplacian, const Tensor& x) {
  check_shape(x.rank() == 2 && x.rows() == laplacian.n, "serial laplacian_apply");
  const std::int64_t f = x.cols();
  Tensor y({laplacian.n, f});
  for (std::int64_t i = 0; i < laplacian.n; ++i) {
    for (std::int64_t p = laplacian.row_ptr[static_cast<std::size_t>(i)];
         p < laplacian.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
      const double v = laplacian.val[static_cast<std::size_t>(p)];
      const std::int64_t c = laplacian.col[static_cast<std::size_t>(p)];
      for (std::int64_t j = 0; j < f; ++j) y(i, j) += v * x(c, j);
    }
  }
  return y;
}

Tensor histogram_forward(const Tensor& c2, const BinLayout& layout) {
  const std::int64_t n = c2.rows(), channels = c2.cols();
  Tensor h({layout.k, channels});
  for (std::int64_t j = 0; j < channels; ++j) {
    for (std::int64_t l = 0; l < n; ++l) {
      h(bin_index(c2(l, j), layout), j) += 1.0;
    }
  }
  return h;
}

Tensor histogram_backward(const Tensor& c2, const Tensor& dh, const BinLayout& layout,
                          double alpha) {
  const std::int64_t n = c2.rows(), channels = c2.cols(), k = layout.k;
  Tensor dc2({n, channels});
  for (std::int64_t l = 0; l < n; ++l) {
    for (std::int64_t j = 0; j < channels; ++j) {
      double num = 0.0, den = 0.0;
      for (std::int64_t i = 0; i < k; ++i) {
        const double d = layout.centers[static_cast<std::size_t>(i)] - c2(l, j);
        const double w = std::exp(-alpha * std::fabs(d));
        den += w;
        if (d > 0.0) {
          num += w * dh(i, j);
        } else if (d < 0.0) {
          num -= w * dh(i, j);
        }
      }
      dc2(l, j) = num / den;
    }
  }
  return dc2;
}

}  // namespace graphhist::serial
