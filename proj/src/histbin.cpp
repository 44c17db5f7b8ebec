#include "graphhist/histbin.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace graphhist {

BinLayout bin_centers(std::int64_t k) {
  if (k < 2) throw std::invalid_argument("bin_centers: k must be at least 2");
  BinLayout layout;
  layout.k = k;
  layout.width = 2.0 / static_cast<double>(k);
  layout.centers.resize(static_cast<std::size_t>(k));
  for (std::int64_t i = 0; i < k; ++i) {
    layout.centers[static_cast<std::size_t>(i)] =
        -1.0 + layout.width * (static_cast<double>(i) + 0.5);
  }
  return layout;
}

namespace {

std::int64_t bin_index_unchecked(double value, const BinLayout& layout) {
  const std::int64_t idx =
      static_cast<std::int64_t>(std::floor((value + 1.0) / layout.width));
  if (idx < 0) return 0;
  if (idx >= layout.k) return layout.k - 1;  // +1 lands in the closed last bin
  return idx;
}

}  // namespace

std::int64_t bin_index(double value, const BinLayout& layout, double tolerance) {
  if (value < -1.0 - tolerance || value > 1.0 + tolerance || std::isnan(value)) {
    throw std::domain_error("histogram: value " + std::to_string(value) +
                            " outside [-1, 1]; bounded activation contract violated");
  }
  return bin_index_unchecked(value, layout);
}

Tensor histogram_forward(const Tensor& c2, const BinLayout& layout) {
  check_shape(c2.rank() == 2, "histogram_forward input " + c2.shape_str());
  const std::int64_t n = c2.rows(), channels = c2.cols();
  // bounded-activation contract is checked up front; the counting loop
  // below must not throw from inside the parallel region
  for (std::int64_t idx = 0; idx < c2.numel(); ++idx) {
    (void)bin_index(c2[idx], layout);
  }
  Tensor h({layout.k, channels});
  // channels are independent
#pragma omp parallel for schedule(static) if (n * channels >= 8192)
  for (std::int64_t j = 0; j < channels; ++j) {
    for (std::int64_t l = 0; l < n; ++l) {
      h(bin_index_unchecked(c2(l, j), layout), j) += 1.0;
    }
  }
  return h;
}

Tensor histogram_backward(const Tensor& c2, const Tensor& dh, const BinLayout& layout,
                          double alpha) {
  check_shape(c2.rank() == 2 && dh.rank() == 2 && dh.rows() == layout.k &&
                  dh.cols() == c2.cols(),
              "histogram_backward c2 " + c2.shape_str() + " dh " + dh.shape_str());
  const std::int64_t n = c2.rows(), channels = c2.cols(), k = layout.k;
  Tensor dc2({n, channels});
#pragma omp parallel for schedule(static) if (n * channels * k >= 8192)
  for (std::int64_t l = 0; l < n; ++l) {
    for (std::int64_t j = 0; j < channels; ++j) {
      const double value = c2(l, j);
      double num = 0.0, den = 0.0;
      for (std::int64_t i = 0; i < k; ++i) {
        const double d = layout.centers[static_cast<std::size_t>(i)] - value;
        const double w = std::exp(-alpha * std::fabs(d));
        den += w;
        if (d > 0.0) {
          num += w * dh(i, j);
        } else if (d < 0.0) {
          num -= w * dh(i, j);
        }
        // sign(0) = 0: a node sitting exactly on a center gets no pull from it
      }
      dc2(l, j) = num / den;
    }
  }
  return dc2;
}

}  // namespace graphhist
