#pragma once

#include <cstdint>
#include <vector>

#include "graphhist/tensor.hpp"

namespace graphhist {

/// Evenly spaced non-overlapping bins covering [-1, 1] exactly:
/// width = 2/k, center_i = -1 + width * (i + 1/2).
struct BinLayout {
  std::int64_t k = 0;
  double width = 0.0;
  std::vector<double> centers;
};

/// Requires k >= 2.
BinLayout bin_centers(std::int64_t k);

/// Bin index of a value in [-1, 1]. Interior bins are half-open [lo, hi);
/// the last bin is closed at +1. Values straying outside [-1, 1] by more
/// than `tolerance` are a contract violation upstream and raise an error.
std::int64_t bin_index(double value, const BinLayout& layout, double tolerance = 1e-12);

/// Counts nodes per bin independently for every channel. c2 is n x C with
/// entries in [-1, 1]; the result is k x C and every column sums to n.
Tensor histogram_forward(const Tensor& c2, const BinLayout& layout);

/// Surrogate gradient through the binning: for node l and channel j, with
/// d_i = center_i - c2(l,j),
///   dc2(l,j) = sum_i e^{-alpha |d_i|} sign(d_i) dh(i,j) / sum_i e^{-alpha |d_i|}
/// with sign(0) = 0. The k x n x C distance tensor is never materialized.
Tensor histogram_backward(const Tensor& c2, const Tensor& dh, const BinLayout& layout,
                          double alpha = 20.0);

}  // namespace graphhist
