#pragma once

#include "graphhist/graph.hpp"
#include "graphhist/histbin.hpp"
#include "graphhist/tensor.hpp"

namespace graphhist::serial {

// Plain single-threaded counterparts of the OpenMP kernels. Each one uses
// the same per-element accumulation order as its parallel twin, so the two
// must agree bit-for-bit; tests assert that and the bench target times the
// pair against each other.

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias);
void conv1d_backward(const Tensor& x, const Tensor& kernel, const Tensor& g, Tensor& dx,
                     Tensor& dkernel, Tensor& dbias);

Tensor laplacian_apply(const SparseLaplacian& laplacian, const Tensor& x);

Tensor histogram_forward(const Tensor& c2, const BinLayout& layout);
Tensor histogram_backward(const Tensor& c2, const Tensor& dh, const BinLayout& layout,
                          double alpha);

}  // namespace graphhist::serial
