#pragma once

#include <cstdint>
#include <vector>

#include "graphhist/rng.hpp"
#include "graphhist/tensor.hpp"

namespace graphhist::kernels {

// Dense kernels with explicit forward and backward passes. Parallel loops
// run over independent output elements only, so results are bit-identical
// for any thread count. Gradients are accumulated (+=) into the output
// tensors, which callers must pre-shape.

/// C = A * B with A p x q, B q x r.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Given upstream gradient g (p x r), accumulates da += g * B^T and
/// db += A^T * g.
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& g, Tensor& da, Tensor& db);

/// Y = X * W + broadcast bias.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& bias);

/// Accumulates dx += g * W^T, dw += X^T * g, dbias += column sums of g.
void affine_backward(const Tensor& x, const Tensor& w, const Tensor& g, Tensor& dx, Tensor& dw,
                     Tensor& dbias);

Tensor tanh_act(const Tensor& x);
/// Backward from the saved output y = tanh(x): returns g * (1 - y^2).
Tensor tanh_backward(const Tensor& y, const Tensor& g);

Tensor relu_act(const Tensor& x);
/// Returns g * [x > 0]; the gradient at exactly x = 0 is 0.
Tensor relu_backward(const Tensor& x, const Tensor& g);

struct DropoutResult {
  Tensor y;
  std::vector<std::uint8_t> mask;  // 1 = kept
};

/// Inverted dropout: in train mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); in eval mode the identity.
/// The mask is drawn sequentially from rng so results do not depend on the
/// thread count.
DropoutResult dropout(const Tensor& x, double rate, bool train_mode, Rng& rng);
Tensor dropout_backward(const std::vector<std::uint8_t>& mask, double rate, const Tensor& g);

/// Valid cross-correlation, stride 1, no padding, plus per-output-channel
/// bias. x is C_in x L, kernel is C_out x C_in x f, bias is length C_out;
/// output is C_out x (L - f + 1). Requires f <= L.
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias);
void conv1d_backward(const Tensor& x, const Tensor& kernel, const Tensor& g, Tensor& dx,
                     Tensor& dkernel, Tensor& dbias);

/// Max pooling with window 2 and stride 2; a trailing element is dropped
/// when L is odd. Ties route the gradient to the first position.
Tensor maxpool1d(const Tensor& x);
Tensor maxpool1d_backward(const Tensor& x, const Tensor& g);

/// Row-major flatten of each part, concatenated in argument order.
Tensor flatten_concat(const std::vector<const Tensor*>& parts);
/// Splits g back into the parts' shapes.
std::vector<Tensor> flatten_concat_backward(const std::vector<const Tensor*>& parts,
                                            const Tensor& g);

struct SoftmaxLoss {
  double loss = 0.0;
  Tensor probs;
};

/// Numerically stabilized softmax over a length-m logit vector with
/// loss = -log p_true. Rejects true_class outside [0, m).
SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::int64_t true_class);
/// Returns probs - one_hot(true_class).
Tensor softmax_cross_entropy_backward(const Tensor& probs, std::int64_t true_class);

}  // namespace graphhist::kernels
