#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "graphhist/dataset.hpp"
#include "graphhist/histbin.hpp"
#include "graphhist/rng.hpp"
#include "graphhist/tape.hpp"
#include "graphhist/tensor.hpp"

namespace graphhist {

// Classifier head constants: four conv sub-modules over the bin axis, one
// full-span convolution, a 256-unit hidden layer.
inline constexpr std::array<std::int64_t, 4> kFilterSizes{3, 4, 5, 6};
inline constexpr std::int64_t kConv1Channels = 64;
inline constexpr std::int64_t kConv2Channels = 96;
inline constexpr std::int64_t kFullSpanChannels = 96;
inline constexpr std::int64_t kHiddenUnits = 256;

struct ModelConfig {
  std::int64_t bins = 25;         // k
  std::int64_t max_power = 2;     // h
  std::int64_t embed_width = 64;  // u
  double dropout = 0.5;           // d
  std::int64_t classes = 2;       // m
  std::int64_t in_features = 2;   // f_in
  double alpha = 20.0;            // binning sharpness
  bool normalize_hist = false;    // divide counts by node count before the head

  /// Width of the concatenated branch embedding, (h+1)*u.
  std::int64_t channels() const { return (max_power + 1) * embed_width; }

  /// Throws when the configuration cannot produce valid layer shapes.
  void validate() const;
};

bool operator==(const ModelConfig& a, const ModelConfig& b);

struct LenetSubmodule {
  Tensor conv1_k, conv1_b;  // C -> 64, size f
  Tensor conv2_k, conv2_b;  // 64 -> 96, size f
};

/// Every trainable tensor of the network. for_each visits tensors in a fixed
/// order with stable names, which the optimizer and checkpoint format rely on.
struct ModelParams {
  std::vector<Tensor> gcn_w, gcn_b;  // per power s = 0..h
  Tensor comb1_w, comb1_b;
  Tensor comb2_w, comb2_b;
  std::array<LenetSubmodule, 4> sub;  // filter sizes 3, 4, 5, 6
  Tensor full_k, full_b;
  Tensor fc1_w, fc1_b;
  Tensor out_w, out_b;

  template <class Self, class F>
  static void visit(Self& self, F&& fn) {
    for (std::size_t s = 0; s < self.gcn_w.size(); ++s) {
      fn("gcn" + std::to_string(s) + ".w", self.gcn_w[s]);
      fn("gcn" + std::to_string(s) + ".b", self.gcn_b[s]);
    }
    fn("comb1.w", self.comb1_w);
    fn("comb1.b", self.comb1_b);
    fn("comb2.w", self.comb2_w);
    fn("comb2.b", self.comb2_b);
    for (std::size_t i = 0; i < self.sub.size(); ++i) {
      const std::string base = "lenet.f" + std::to_string(kFilterSizes[i]);
      fn(base + ".conv1.k", self.sub[i].conv1_k);
      fn(base + ".conv1.b", self.sub[i].conv1_b);
      fn(base + ".conv2.k", self.sub[i].conv2_k);
      fn(base + ".conv2.b", self.sub[i].conv2_b);
    }
    fn("lenet.full.k", self.full_k);
    fn("lenet.full.b", self.full_b);
    fn("lenet.fc1.w", self.fc1_w);
    fn("lenet.fc1.b", self.fc1_b);
    fn("lenet.out.w", self.out_w);
    fn("lenet.out.b", self.out_b);
  }

  template <class F>
  void for_each(F&& fn) {
    visit(*this, fn);
  }
  template <class F>
  void for_each(F&& fn) const {
    visit(*this, fn);
  }
};

/// Zero tensors shaped for cfg (also the gradient accumulator layout).
ModelParams zero_params(const ModelConfig& cfg);

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero,
/// bit-reproducible for a given seed.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Length of the concatenated flatten fed to fc1.
std::int64_t lenet_flat_dim(const ModelConfig& cfg);

/// Z_s = tanh(L^s X W_s + b_s). s = 0 is a plain fully connected layer.
Tensor gcn_branch(const SparseLaplacian& laplacian, const Tensor& x, int power, const Tensor& w,
                  const Tensor& b);

/// Branch embeddings concatenated and passed through the two combination
/// layers; output is total_nodes x (h+1)u, bounded in (-1, 1).
Tensor embed(const Batch& batch, const ModelParams& params, const ModelConfig& cfg);

/// Classifier head on one k x C histogram; returns the m logits.
Tensor lenet_forward(const Tensor& hist, const ModelParams& params, const ModelConfig& cfg,
                     double dropout_rate, bool train_mode, Rng& rng);

struct ForwardResult {
  double loss = 0.0;  // sum of per-graph cross-entropies
  Tensor probs;       // num_graphs x m
};

/// Full forward pass over a batch. When tape is non-null, backward closures
/// are recorded and tape->backward() (or backward(tape)) accumulates into
/// *grads, which must be zero_params(cfg)-shaped.
ForwardResult forward(const Batch& batch, const ModelParams& params, const ModelConfig& cfg,
                      bool train_mode, Rng& rng, Tape* tape = nullptr,
                      ModelParams* grads = nullptr);

/// Reverse-mode sweep: LeNet heads, then the binning surrogate gradient,
/// then combination layers and GCN branches.
void backward(Tape& tape);

// checkpoint container: config plus every parameter tensor with shape headers
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ModelParams& params);
Checkpoint load_checkpoint(const std::string& path);
/// Load and verify the stored config matches `expect`; mismatch is an error.
Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expect);

}  // namespace graphhist
