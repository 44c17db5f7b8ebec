#include "graphhist/model.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "graphhist/kernels.hpp"

namespace graphhist {

namespace {

using kernels::affine;
using kernels::affine_backward;
using kernels::conv1d;
using kernels::conv1d_backward;
using kernels::dropout;
using kernels::dropout_backward;
using kernels::flatten_concat;
using kernels::flatten_concat_backward;
using kernels::maxpool1d;
using kernels::maxpool1d_backward;
using kernels::relu_act;
using kernels::relu_backward;
using kernels::softmax_cross_entropy;
using kernels::softmax_cross_entropy_backward;
using kernels::tanh_act;
using kernels::tanh_backward;

Tensor transpose(const Tensor& x) {
  Tensor y({x.cols(), x.rows()});
  for (std::int64_t i = 0; i < x.rows(); ++i) {
    for (std::int64_t j = 0; j < x.cols(); ++j) y(j, i) = x(i, j);
  }
  return y;
}

Tensor reshape(Tensor x, std::vector<std::int64_t> shape) {
  if (Tensor::numel_of(shape) != x.numel()) {
    throw std::invalid_argument("reshape: element count mismatch");
  }
  x.shape = std::move(shape);
  return x;
}

Tensor take_rows(const Tensor& x, std::int64_t lo, std::int64_t hi) {
  Tensor y({hi - lo, x.cols()});
  std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(lo * x.cols()),
            x.data.begin() + static_cast<std::ptrdiff_t>(hi * x.cols()),
            y.data.begin());
  return y;
}

void put_rows(Tensor& dst, const Tensor& src, std::int64_t row_offset) {
  std::copy(src.data.begin(), src.data.end(),
            dst.data.begin() + static_cast<std::ptrdiff_t>(row_offset * dst.cols()));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  const std::int64_t n = parts.front().rows();
  std::int64_t width = 0;
  for (const Tensor& p : parts) width += p.cols();
  Tensor y({n, width});
  std::int64_t offset = 0;
  for (const Tensor& p : parts) {
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < p.cols(); ++j) y(i, offset + j) = p(i, j);
    }
    offset += p.cols();
  }
  return y;
}

std::vector<Tensor> split_cols(const Tensor& x, std::int64_t width) {
  std::vector<Tensor> parts;
  for (std::int64_t offset = 0; offset < x.cols(); offset += width) {
    Tensor p({x.rows(), width});
    for (std::int64_t i = 0; i < x.rows(); ++i) {
      for (std::int64_t j = 0; j < width; ++j) p(i, j) = x(i, offset + j);
    }
    parts.push_back(std::move(p));
  }
  return parts;
}

struct EmbedTrace {
  std::vector<Tensor> powers;  // L^s X for s = 0..h
  std::vector<Tensor> z;       // branch outputs, post-tanh
  Tensor zcat, c1, c2;
};

Tensor embed_forward(const Batch& batch, const ModelParams& p, const ModelConfig& cfg,
                     EmbedTrace* trace) {
  check_shape(batch.features.cols() == cfg.in_features,
              "embed: features " + batch.features.shape_str() + " vs config f_in " +
                  std::to_string(cfg.in_features));
  const std::int64_t h = cfg.max_power;
  std::vector<Tensor> powers;
  powers.reserve(static_cast<std::size_t>(h) + 1);
  powers.push_back(batch.features);
  for (std::int64_t s = 1; s <= h; ++s) {
    powers.push_back(laplacian_apply(batch.laplacian, powers.back()));
  }
  std::vector<Tensor> z(static_cast<std::size_t>(h) + 1);
  for (std::int64_t s = 0; s <= h; ++s) {
    z[static_cast<std::size_t>(s)] =
        tanh_act(affine(powers[static_cast<std::size_t>(s)], p.gcn_w[static_cast<std::size_t>(s)],
                        p.gcn_b[static_cast<std::size_t>(s)]));
  }
  Tensor zcat = concat_cols(z);
  Tensor c1 = tanh_act(affine(zcat, p.comb1_w, p.comb1_b));
  Tensor c2 = tanh_act(affine(c1, p.comb2_w, p.comb2_b));
  if (trace) {
    trace->powers = std::move(powers);
    trace->z = std::move(z);
    trace->zcat = std::move(zcat);
    trace->c1 = std::move(c1);
    trace->c2 = c2;
  }
  return c2;
}

void embed_backward(const EmbedTrace& tr, const ModelParams& p, const ModelConfig& cfg,
                    const Tensor& dc2, ModelParams& g) {
  Tensor dpre2 = tanh_backward(tr.c2, dc2);
  Tensor dc1(tr.c1.shape);
  affine_backward(tr.c1, p.comb2_w, dpre2, dc1, g.comb2_w, g.comb2_b);
  Tensor dpre1 = tanh_backward(tr.c1, dc1);
  Tensor dzcat(tr.zcat.shape);
  affine_backward(tr.zcat, p.comb1_w, dpre1, dzcat, g.comb1_w, g.comb1_b);
  std::vector<Tensor> dz = split_cols(dzcat, cfg.embed_width);
  for (std::int64_t s = 0; s <= cfg.max_power; ++s) {
    const auto si = static_cast<std::size_t>(s);
    Tensor dpre = tanh_backward(tr.z[si], dz[si]);
    Tensor dx_unused(tr.powers[si].shape);  // input features are not trained
    affine_backward(tr.powers[si], p.gcn_w[si], dpre, dx_unused, g.gcn_w[si], g.gcn_b[si]);
  }
}

struct HeadTrace {
  Tensor x0;  // C x k histogram, channels-first
  std::array<Tensor, 4> a1, r1, p1, a2, r2;
  Tensor af, rf;
  std::vector<std::uint8_t> mask1, mask2;
  Tensor d1;  // 1 x flatdim, input to fc1
  Tensor afc1, rfc1;
  Tensor d2;  // 1 x 256, input to the output layer
  Tensor probs;
  std::int64_t label = 0;
};

Tensor head_forward(const Tensor& hist, const ModelParams& p, const ModelConfig& cfg,
                    double dropout_rate, bool train_mode, Rng& rng, HeadTrace* trace) {
  check_shape(hist.rank() == 2 && hist.rows() == cfg.bins && hist.cols() == cfg.channels(),
              "lenet_forward histogram " + hist.shape_str());
  Tensor x0 = transpose(hist);
  std::array<Tensor, 4> a1, r1, p1, a2, r2;
  for (std::size_t i = 0; i < kFilterSizes.size(); ++i) {
    a1[i] = conv1d(x0, p.sub[i].conv1_k, p.sub[i].conv1_b);
    r1[i] = relu_act(a1[i]);
    p1[i] = maxpool1d(r1[i]);
    a2[i] = conv1d(p1[i], p.sub[i].conv2_k, p.sub[i].conv2_b);
    r2[i] = relu_act(a2[i]);
  }
  Tensor af = conv1d(x0, p.full_k, p.full_b);
  Tensor rf = relu_act(af);

  Tensor flat = flatten_concat({&r2[0], &r2[1], &r2[2], &r2[3], &rf});
  auto drop1 = dropout(flat, dropout_rate, train_mode, rng);
  Tensor d1 = reshape(std::move(drop1.y), {1, flat.numel()});
  Tensor afc1 = affine(d1, p.fc1_w, p.fc1_b);
  Tensor rfc1 = relu_act(afc1);
  auto drop2 = dropout(rfc1, dropout_rate, train_mode, rng);
  Tensor logits2d = affine(drop2.y, p.out_w, p.out_b);
  Tensor logits = reshape(std::move(logits2d), {cfg.classes});

  if (trace) {
    trace->x0 = std::move(x0);
    trace->a1 = std::move(a1);
    trace->r1 = std::move(r1);
    trace->p1 = std::move(p1);
    trace->a2 = std::move(a2);
    trace->r2 = std::move(r2);
    trace->af = std::move(af);
    trace->rf = std::move(rf);
    trace->mask1 = std::move(drop1.mask);
    trace->mask2 = std::move(drop2.mask);
    trace->d1 = std::move(d1);
    trace->afc1 = std::move(afc1);
    trace->rfc1 = std::move(rfc1);
    trace->d2 = std::move(drop2.y);
  }
  return logits;
}

/// Returns the gradient with respect to the (possibly normalized) histogram.
Tensor head_backward(const HeadTrace& tr, const ModelParams& p, const ModelConfig& cfg,
                     double dropout_rate, const Tensor& dlogits, ModelParams& g) {
  Tensor dlog2d = reshape(dlogits, {1, cfg.classes});
  Tensor dd2(tr.d2.shape);
  affine_backward(tr.d2, p.out_w, dlog2d, dd2, g.out_w, g.out_b);
  Tensor drfc1 = dropout_backward(tr.mask2, dropout_rate, dd2);
  Tensor dafc1 = relu_backward(tr.afc1, drfc1);
  Tensor dd1(tr.d1.shape);
  affine_backward(tr.d1, p.fc1_w, dafc1, dd1, g.fc1_w, g.fc1_b);
  Tensor dflat = dropout_backward(tr.mask1, dropout_rate, reshape(std::move(dd1), {tr.d1.numel()}));

  std::vector<Tensor> dparts =
      flatten_concat_backward({&tr.r2[0], &tr.r2[1], &tr.r2[2], &tr.r2[3], &tr.rf}, dflat);
  Tensor dx0(tr.x0.shape);
  for (std::size_t i = 0; i < kFilterSizes.size(); ++i) {
    Tensor da2 = relu_backward(tr.a2[i], dparts[i]);
    Tensor dp1(tr.p1[i].shape);
    conv1d_backward(tr.p1[i], p.sub[i].conv2_k, da2, dp1, g.sub[i].conv2_k, g.sub[i].conv2_b);
    Tensor dr1 = maxpool1d_backward(tr.r1[i], dp1);
    Tensor da1 = relu_backward(tr.a1[i], dr1);
    conv1d_backward(tr.x0, p.sub[i].conv1_k, da1, dx0, g.sub[i].conv1_k, g.sub[i].conv1_b);
  }
  Tensor daf = relu_backward(tr.af, dparts[4]);
  conv1d_backward(tr.x0, p.full_k, daf, dx0, g.full_k, g.full_b);
  return transpose(dx0);
}

}  // namespace

void ModelConfig::validate() const {
  if (max_power < 0) throw std::invalid_argument("config: h must be nonnegative");
  if (embed_width < 1) throw std::invalid_argument("config: u must be positive");
  if (classes < 2) throw std::invalid_argument("config: need at least 2 classes");
  if (in_features < 1) throw std::invalid_argument("config: f_in must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("config: dropout outside [0, 1)");
  if (alpha <= 0.0) throw std::invalid_argument("config: alpha must be positive");
  if (bins < 2) throw std::invalid_argument("config: k must be at least 2");
  for (std::int64_t f : kFilterSizes) {
    const std::int64_t conv1_len = bins - f + 1;
    const std::int64_t pooled = conv1_len / 2;
    if (conv1_len < 1 || pooled < f) {
      throw std::invalid_argument(
          "config: k = " + std::to_string(bins) +
          " too small for the filter pipeline (filter " + std::to_string(f) +
          " needs floor((k - " + std::to_string(f) + " + 1) / 2) >= " + std::to_string(f) + ")");
    }
  }
}

bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return a.bins == b.bins && a.max_power == b.max_power && a.embed_width == b.embed_width &&
         a.dropout == b.dropout && a.classes == b.classes && a.in_features == b.in_features &&
         a.alpha == b.alpha && a.normalize_hist == b.normalize_hist;
}

std::int64_t lenet_flat_dim(const ModelConfig& cfg) {
  std::int64_t total = 0;
  for (std::int64_t f : kFilterSizes) {
    const std::int64_t conv2_len = (cfg.bins - f + 1) / 2 - f + 1;
    total += kConv2Channels * conv2_len;
  }
  return total + kFullSpanChannels;  // full-span output length is 1
}

ModelParams zero_params(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t c = cfg.channels();
  ModelParams p;
  for (std::int64_t s = 0; s <= cfg.max_power; ++s) {
    p.gcn_w.emplace_back(Tensor({cfg.in_features, cfg.embed_width}));
    p.gcn_b.emplace_back(Tensor({cfg.embed_width}));
  }
  p.comb1_w = Tensor({c, c});
  p.comb1_b = Tensor({c});
  p.comb2_w = Tensor({c, c});
  p.comb2_b = Tensor({c});
  for (std::size_t i = 0; i < kFilterSizes.size(); ++i) {
    const std::int64_t f = kFilterSizes[i];
    p.sub[i].conv1_k = Tensor({kConv1Channels, c, f});
    p.sub[i].conv1_b = Tensor({kConv1Channels});
    p.sub[i].conv2_k = Tensor({kConv2Channels, kConv1Channels, f});
    p.sub[i].conv2_b = Tensor({kConv2Channels});
  }
  p.full_k = Tensor({kFullSpanChannels, c, cfg.bins});
  p.full_b = Tensor({kFullSpanChannels});
  p.fc1_w = Tensor({lenet_flat_dim(cfg), kHiddenUnits});
  p.fc1_b = Tensor({kHiddenUnits});
  p.out_w = Tensor({kHiddenUnits, cfg.classes});
  p.out_b = Tensor({cfg.classes});
  return p;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zero_params(cfg);
  Rng rng(seed);
  auto fill = [&rng](Tensor& t, std::int64_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  };
  for (std::int64_t s = 0; s <= cfg.max_power; ++s) {
    fill(p.gcn_w[static_cast<std::size_t>(s)], cfg.in_features);
  }
  const std::int64_t c = cfg.channels();
  fill(p.comb1_w, c);
  fill(p.comb2_w, c);
  for (std::size_t i = 0; i < kFilterSizes.size(); ++i) {
    fill(p.sub[i].conv1_k, c * kFilterSizes[i]);
    fill(p.sub[i].conv2_k, kConv1Channels * kFilterSizes[i]);
  }
  fill(p.full_k, c * cfg.bins);
  fill(p.fc1_w, lenet_flat_dim(cfg));
  fill(p.out_w, kHiddenUnits);
  return p;  // biases stay zero
}

Tensor gcn_branch(const SparseLaplacian& laplacian, const Tensor& x, int power, const Tensor& w,
                  const Tensor& b) {
  return tanh_act(affine(laplacian_power_apply(laplacian, x, power), w, b));
}

Tensor embed(const Batch& batch, const ModelParams& params, const ModelConfig& cfg) {
  return embed_forward(batch, params, cfg, nullptr);
}

Tensor lenet_forward(const Tensor& hist, const ModelParams& params, const ModelConfig& cfg,
                     double dropout_rate, bool train_mode, Rng& rng) {
  return head_forward(hist, params, cfg, dropout_rate, train_mode, rng, nullptr);
}

ForwardResult forward(const Batch& batch, const ModelParams& params, const ModelConfig& cfg,
                      bool train_mode, Rng& rng, Tape* tape, ModelParams* grads) {
  if (tape && !grads) {
    throw std::invalid_argument("forward: a tape requires a gradient accumulator");
  }
  const BinLayout layout = bin_centers(cfg.bins);
  const std::int64_t num_graphs = batch.num_graphs();

  auto embed_trace = std::make_shared<EmbedTrace>();
  Tensor c2 = embed_forward(batch, params, cfg, tape ? embed_trace.get() : nullptr);

  std::shared_ptr<Tensor> dc2;
  const ModelParams* params_ptr = &params;
  if (tape) {
    dc2 = std::make_shared<Tensor>(c2.shape);
    // recorded first, so it runs last: combination layers and GCN branches
    tape->record("embed", [embed_trace, dc2, params_ptr, cfg, grads] {
      embed_backward(*embed_trace, *params_ptr, cfg, *dc2, *grads);
    });
  }

  ForwardResult result;
  result.probs = Tensor({num_graphs, cfg.classes});
  for (std::int64_t gi = 0; gi < num_graphs; ++gi) {
    const auto [lo, hi] = batch.boundaries[static_cast<std::size_t>(gi)];
    const std::int64_t n_nodes = hi - lo;
    Tensor node_embed = take_rows(c2, lo, hi);
    Tensor hist = histogram_forward(node_embed, layout);
    const double scale = cfg.normalize_hist ? 1.0 / static_cast<double>(n_nodes) : 1.0;
    if (cfg.normalize_hist) {
      for (std::int64_t i = 0; i < hist.numel(); ++i) hist[i] *= scale;
    }

    auto head_trace = std::make_shared<HeadTrace>();
    Tensor logits =
        head_forward(hist, params, cfg, cfg.dropout, train_mode, rng, tape ? head_trace.get() : nullptr);
    const auto sm = softmax_cross_entropy(logits, batch.labels[static_cast<std::size_t>(gi)]);
    result.loss += sm.loss;
    for (std::int64_t j = 0; j < cfg.classes; ++j) result.probs(gi, j) = sm.probs[j];

    if (tape) {
      head_trace->probs = sm.probs;
      head_trace->label = batch.labels[static_cast<std::size_t>(gi)];
      tape->record("head:" + std::to_string(gi),
                   [head_trace, node_embed = std::move(node_embed), dc2, params_ptr, cfg, layout,
                    lo = lo, scale, grads] {
                     Tensor dlogits =
                         softmax_cross_entropy_backward(head_trace->probs, head_trace->label);
                     Tensor dhist = head_backward(*head_trace, *params_ptr, cfg, cfg.dropout,
                                                  dlogits, *grads);
                     if (scale != 1.0) {
                       for (std::int64_t i = 0; i < dhist.numel(); ++i) dhist[i] *= scale;
                     }
                     Tensor dnodes = histogram_backward(node_embed, dhist, layout, cfg.alpha);
                     put_rows(*dc2, dnodes, lo);
                   });
    }
  }
  return result;
}

void backward(Tape& tape) { tape.backward(); }

}  // namespace graphhist
