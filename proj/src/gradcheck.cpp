#include "graphhist/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "graphhist/histbin.hpp"
#include "graphhist/kernels.hpp"
#include "graphhist/rng.hpp"

namespace graphhist {

namespace {

double rel_err(double a, double b) {
  const double denom = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / denom;
}

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double dot_all(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

GradCheckReport grad_check(
    const std::string& op,
    const std::function<double(const std::vector<Tensor>&)>& loss,
    const std::function<std::vector<Tensor>(const std::vector<Tensor>&)>& analytic,
    std::vector<Tensor> inputs, double step, double tol) {
  GradCheckReport report;
  report.op = op;
  const std::vector<Tensor> grads = analytic(inputs);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::int64_t c = 0; c < inputs[t].numel(); ++c) {
      const double saved = inputs[t][c];
      inputs[t][c] = saved + step;
      const double up = loss(inputs);
      inputs[t][c] = saved - step;
      const double down = loss(inputs);
      inputs[t][c] = saved;
      const double numeric = (up - down) / (2.0 * step);
      report.max_rel_err = std::max(report.max_rel_err, rel_err(grads[t][c], numeric));
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

namespace gradcheck {

namespace {

using kernels::conv1d;
using kernels::conv1d_backward;
using kernels::matmul;
using kernels::matmul_backward;

GradCheckReport merge(GradCheckReport acc, const GradCheckReport& r) {
  acc.max_rel_err = std::max(acc.max_rel_err, r.max_rel_err);
  acc.pass = acc.pass && r.pass;
  return acc;
}

GradCheckReport check_matmul(Rng& rng) {
  const std::int64_t p = 1 + rng.uniform_int(5), q = 1 + rng.uniform_int(5),
                     r = 1 + rng.uniform_int(5);
  const Tensor proj = random_tensor({p, r}, rng);
  auto loss = [&proj](const std::vector<Tensor>& in) {
    return dot_all(matmul(in[0], in[1]), proj);
  };
  auto analytic = [&proj](const std::vector<Tensor>& in) {
    Tensor da(in[0].shape), db(in[1].shape);
    matmul_backward(in[0], in[1], proj, da, db);
    return std::vector<Tensor>{da, db};
  };
  return grad_check("matmul", loss, analytic,
                    {random_tensor({p, q}, rng), random_tensor({q, r}, rng)});
}

GradCheckReport check_affine(Rng& rng) {
  const std::int64_t n = 1 + rng.uniform_int(5), p = 1 + rng.uniform_int(5),
                     q = 1 + rng.uniform_int(5);
  const Tensor proj = random_tensor({n, q}, rng);
  auto loss = [&proj](const std::vector<Tensor>& in) {
    return dot_all(kernels::affine(in[0], in[1], in[2]), proj);
  };
  auto analytic = [&proj](const std::vector<Tensor>& in) {
    Tensor dx(in[0].shape), dw(in[1].shape), db(in[2].shape);
    kernels::affine_backward(in[0], in[1], proj, dx, dw, db);
    return std::vector<Tensor>{dx, dw, db};
  };
  return grad_check("affine", loss, analytic,
                    {random_tensor({n, p}, rng), random_tensor({p, q}, rng),
                     random_tensor({q}, rng)});
}

GradCheckReport check_tanh(Rng& rng) {
  const std::int64_t n = 1 + rng.uniform_int(6), m = 1 + rng.uniform_int(6);
  const Tensor proj = random_tensor({n, m}, rng);
  auto loss = [&proj](const std::vector<Tensor>& in) {
    return dot_all(kernels::tanh_act(in[0]), proj);
  };
  auto analytic = [&proj](const std::vector<Tensor>& in) {
    return std::vector<Tensor>{kernels::tanh_backward(kernels::tanh_act(in[0]), proj)};
  };
  return grad_check("tanh", loss, analytic, {random_tensor({n, m}, rng, -2.0, 2.0)});
}

GradCheckReport check_relu(Rng& rng) {
  const std::int64_t n = 1 + rng.uniform_int(6), m = 1 + rng.uniform_int(6);
  const Tensor proj = random_tensor({n, m}, rng);
  // keep samples away from the kink at 0 where finite differences are invalid
  Tensor x({n, m});
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double v = rng.uniform(0.05, 1.0);
    x[i] = rng.uniform() < 0.5 ? v : -v;
  }
  auto loss = [&proj](const std::vector<Tensor>& in) {
    return dot_all(kernels::relu_act(in[0]), proj);
  };
  auto analytic = [&proj](const std::vector<Tensor>& in) {
    return std::vector<Tensor>{kernels::relu_backward(in[0], proj)};
  };
  return grad_check("relu", loss, analytic, {std::move(x)});
}

GradCheckReport check_dropout(Rng& rng) {
  const std::int64_t n = 2 + rng.uniform_int(5), m = 2 + rng.uniform_int(5);
  const double rate = 0.3;
  Tensor x = random_tensor({n, m}, rng);
  Rng mask_rng(rng.next());
  const auto frozen = kernels::dropout(x, rate, true, mask_rng);
  const Tensor proj = random_tensor({n, m}, rng);
  const double scale = 1.0 / (1.0 - rate);
  // forward with the frozen mask re-applied
  auto loss = [&proj, &frozen, scale](const std::vector<Tensor>& in) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < in[0].numel(); ++i) {
      if (frozen.mask[static_cast<std::size_t>(i)]) acc += in[0][i] * scale * proj[i];
    }
    return acc;
  };
  auto analytic = [&proj, &frozen, rate](const std::vector<Tensor>&) {
    return std::vector<Tensor>{kernels::dropout_backward(frozen.mask, rate, proj)};
  };
  return grad_check("dropout", loss, analytic, {std::move(x)});
}

GradCheckReport check_conv1d(Rng& rng) {
  const std::int64_t c_in = 1 + rng.uniform_int(3), len = 4 + rng.uniform_int(7);
  const std::int64_t c_out = 1 + rng.uniform_int(4);
  const std::int64_t f = 1 + rng.uniform_int(std::min<std::int64_t>(len, 4));
  const Tensor proj = random_tensor({c_out, len - f + 1}, rng);
  auto loss = [&proj](const std::vector<Tensor>& in) {
    return dot_all(conv1d(in[0], in[1], in[2]), proj);
  };
  auto analytic = [&proj](const std::vector<Tensor>& in) {
    Tensor dx(in[0].shape), dk(in[1].shape), db(in[2].shape);
    conv1d_backward(in[0], in[1], proj, dx, dk, db);
    return std::vector<Tensor>{dx, dk, db};
  };
  return grad_check("conv1d", loss, analytic,
                    {random_tensor({c_in, len}, rng), random_tensor({c_out, c_in, f}, rng),
                     random_tensor({c_out}, rng)});
}

GradCheckReport check_maxpool1d(Rng& rng) {
  const std::int64_t ch = 1 + rng.uniform_int(4), len = 2 + rng.uniform_int(9);
  Tensor x = random_tensor({ch, len}, rng);
  // push pairs apart so the fd step cannot flip an argmax
  for (std::int64_t c = 0; c < ch; ++c) {
    for (std::int64_t t = 0; t + 1 < len; t += 2) {
      if (std::fabs(x(c, t) - x(c, t + 1)) < 0.05) x(c, t) += 0.1;
    }
  }
  const Tensor proj = random_tensor({ch, len / 2}, rng);
  auto loss = [&proj](const std::vector<Tensor>& in) {
    return dot_all(kernels::maxpool1d(in[0]), proj);
  };
  auto analytic = [&proj](const std::vector<Tensor>& in) {
    return std::vector<Tensor>{kernels::maxpool1d_backward(in[0], proj)};
  };
  return grad_check("maxpool1d", loss, analytic, {std::move(x)});
}

GradCheckReport check_flatten_concat(Rng& rng) {
  const std::int64_t a = 1 + rng.uniform_int(4), b = 1 + rng.uniform_int(4),
                     c = 1 + rng.uniform_int(6);
  Tensor x0 = random_tensor({a, b}, rng);
  Tensor x1 = random_tensor({c}, rng);
  const Tensor proj = random_tensor({a * b + c}, rng);
  auto loss = [&proj](const std::vector<Tensor>& in) {
    return dot_all(kernels::flatten_concat({&in[0], &in[1]}), proj);
  };
  auto analytic = [&proj](const std::vector<Tensor>& in) {
    return kernels::flatten_concat_backward({&in[0], &in[1]}, proj);
  };
  return grad_check("flatten_concat", loss, analytic, {std::move(x0), std::move(x1)});
}

GradCheckReport check_softmax_xent(Rng& rng) {
  const std::int64_t m = 2 + rng.uniform_int(5);
  const std::int64_t cls = rng.uniform_int(m);
  auto loss = [cls](const std::vector<Tensor>& in) {
    return kernels::softmax_cross_entropy(in[0], cls).loss;
  };
  auto analytic = [cls](const std::vector<Tensor>& in) {
    const auto out = kernels::softmax_cross_entropy(in[0], cls);
    return std::vector<Tensor>{kernels::softmax_cross_entropy_backward(out.probs, cls)};
  };
  return grad_check("softmax_cross_entropy", loss, analytic,
                    {random_tensor({m}, rng, -2.0, 2.0)});
}

}  // namespace

std::vector<GradCheckReport> run_kernel_suite(std::uint64_t seed, int rounds) {
  using Check = GradCheckReport (*)(Rng&);
  const std::vector<std::pair<std::string, Check>> checks = {
      {"matmul", &check_matmul},
      {"affine", &check_affine},
      {"tanh", &check_tanh},
      {"relu", &check_relu},
      {"dropout", &check_dropout},
      {"conv1d", &check_conv1d},
      {"maxpool1d", &check_maxpool1d},
      {"flatten_concat", &check_flatten_concat},
      {"softmax_cross_entropy", &check_softmax_xent},
  };
  std::vector<GradCheckReport> reports;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Rng rng(Rng::derive(seed, i));
    GradCheckReport acc{checks[i].first, 0.0, true};
    for (int round = 0; round < rounds; ++round) acc = merge(acc, checks[i].second(rng));
    reports.push_back(acc);
  }
  return reports;
}

GradCheckReport run_histbin_suite(std::uint64_t seed, int cases) {
  Rng rng(seed);
  GradCheckReport report{"histogram_backward", 0.0, true};
  const std::int64_t bin_choices[3] = {2, 10, 25};
  for (int c = 0; c < cases; ++c) {
    const std::int64_t n = 1 + rng.uniform_int(50);
    const std::int64_t channels = 1 + rng.uniform_int(16);
    const BinLayout layout = bin_centers(bin_choices[rng.uniform_int(3)]);
    const double alpha = 20.0;
    const Tensor c2 = random_tensor({n, channels}, rng);
    const Tensor dh = random_tensor({layout.k, channels}, rng);
    const Tensor got = histogram_backward(c2, dh, layout, alpha);
    // literal term-by-term evaluation of the surrogate gradient
    for (std::int64_t l = 0; l < n; ++l) {
      for (std::int64_t j = 0; j < channels; ++j) {
        double num = 0.0, den = 0.0;
        for (std::int64_t i = 0; i < layout.k; ++i) {
          const double d = layout.centers[static_cast<std::size_t>(i)] - c2(l, j);
          const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
          num += std::exp(-alpha * std::fabs(d)) * sign * dh(i, j);
          den += std::exp(-alpha * std::fabs(d));
        }
        const double want = num / den;
        const double denom = std::max(std::fabs(want), std::fabs(got(l, j)));
        const double err = denom == 0.0 ? 0.0 : std::fabs(want - got(l, j)) / denom;
        report.max_rel_err = std::max(report.max_rel_err, err);
      }
    }
  }
  report.pass = report.max_rel_err <= 1e-12;
  return report;
}

}  // namespace gradcheck

}  // namespace graphhist
