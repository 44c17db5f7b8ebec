#include <cmath>

#include "doctest.h"
#include "graphhist/gradcheck.hpp"
#include "graphhist/kernels.hpp"
#include "graphhist/kernels_serial.hpp"
#include "graphhist/rng.hpp"
#include "oracles.hpp"

using namespace graphhist;
namespace k = graphhist::kernels;

namespace {

Tensor rand_tensor(std::vector<std::int64_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("matmul identity and scalar product rule") {
  Tensor eye({2, 2});
  eye(0, 0) = eye(1, 1) = 1.0;
  Rng rng(1);
  const Tensor b = rand_tensor({2, 3}, rng);
  CHECK(bit_equal(k::matmul(eye, b), b));

  // 1x1: gradients are (g*b, a*g)
  Tensor a1({1, 1}), b1({1, 1}), g1({1, 1});
  a1[0] = 3.0, b1[0] = 5.0, g1[0] = 2.0;
  Tensor da({1, 1}), db({1, 1});
  k::matmul_backward(a1, b1, g1, da, db);
  CHECK(da[0] == 10.0);
  CHECK(db[0] == 6.0);
}

TEST_CASE("affine broadcasts the bias and sums its gradient over rows") {
  Rng rng(2);
  Tensor x({3, 2});  // zeros
  const Tensor w = rand_tensor({2, 4}, rng);
  const Tensor b = rand_tensor({4}, rng);
  const Tensor y = k::affine(x, w, b);
  for (std::int64_t i = 0; i < 3; ++i) {
    for (std::int64_t j = 0; j < 4; ++j) CHECK(y(i, j) == b[j]);
  }

  Tensor ones({5, 4});
  ones.fill(1.0);
  Tensor dx({5, 2}), dw({2, 4}), dbias({4});
  k::affine_backward(rand_tensor({5, 2}, rng), w, ones, dx, dw, dbias);
  for (std::int64_t j = 0; j < 4; ++j) CHECK(dbias[j] == 5.0);
}

TEST_CASE("activation values at pinned points") {
  Tensor x({1, 2});
  x[0] = 0.0;
  x[1] = -2.0;
  const Tensor t = k::tanh_act(x);
  CHECK(t[0] == 0.0);
  Tensor g({1, 2});
  g.fill(1.0);
  CHECK(k::tanh_backward(t, g)[0] == 1.0);  // multiplier 1 - tanh(0)^2

  const Tensor r = k::relu_act(x);
  CHECK(r[1] == 0.0);
  CHECK(k::relu_backward(x, g)[1] == 0.0);
  // gradient at exactly zero is zero by convention
  CHECK(k::relu_backward(Tensor({1, 1}), Tensor({1, 1}))[0] == 0.0);
}

TEST_CASE("dropout: rate 0 and eval mode are identities") {
  Rng rng(3);
  const Tensor x = rand_tensor({4, 4}, rng);
  Rng r1(7), r2(7);
  CHECK(bit_equal(k::dropout(x, 0.0, true, r1).y, x));
  CHECK(bit_equal(k::dropout(x, 0.9, false, r2).y, x));
  CHECK_THROWS(k::dropout(x, 1.0, true, r1));
  CHECK_THROWS(k::dropout(x, -0.1, true, r1));
}

TEST_CASE("dropout keep fraction over 1e6 elements") {
  Rng data_rng(4);
  Tensor x({1000, 1000});
  x.fill(1.0);
  Rng mask_rng(5);
  const double rate = 0.3;
  const auto out = k::dropout(x, rate, true, mask_rng);
  std::int64_t kept = 0;
  for (std::uint8_t m : out.mask) kept += m;
  const double fraction = static_cast<double>(kept) / static_cast<double>(x.numel());
  CHECK(std::fabs(fraction - (1.0 - rate)) <= 0.005 * (1.0 - rate));
  // survivors are scaled by 1/(1-rate)
  for (std::int64_t i = 0; i < 20; ++i) {
    if (out.mask[static_cast<std::size_t>(i)]) {
      CHECK(out.y[i] == doctest::Approx(1.0 / (1.0 - rate)));
    } else {
      CHECK(out.y[i] == 0.0);
    }
  }
}

TEST_CASE("conv1d hand examples") {
  // single channel, kernel [1], f=1: identity
  Rng rng(6);
  const Tensor x = rand_tensor({1, 5}, rng);
  Tensor k1({1, 1, 1});
  k1[0] = 1.0;
  Tensor b0({1});
  CHECK(bit_equal(k::conv1d(x, k1, b0), x));

  // [1,2,3] * [1,1] -> [3,5]
  Tensor x2({1, 3});
  x2[0] = 1.0;
  x2[1] = 2.0;
  x2[2] = 3.0;
  Tensor k2({1, 1, 2});
  k2[0] = k2[1] = 1.0;
  const Tensor y = k::conv1d(x2, k2, b0);
  CHECK(y.numel() == 2);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 5.0);

  CHECK_THROWS(k::conv1d(x2, Tensor({1, 1, 4}), b0));  // f > L
}

TEST_CASE("maxpool1d window rules") {
  Tensor x({1, 4});
  x[0] = 1.0;
  x[1] = 3.0;
  x[2] = 2.0;
  x[3] = 2.0;
  const Tensor y = k::maxpool1d(x);
  CHECK(y.numel() == 2);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 2.0);

  // odd length drops the trailing element
  Tensor x5({1, 5});
  for (int i = 0; i < 5; ++i) x5[i] = i;
  CHECK(k::maxpool1d(x5).numel() == 2);

  // tie routes the gradient to the first position
  Tensor tie({1, 2});
  tie[0] = tie[1] = 2.0;
  Tensor g({1, 1});
  g[0] = 1.0;
  const Tensor dx = k::maxpool1d_backward(tie, g);
  CHECK(dx[0] == 1.0);
  CHECK(dx[1] == 0.0);
}

TEST_CASE("flatten_concat round-trips shapes") {
  Rng rng(7);
  const Tensor a = rand_tensor({2, 2}, rng);
  const Tensor b = rand_tensor({3}, rng);
  const Tensor flat = k::flatten_concat({&a, &b});
  CHECK(flat.numel() == 7);
  const Tensor single = k::flatten_concat({&a});
  CHECK(single.numel() == 4);
  CHECK(single[1] == a(0, 1));

  const auto parts = k::flatten_concat_backward({&a, &b}, flat);
  CHECK(bit_equal(parts[0], a));
  CHECK(bit_equal(parts[1], b));
}

TEST_CASE("softmax cross entropy pinned values") {
  Tensor logits({2});  // [0, 0]
  const auto out = k::softmax_cross_entropy(logits, 0);
  CHECK(out.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const Tensor g = k::softmax_cross_entropy_backward(out.probs, 0);
  CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));

  // stabilized against large logits
  Tensor big({2});
  big[0] = 1000.0;
  const auto stable = k::softmax_cross_entropy(big, 0);
  CHECK(std::isfinite(stable.loss));
  CHECK(stable.loss == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS(k::softmax_cross_entropy(logits, 2));
  CHECK_THROWS(k::softmax_cross_entropy(logits, -1));
}

TEST_CASE("softmax probabilities sum to 1 and loss is nonnegative") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t m = 2 + rng.uniform_int(8);
    const Tensor logits = rand_tensor({m}, rng, -5.0, 5.0);
    const auto out = k::softmax_cross_entropy(logits, rng.uniform_int(m));
    double sum = 0.0;
    for (std::int64_t i = 0; i < m; ++i) sum += out.probs[i];
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
    CHECK(out.loss >= 0.0);
  }
}

TEST_CASE("kernel finite-difference suite passes") {
  for (const auto& report : gradcheck::run_kernel_suite(99, 5)) {
    INFO(report.op);
    CHECK(report.pass);
  }
}

TEST_CASE("grad_check catches an injected sign error and names the kernel") {
  Rng rng(9);
  const Tensor proj = rand_tensor({3, 3}, rng);
  auto loss = [&proj](const std::vector<Tensor>& in) {
    const Tensor y = k::tanh_act(in[0]);
    double acc = 0.0;
    for (std::int64_t i = 0; i < y.numel(); ++i) acc += y[i] * proj[i];
    return acc;
  };
  auto broken = [&proj](const std::vector<Tensor>& in) {
    Tensor dy = k::tanh_backward(k::tanh_act(in[0]), proj);
    for (std::int64_t i = 0; i < dy.numel(); ++i) dy[i] = -dy[i];  // injected sign error
    return std::vector<Tensor>{dy};
  };
  const auto report = grad_check("tanh", loss, broken, {rand_tensor({3, 3}, rng)});
  CHECK_FALSE(report.pass);
  CHECK(report.op == "tanh");
}

TEST_CASE("three-kernel composition matches finite differences") {
  Rng rng(10);
  const Tensor w1 = rand_tensor({3, 4}, rng);
  const Tensor b1 = rand_tensor({4}, rng);
  const Tensor w2 = rand_tensor({4, 2}, rng);
  const Tensor proj = rand_tensor({2, 2}, rng);
  auto loss = [&](const std::vector<Tensor>& in) {
    const Tensor y = k::matmul(k::tanh_act(k::affine(in[0], w1, b1)), w2);
    double acc = 0.0;
    for (std::int64_t i = 0; i < y.numel(); ++i) acc += y[i] * proj[i];
    return acc;
  };
  auto analytic = [&](const std::vector<Tensor>& in) {
    const Tensor a = k::affine(in[0], w1, b1);
    const Tensor t = k::tanh_act(a);
    Tensor dt(t.shape), dw2(w2.shape);
    k::matmul_backward(t, w2, proj, dt, dw2);
    const Tensor da = k::tanh_backward(t, dt);
    Tensor dx(in[0].shape), dw1(w1.shape), db1(b1.shape);
    k::affine_backward(in[0], w1, da, dx, dw1, db1);
    return std::vector<Tensor>{dx};
  };
  const auto report = grad_check("chain", loss, analytic, {rand_tensor({2, 3}, rng)});
  CHECK(report.pass);
}

TEST_CASE("OpenMP kernels agree bit-for-bit with the serial reference") {
  Rng rng(20);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t p = 1 + rng.uniform_int(40), q = 1 + rng.uniform_int(40),
                       r = 1 + rng.uniform_int(40);
    const Tensor a = rand_tensor({p, q}, rng), b = rand_tensor({q, r}, rng);
    CHECK(bit_equal(k::matmul(a, b), serial::matmul(a, b)));
  }
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t c_in = 1 + rng.uniform_int(5), len = 8 + rng.uniform_int(30);
    const std::int64_t c_out = 1 + rng.uniform_int(8), f = 1 + rng.uniform_int(6);
    const Tensor x = rand_tensor({c_in, len}, rng);
    const Tensor kn = rand_tensor({c_out, c_in, f}, rng);
    const Tensor bias = rand_tensor({c_out}, rng);
    CHECK(bit_equal(k::conv1d(x, kn, bias), serial::conv1d(x, kn, bias)));

    const Tensor g = rand_tensor({c_out, len - f + 1}, rng);
    Tensor dx1(x.shape), dk1(kn.shape), db1(bias.shape);
    Tensor dx2(x.shape), dk2(kn.shape), db2(bias.shape);
    k::conv1d_backward(x, kn, g, dx1, dk1, db1);
    serial::conv1d_backward(x, kn, g, dx2, dk2, db2);
    CHECK(bit_equal(dx1, dx2));
    CHECK(bit_equal(dk1, dk2));
    CHECK(bit_equal(db1, db2));
  }
}
