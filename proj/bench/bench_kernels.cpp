// Times the OpenMP kernels against the serial reference on shapes typical
// of a training step, verifying bit-identical outputs as it goes.
//
//   ./bench_kernels [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "graphhist/dataset.hpp"
#include "graphhist/histbin.hpp"
#include "graphhist/kernels.hpp"
#include "graphhist/kernels_serial.hpp"
#include "graphhist/rng.hpp"

using namespace graphhist;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

volatile double sink = 0.0;

template <class F>
double time_best(F&& fn, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const double t0 = now_s();
    sink = sink + fn();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void row(const std::string& name, double serial_s, double parallel_s, bool exact) {
  std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   %s\n", name.c_str(), serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s, exact ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  std::printf("threads: %d, repeats: %d\n", omp_get_max_threads(), repeats);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  Rng rng(42);

  {  // combination-layer sized matmul
    const Tensor a = random_tensor({640, 384}, rng);
    const Tensor b = random_tensor({384, 384}, rng);
    const Tensor want = serial::matmul(a, b);
    const Tensor got = kernels::matmul(a, b);
    const double ts = time_best([&] { return serial::matmul(a, b)[0]; }, repeats);
    const double tp = time_best([&] { return kernels::matmul(a, b)[0]; }, repeats);
    row("matmul 640x384 * 384x384", ts, tp, bit_equal(want, got));
  }

  {  // classifier-head conv over the bin axis
    const Tensor x = random_tensor({384, 50}, rng);
    const Tensor k = random_tensor({64, 384, 5}, rng);
    const Tensor bias = random_tensor({64}, rng);
    const Tensor want = serial::conv1d(x, k, bias);
    const Tensor got = kernels::conv1d(x, k, bias);
    const double ts = time_best([&] { return serial::conv1d(x, k, bias)[0]; }, repeats);
    const double tp = time_best([&] { return kernels::conv1d(x, k, bias)[0]; }, repeats);
    row("conv1d 384ch L50 -> 64xf5", ts, tp, bit_equal(want, got));

    const Tensor g = random_tensor({64, 46}, rng);
    Tensor dx1(x.shape), dk1(k.shape), db1(bias.shape);
    Tensor dx2(x.shape), dk2(bias.shape), unused(bias.shape);
    dk2 = Tensor(k.shape);
    Tensor db2(bias.shape);
    serial::conv1d_backward(x, k, g, dx1, dk1, db1);
    kernels::conv1d_backward(x, k, g, dx2, dk2, db2);
    const double ts2 = time_best(
        [&] {
          Tensor dx(x.shape), dk(k.shape), db(bias.shape);
          serial::conv1d_backward(x, k, g, dx, dk, db);
          return dx[0];
        },
        repeats);
    const double tp2 = time_best(
        [&] {
          Tensor dx(x.shape), dk(k.shape), db(bias.shape);
          kernels::conv1d_backward(x, k, g, dx, dk, db);
          return dx[0];
        },
        repeats);
    row("conv1d backward", ts2, tp2,
        bit_equal(dx1, dx2) && bit_equal(dk1, dk2) && bit_equal(db1, db2));
  }

  {  // sparse laplacian application on a mid-size batch
    const GraphDataset ds = synth_dataset(SynthKind::er_density_pair, 32, 60, 120, 7);
    std::vector<std::int64_t> idx;
    for (std::int64_t i = 0; i < ds.size(); ++i) idx.push_back(i);
    const Batch batch = make_batch(ds, idx);
    const Tensor x = random_tensor({batch.laplacian.n, 64}, rng);
    const Tensor want = serial::laplacian_apply(batch.laplacian, x);
    const Tensor got = laplacian_apply(batch.laplacian, x);
    const double ts =
        time_best([&] { return serial::laplacian_apply(batch.laplacian, x)[0]; }, repeats);
    const double tp = time_best([&] { return laplacian_apply(batch.laplacian, x)[0]; }, repeats);
    row("laplacian_apply n=" + std::to_string(batch.laplacian.n), ts, tp,
        bit_equal(want, got));
  }

  {  // binning layer, bot-graph sized
    const Tensor c2 = random_tensor({7000, 24}, rng);
    const BinLayout layout = bin_centers(25);
    const Tensor dh = random_tensor({25, 24}, rng);
    const Tensor want_f = serial::histogram_forward(c2, layout);
    const Tensor got_f = histogram_forward(c2, layout);
    const double ts = time_best([&] { return serial::histogram_forward(c2, layout)[0]; }, repeats);
    const double tp = time_best([&] { return histogram_forward(c2, layout)[0]; }, repeats);
    row("histogram_forward 7000x24", ts, tp, bit_equal(want_f, got_f));

    const Tensor want_b = serial::histogram_backward(c2, dh, layout, 20.0);
    const Tensor got_b = histogram_backward(c2, dh, layout, 20.0);
    const double ts2 =
        time_best([&] { return serial::histogram_backward(c2, dh, layout, 20.0)[0]; }, repeats);
    const double tp2 =
        time_best([&] { return histogram_backward(c2, dh, layout, 20.0)[0]; }, repeats);
    row("histogram_backward 7000x24", ts2, tp2, bit_equal(want_b, got_b));
  }

  return 0;
}
