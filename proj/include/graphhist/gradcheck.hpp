#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "graphhist/tensor.hpp"

namespace graphhist {

struct GradCheckReport {
  std::string op;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Central finite differences, coordinate by coordinate, against analytic
/// gradients. `loss` maps the inputs to a scalar; `analytic` returns one
/// gradient tensor per input. The per-coordinate error is
/// |a - n| / max(1, |a|, |n|) and the check passes iff the maximum over all
/// coordinates is <= tol.
GradCheckReport grad_check(
    const std::string& op,
    const std::function<double(const std::vector<Tensor>&)>& loss,
    const std::function<std::vector<Tensor>(const std::vector<Tensor>&)>& analytic,
    std::vector<Tensor> inputs, double step = 1e-5, double tol = 1e-4);

namespace gradcheck {

/// Finite-difference suite over every dense kernel, `rounds` random shapes
/// each. Deterministic in the seed.
std::vector<GradCheckReport> run_kernel_suite(std::uint64_t seed, int rounds = 20);

/// Production histogram_backward against a literal term-by-term evaluation
/// of the surrogate binning gradient, on `cases` random instances.
GradCheckReport run_histbin_suite(std::uint64_t seed, int cases = 1000);

}  // namespace gradcheck

}  // namespace graphhist
