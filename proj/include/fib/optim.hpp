#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fib/tensor.hpp"

namespace fib {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<const Tensor> params);
};

// Bias-corrected Adam update applied in place. Grads are read, not cleared.
void adam_step(std::span<Tensor> params, AdamState& state);

// Scales all grads so their joint L2 norm is at most max_norm. Returns the
// norm before scaling.
double clip_grad_norm(std::span<Tensor> params, double max_norm);

void zero_grads(std::span<Tensor> params);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries = 0;
  // Smallest nonzero difference quotient: one ulp of the loss over 2h.
  double fd_resolution = 0.0;
  double max_abs_error = 0.0;
  // Worst relative error among entries with max(|a|, |n|) >= 1e5 *
  // fd_resolution, where rounding alone stays below 1e-5 relative.
  double max_rel_error_resolved = 0.0;
  std::size_t resolved_entries = 0;
};

// Compares reverse-mode gradients of `loss` against central differences
// (L(θ+h) - L(θ-h)) / 2h for every entry of every parameter. The relative
// error of one entry is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const std::function<Tensor()>& loss, std::span<Tensor> params,
                           double h = 1e-5);

}  // namespace fib
