#include "fib/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fib {

AdamState::AdamState(AdamConfig cfg, std::span<const Tensor> params) : config(cfg) {
  for (const auto& p : params) {
    m.emplace_back(p.numel(), 0.0);
    v.emplace_back(p.numel(), 0.0);
  }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state tracks " + std::to_string(state.m.size()) +
                                " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad())
      throw std::invalid_argument("adam_step: parameter " + std::to_string(i) +
                                  " has no gradient");
    if (state.m[i].size() != params[i].numel())
      throw ShapeError("adam_step: accumulator size mismatch for parameter " + std::to_string(i));
  }
  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_values();
    const auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

double clip_grad_norm(std::span<Tensor> params, double max_norm) {
  double ss = 0.0;
  for (const auto& p : params)
    for (double g : p.grad()) ss += g * g;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params)
      for (double& g : p.mutable_grad()) g *= s;
  }
  return norm;
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

GradCheckResult grad_check(const std::function<Tensor()>& loss, std::span<Tensor> params,
                           double h) {
  zero_grads(params);
  const Tensor l0 = loss();
  if (!std::isfinite(l0.item())) throw std::runtime_error("grad_check: non-finite loss");
  backward(l0);

  GradCheckResult res;
  const double l_abs = std::abs(l0.item());
  res.fd_resolution = (std::nextafter(l_abs, std::numeric_limits<double>::infinity()) - l_abs) / (2.0 * h);
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto w = params[pi].mutable_values();
    const std::vector<double> analytic(params[pi].grad().begin(), params[pi].grad().end());
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double orig = w[j];
      w[j] = orig + h;
      const double lp = loss().item();
      w[j] = orig - h;
      const double lm = loss().item();
      w[j] = orig;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw std::runtime_error("grad_check: non-finite loss");
      const double num = (lp - lm) / (2.0 * h);
      const double a = analytic[j];
      const double denom = std::max({std::abs(a), std::abs(num), 1e-8});
      const double rel = std::abs(a - num) / denom;
      ++res.entries;
      res.max_abs_error = std::max(res.max_abs_error, std::abs(a - num));
      if (denom >= 1e5 * res.fd_resolution) {
        ++res.resolved_entries;
        res.max_rel_error_resolved = std::max(res.max_rel_error_resolved, rel);
      }
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = pi;
        res.worst_index = j;
        res.analytic = a;
        res.numeric = num;
      }
    }
  }
  return res;
}

}  // namespace fib
