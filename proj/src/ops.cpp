#include "fib/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fib/kernels.hpp"

namespace fib {

namespace {

std::vector<double>* grad_of(detail::Node& n, std::size_t i) {
  auto& in = *n.inputs[i];
  return in.requires_grad ? &in.grad : nullptr;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::vector<double> out(m * n);
  kernels::gemm_nn(a.values(), b.values(), out, m, k, n, false);
  return Tensor::make({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    const auto& A = self.inputs[0]->value;
    const auto& B = self.inputs[1]->value;
    if (auto* ga = grad_of(self, 0)) kernels::gemm_nt(self.grad, B, *ga, m, n, k, true);
    if (auto* gb = grad_of(self, 1)) kernels::gemm_tn(A, self.grad, *gb, m, k, n, true);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return Tensor::make(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t s = 0; s < 2; ++s)
      if (auto* g = grad_of(self, s))
        for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_bias");
  require_rank(bias, 1, "add_bias");
  const std::size_t m = x.rows(), n = x.cols();
  if (bias.numel() != n)
    throw ShapeError("add_bias: shape mismatch " + shape_str(x.shape()) + " vs " +
                     shape_str(bias.shape()));
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x.values()[r * n + j] + bias.values()[j];
  return Tensor::make({m, n}, std::move(out), {x, bias}, [m, n](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < m * n; ++i) (*g)[i] += self.grad[i];
    if (auto* g = grad_of(self, 1))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < n; ++j) (*g)[j] += self.grad[r * n + j];
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same(a, b, "hadamard");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return Tensor::make(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& A = self.inputs[0]->value;
    const auto& B = self.inputs[1]->value;
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * B[i];
    if (auto* g = grad_of(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * A[i];
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * s;
  return Tensor::make(a.shape(), std::move(out), {a}, [s](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * s;
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rank = parts[0].rank();
  if (rank != 1 && rank != 2) throw ShapeError("concat: rank must be 1 or 2");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rank() != rank || p.rows() != m)
      throw ShapeError("concat: shape mismatch " + shape_str(parts[0].shape()) + " vs " +
                       shape_str(p.shape()));
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::size_t off = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const auto v = parts[pi].values();
    const std::size_t w = widths[pi];
    for (std::size_t r = 0; r < m; ++r)
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>(r * total + off));
    off += w;
  }
  Shape shape = rank == 1 ? Shape{total} : Shape{m, total};
  return Tensor::make(std::move(shape), std::move(out), parts,
                      [m, total, widths](detail::Node& self) {
                        std::size_t off = 0;
                        for (std::size_t pi = 0; pi < widths.size(); ++pi) {
                          const std::size_t w = widths[pi];
                          if (auto* g = grad_of(self, pi))
                            for (std::size_t r = 0; r < m; ++r)
                              for (std::size_t j = 0; j < w; ++j)
                                (*g)[r * w + j] += self.grad[r * total + off + j];
                          off += w;
                        }
                      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  std::vector<double> out(x.values().begin(), x.values().end());
  return Tensor::make(std::move(shape), std::move(out), {x}, [](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (count == 0 || begin + count > n)
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " + shape_str(x.shape()));
  std::vector<double> out(m * count);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < count; ++j) out[r * count + j] = x.values()[r * n + begin + j];
  return Tensor::make({m, count}, std::move(out), {x}, [m, n, begin, count](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < count; ++j) (*g)[r * n + begin + j] += self.grad[r * count + j];
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(x.values()[i]);
  return Tensor::make(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double y = self.value[i];
        (*g)[i] += self.grad[i] * y * (1.0 - y);
      }
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.values()[i]);
  return Tensor::make(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double y = self.value[i];
        (*g)[i] += self.grad[i] * (1.0 - y * y);
      }
  });
}

Tensor softmax(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = x.values().data() + r * n;
    double* o = out.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  return Tensor::make(x.shape(), std::move(out), {x}, [m, n](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t r = 0; r < m; ++r) {
        const double* y = self.value.data() + r * n;
        const double* dy = self.grad.data() + r * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) (*g)[r * n + j] += y[j] * (dy[j] - dot);
      }
  });
}

Tensor pick_rows(const Tensor& table, std::span<const std::int64_t> ids) {
  require_rank(table, 2, "pick_rows");
  const std::size_t v = table.rows(), d = table.cols(), m = ids.size();
  if (m == 0) throw ShapeError("pick_rows: empty id list");
  std::vector<double> out(m * d, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (ids[r] < 0) continue;
    if (static_cast<std::size_t>(ids[r]) >= v)
      throw ShapeError("pick_rows: id " + std::to_string(ids[r]) + " outside table " +
                       shape_str(table.shape()));
    std::copy_n(table.values().begin() + static_cast<std::ptrdiff_t>(ids[r] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  std::vector<std::int64_t> idv(ids.begin(), ids.end());
  return Tensor::make({m, d}, std::move(out), {table}, [idv = std::move(idv), d](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t r = 0; r < idv.size(); ++r) {
        if (idv[r] < 0) continue;
        const auto base = static_cast<std::size_t>(idv[r]) * d;
        for (std::size_t j = 0; j < d; ++j) (*g)[base + j] += self.grad[r * d + j];
      }
  });
}

Tensor broadcast_rows(const Tensor& v, std::size_t n) {
  require_rank(v, 1, "broadcast_rows");
  const std::size_t d = v.numel();
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r)
    std::copy(v.values().begin(), v.values().end(), out.begin() + static_cast<std::ptrdiff_t>(r * d));
  return Tensor::make({n, d}, std::move(out), {v}, [n, d](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) (*g)[j] += self.grad[r * d + j];
  });
}

Tensor where_rows(std::span<const std::uint8_t> mask, const Tensor& a, const Tensor& b) {
  require_same(a, b, "where_rows");
  require_rank(a, 2, "where_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (mask.size() != m)
    throw ShapeError("where_rows: mask length " + std::to_string(mask.size()) + " vs " +
                     shape_str(a.shape()));
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const auto src = mask[r] ? a.values() : b.values();
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  std::vector<std::uint8_t> mv(mask.begin(), mask.end());
  return Tensor::make(a.shape(), std::move(out), {a, b}, [mv = std::move(mv), n](detail::Node& self) {
    auto* ga = grad_of(self, 0);
    auto* gb = grad_of(self, 1);
    for (std::size_t r = 0; r < mv.size(); ++r) {
      auto* g = mv[r] ? ga : gb;
      if (!g) continue;
      for (std::size_t j = 0; j < n; ++j) (*g)[r * n + j] += self.grad[r * n + j];
    }
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return Tensor::make({}, {s}, {x}, [](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (auto& gi : *g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  const auto n = static_cast<double>(x.numel());
  return Tensor::make({}, {s / n}, {x}, [n](detail::Node& self) {
    if (auto* g = grad_of(self, 0))
      for (auto& gi : *g) gi += self.grad[0] / n;
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::int64_t> targets) {
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + shape_str(logits.shape()));
  std::vector<double> probs(m * n);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= n)
      throw ShapeError("softmax_cross_entropy: target " + std::to_string(targets[r]) +
                       " outside " + std::to_string(n) + " classes");
    const double* in = logits.values().data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(in[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) probs[r * n + j] = std::exp(in[j] - lse);
    total += lse - in[targets[r]];
  }
  std::vector<std::int64_t> tv(targets.begin(), targets.end());
  return Tensor::make({}, {total / static_cast<double>(m)}, {logits},
                      [probs = std::move(probs), tv = std::move(tv), m, n](detail::Node& self) {
                        if (auto* g = grad_of(self, 0)) {
                          const double s = self.grad[0] / static_cast<double>(m);
                          for (std::size_t r = 0; r < m; ++r)
                            for (std::size_t j = 0; j < n; ++j) {
                              const double onehot = static_cast<std::int64_t>(j) == tv[r] ? 1.0 : 0.0;
                              (*g)[r * n + j] += s * (probs[r * n + j] - onehot);
                            }
                        }
                      });
}

BatchStats::BatchStats(std::size_t features, double momentum)
    : mean(features, 0.0), variance(features, 1.0), momentum(momentum) {}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, BatchStats& stats, BnMode mode,
                  std::span<const std::uint8_t> row_mask, BnOptions opts) {
  require_rank(x, 2, "batch_norm");
  require_rank(gamma, 1, "batch_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.numel() != n)
    throw ShapeError("batch_norm: shape mismatch " + shape_str(x.shape()) + " vs gamma " +
                     shape_str(gamma.shape()));
  if (!row_mask.empty() && row_mask.size() != m)
    throw ShapeError("batch_norm: mask length " + std::to_string(row_mask.size()) + " vs " +
                     shape_str(x.shape()));
  if (stats.size() != n)
    throw ShapeError("batch_norm: running stats hold " + std::to_string(stats.size()) +
                     " features, input " + shape_str(x.shape()));
  std::size_t active = 0;
  for (std::size_t r = 0; r < m; ++r) active += (row_mask.empty() || row_mask[r]) ? 1 : 0;
  if (active == 0) throw std::invalid_argument("batch_norm: empty batch");

  std::vector<double> mu(n), var(n);
  if (mode == BnMode::batch) {
    kernels::column_moments(x.values(), m, n, row_mask, {mu, var});
    if (opts.update_stats) {
      const double mo = stats.momentum;
      for (std::size_t j = 0; j < n; ++j) {
        stats.mean[j] = (1.0 - mo) * stats.mean[j] + mo * mu[j];
        stats.variance[j] = (1.0 - mo) * stats.variance[j] + mo * var[j];
      }
    }
  } else {
    mu = stats.mean;
    var = stats.variance;
  }

  std::vector<double> inv_std(n);
  for (std::size_t j = 0; j < n; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + opts.eps);

  std::vector<std::uint8_t> mask(row_mask.begin(), row_mask.end());
  if (mask.empty()) mask.assign(m, 1);
  std::vector<double> xhat(m * n, 0.0), out(m * n, 0.0);
  const auto g = gamma.values();
  const auto xv = x.values();
  for (std::size_t r = 0; r < m; ++r) {
    if (!mask[r]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (xv[r * n + j] - mu[j]) * inv_std[j];
      xhat[r * n + j] = h;
      out[r * n + j] = g[j] * h;
    }
  }

  const bool batch = mode == BnMode::batch;
  const auto count = static_cast<double>(active);
  return Tensor::make(
      x.shape(), std::move(out), {x, gamma},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), mask = std::move(mask), m, n, batch,
       count](detail::Node& self) {
        const auto& gam = self.inputs[1]->value;
        if (auto* gg = grad_of(self, 1))
          for (std::size_t r = 0; r < m; ++r) {
            if (!mask[r]) continue;
            for (std::size_t j = 0; j < n; ++j) (*gg)[j] += self.grad[r * n + j] * xhat[r * n + j];
          }
        auto* gx = grad_of(self, 0);
        if (!gx) return;
        if (!batch) {
          for (std::size_t r = 0; r < m; ++r) {
            if (!mask[r]) continue;
            for (std::size_t j = 0; j < n; ++j)
              (*gx)[r * n + j] += self.grad[r * n + j] * gam[j] * inv_std[j];
          }
          return;
        }
        std::vector<double> mean_dy(n, 0.0), mean_dy_xhat(n, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
          if (!mask[r]) continue;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = self.grad[r * n + j] * gam[j];
            mean_dy[j] += d;
            mean_dy_xhat[j] += d * xhat[r * n + j];
          }
        }
        for (std::size_t j = 0; j < n; ++j) {
          mean_dy[j] /= count;
          mean_dy_xhat[j] /= count;
        }
        for (std::size_t r = 0; r < m; ++r) {
          if (!mask[r]) continue;
          for (std::size_t j = 0; j < n; ++j) {
            const double d = self.grad[r * n + j] * gam[j];
            (*gx)[r * n + j] += inv_std[j] * (d - mean_dy[j] - xhat[r * n + j] * mean_dy_xhat[j]);
          }
        }
      });
}

}  // namespace fib
