#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fib/tensor.hpp"

namespace fib {

// Core differentiable ops. 2-D operands are [rows x cols]; rank-1 operands
// are vectors. Shape mismatches throw ShapeError naming both shapes.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// x[m x n] + bias[n] broadcast over rows; the only broadcasting op.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// Concatenation along columns (rank 2) or along the only axis (rank 1).
Tensor concat(const std::vector<Tensor>& parts);
// Same values under a new shape of equal element count.
Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
// Row-wise softmax over the last axis.
Tensor softmax(const Tensor& x);
// Embedding lookup: rows of table[V x d] selected by ids. A negative id
// yields a zero row that receives no gradient.
Tensor pick_rows(const Tensor& table, std::span<const std::int64_t> ids);
// Repeats a rank-1 vector as n identical rows.
Tensor broadcast_rows(const Tensor& v, std::size_t n);
// Row i taken from a when mask[i] != 0, else from b.
Tensor where_rows(std::span<const std::uint8_t> mask, const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Mean over rows of -log softmax(logits)[row, target[row]], computed with
// log-sum-exp.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::int64_t> targets);

double sigmoid(double x);

enum class BnMode { batch, population };

// Running statistics for one batch-norm site.
struct BatchStats {
  std::vector<double> mean;
  std::vector<double> variance;
  double momentum = 0.1;

  BatchStats() = default;
  explicit BatchStats(std::size_t features, double momentum = 0.1);
  std::size_t size() const { return mean.size(); }
};

struct BnOptions {
  double eps = 1e-5;
  // Batch mode only: fold the batch moments into `stats`.
  bool update_stats = true;
};

// gamma ⊙ (x - mean) / sqrt(var + eps). In batch mode the moments come from
// the rows of x with row_mask set (all rows when the mask is empty) using the
// biased variance; masked-out rows produce zeros. In population mode the
// stored moments are used and stats are left untouched.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, BatchStats& stats, BnMode mode,
                  std::span<const std::uint8_t> row_mask = {}, BnOptions opts = {});

}  // namespace fib
