#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ananet/tensor.hpp"

namespace ananet::tensorcore {

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);  // [m×k]·[k×n]
Tensor matvec(const Tensor& w, const Tensor& x);  // [m×n]·[n] -> [m]
Tensor transpose(const Tensor& a);

// Element-wise; operands must have identical dims.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
/// a[m×n] + b[n] broadcast over rows.
Tensor add_row_bias(const Tensor& a, const Tensor& b);
/// x[m×n]·wᵀ + b, with w[p×n] and b[p]; a dense layer applied row-wise.
Tensor linear_rows(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

/// Softmax along the second index, stabilized by per-row max subtraction.
/// Rank-1 input is treated as a single row.
Tensor rowwise_softmax(const Tensor& s);

// Structural
Tensor row(const Tensor& a, std::size_t i);  // -> [n]
Tensor stack_rows(std::span<const Tensor> rows);  // equal-length vectors -> [m×n]
Tensor concat(std::span<const Tensor> parts);  // vectors -> vector
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor reverse_rows(const Tensor& a);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);

// Reductions
Tensor mean_rows(const Tensor& a);  // [m×n] -> [n]
Tensor sum(const Tensor& a);        // -> scalar

inline constexpr double kCosineEpsilon = 1e-8;

/// out[i] = x_i·y_i / (‖x_i‖‖y_i‖ + kCosineEpsilon) for each row pair.
Tensor row_cosine(const Tensor& x, const Tensor& y);
/// Cosine similarity of two vectors as a scalar tensor.
Tensor cosine(const Tensor& u, const Tensor& v);
/// Euclidean (Frobenius, for matrices) norm; gradient at zero is zero.
Tensor norm2(const Tensor& a);

/// -log softmax(logits)[label], computed by log-sum-exp.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

/// Plain (untaped) stabilized softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace ananet::tensorcore
