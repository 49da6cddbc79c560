#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "ananet/matrix.hpp"
#include "ananet/tensor.hpp"

namespace ananet::encoders {

using tensorcore::Tensor;

/// Standard gated recurrent cell:
///   z = σ(W_z x + U_z h + b_z),  r = σ(W_r x + U_r h + b_r)
///   h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h),  h' = (1 - z) ⊙ h + z ⊙ h̃
struct GruCellParams {
  Tensor W_z, U_z, b_z;
  Tensor W_r, U_r, b_r;
  Tensor W_h, U_h, b_h;

  std::size_t input_size() const { return W_z.cols(); }
  std::size_t hidden_size() const { return U_z.rows(); }
};

struct EncoderDims {
  std::size_t d = 1024;    // encoded width, even
  std::size_t d_r = 1024;  // region feature width
  std::size_t d_G = 200;   // word-vector width
  std::size_t d_B = 768;   // contextual-vector width
};

struct EncoderParams {
  Tensor w_v;  // d × d_r
  Tensor b_v;  // d
  GruCellParams forward;
  GruCellParams backward;
};

/// Weights uniform in ±1/sqrt(fan_in), biases zero.
EncoderParams init_encoder(const EncoderDims& dims, std::mt19937_64& rng);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) leaf requiring grad.
Tensor init_weight(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

struct ModalState {
  Tensor V;        // K × d
  Tensor T;        // N × d
  Tensor f_image;  // d
  Tensor f_text;   // d
};

/// V = ReLU(region_feats · w_vᵀ + b_v).
Tensor encode_image(const Tensor& region_feats, const EncoderParams& params);

/// Runs one direction of the recurrence over the rows of `inputs` (h_0 = 0)
/// and returns the state after each row, stacked in processing order.
Tensor run_gru(const Tensor& inputs, const GruCellParams& cell);

/// T_j = [h→_j ⊕ h←_j] over x_j = [word_j ⊕ ctx_j]. Sequences longer than
/// `max_tokens` are truncated to their first `max_tokens` rows.
Tensor encode_text(const Tensor& word_vecs, const Tensor& ctx_vecs,
                   const EncoderParams& params, std::size_t max_tokens);

/// Arithmetic mean over rows.
Tensor mean_pool(const Tensor& sequence);

Tensor to_tensor(const Matrix& m);

}  // namespace ananet::encoders
