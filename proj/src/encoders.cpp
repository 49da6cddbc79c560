#include "ananet/encoders.hpp"

#include <cmath>

#include "ananet/error.hpp"
#include "ananet/ops.hpp"

namespace ananet::encoders {

namespace tc = tensorcore;

namespace {

GruCellParams init_cell(std::size_t input, std::size_t hidden, std::mt19937_64& rng) {
  auto bias = [hidden] { return Tensor::zeros({hidden}, true); };
  GruCellParams c;
  c.W_z = init_weight(hidden, input, rng);
  c.U_z = init_weight(hidden, hidden, rng);
  c.b_z = bias();
  c.W_r = init_weight(hidden, input, rng);
  c.U_r = init_weight(hidden, hidden, rng);
  c.b_r = bias();
  c.W_h = init_weight(hidden, input, rng);
  c.U_h = init_weight(hidden, hidden, rng);
  c.b_h = bias();
  return c;
}

}  // namespace

Tensor init_weight(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return Tensor::matrix(rows, cols, std::move(v), true);
}

EncoderParams init_encoder(const EncoderDims& dims, std::mt19937_64& rng) {
  if (dims.d < 2 || dims.d % 2 != 0) {
    throw ConfigError("encoded width d must be even and >= 2, got " +
                      std::to_string(dims.d));
  }
  EncoderParams p;
  p.w_v = init_weight(dims.d, dims.d_r, rng);
  p.b_v = Tensor::zeros({dims.d}, true);
  p.forward = init_cell(dims.d_G + dims.d_B, dims.d / 2, rng);
  p.backward = init_cell(dims.d_G + dims.d_B, dims.d / 2, rng);
  return p;
}

Tensor encode_image(const Tensor& region_feats, const EncoderParams& params) {
  if (region_feats.rank() != 2 || region_feats.cols() != params.w_v.cols()) {
    throw ShapeError("encode_image: region features " + region_feats.shape_string() +
                     " do not match w_v " + params.w_v.shape_string());
  }
  return tc::relu(tc::linear_rows(region_feats, params.w_v, params.b_v));
}

Tensor run_gru(const Tensor& inputs, const GruCellParams& cell) {
  const std::size_t steps = inputs.rows();
  const Tensor xz = tc::linear_rows(inputs, cell.W_z, cell.b_z);
  const Tensor xr = tc::linear_rows(inputs, cell.W_r, cell.b_r);
  const Tensor xh = tc::linear_rows(inputs, cell.W_h, cell.b_h);

  std::vector<Tensor> states;
  states.reserve(steps);
  Tensor h = Tensor::zeros({cell.hidden_size()});
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor z = tc::sigmoid(tc::add(tc::row(xz, t), tc::matvec(cell.U_z, h)));
    Tensor r = tc::sigmoid(tc::add(tc::row(xr, t), tc::matvec(cell.U_r, h)));
    Tensor candidate =
        tc::tanh(tc::add(tc::row(xh, t), tc::matvec(cell.U_h, tc::mul(r, h))));
    h = tc::add(h, tc::mul(z, tc::sub(candidate, h)));
    states.push_back(h);
  }
  return tc::stack_rows(states);
}

Tensor encode_text(const Tensor& word_vecs, const Tensor& ctx_vecs,
                   const EncoderParams& params, std::size_t max_tokens) {
  if (word_vecs.rank() != 2 || ctx_vecs.rank() != 2 ||
      word_vecs.rows() != ctx_vecs.rows()) {
    throw ShapeError("encode_text: word vectors " + word_vecs.shape_string() +
                     " and context vectors " + ctx_vecs.shape_string() +
                     " must have the same number of tokens");
  }
  if (max_tokens == 0) throw ShapeError("encode_text: max_tokens must be >= 1");
  Tensor x = tc::concat_cols(word_vecs, ctx_vecs);
  if (x.cols() != params.forward.input_size()) {
    throw ShapeError("encode_text: token width " + std::to_string(x.cols()) +
                     " does not match recurrent input size " +
                     std::to_string(params.forward.input_size()));
  }
  if (x.rows() > max_tokens) x = tc::slice_rows(x, 0, max_tokens);

  Tensor forward_states = run_gru(x, params.forward);
  Tensor backward_states = tc::reverse_rows(run_gru(tc::reverse_rows(x), params.backward));
  return tc::concat_cols(forward_states, backward_states);
}

Tensor mean_pool(const Tensor& sequence) { return tc::mean_rows(sequence); }

Tensor to_tensor(const Matrix& m) {
  if (m.rows == 0 || m.cols == 0) throw ShapeError("empty matrix");
  return Tensor::matrix(m.rows, m.cols, m.values);
}

}  // namespace ananet::encoders
