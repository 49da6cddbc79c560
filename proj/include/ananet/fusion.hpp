#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>

#include "ananet/tensor.hpp"

namespace ananet::fusion {

using tensorcore::Tensor;

inline constexpr std::size_t kNumClasses = 3;

struct FusionParams {
  Tensor w_g;  // 3 × len(r_g)
  Tensor b_g;  // 3
  Tensor w_l;  // 3 × len(r_l)
  Tensor b_l;  // 3
  double lambda = 0.7;
  double eta = 1.3;
};

/// Both heads start at zero, so an untrained model predicts the uniform
/// distribution.  A zero length leaves that stream's tensors undefined.
FusionParams init_fusion(std::size_t global_length, std::size_t local_length,
                         std::mt19937_64& rng);

struct Prediction {
  Tensor logits;
  std::array<double, kNumClasses> y_hat{};
  std::size_t predicted = 0;
};

/// logits = λ(w_g·r_g + b_g) + η(w_l·r_l + b_l).  An undefined r_g or r_l
/// drops that stream entirely; at least one must be present.
Prediction late_fusion(const Tensor& r_g, const Tensor& r_l, const FusionParams& params);

/// Cross-entropy from logits via log-sum-exp (differentiable).
Tensor classification_loss(const Tensor& logits, std::size_t label);
/// -log y_hat[label] on a probability vector.
double classification_loss(std::span<const double> y_hat, std::size_t label);

struct LossBundle {
  double L_c = 0.0;
  double L_i = 0.0;
  double L_o = 0.0;
  double L = 0.0;
  double alpha = 0.1;
  double beta = 2.0;
};

double total_loss(double L_c, double L_i, double L_o, double alpha, double beta);
Tensor total_loss(const Tensor& L_c, const Tensor& L_i, const Tensor& L_o, double alpha,
                  double beta);
LossBundle make_loss_bundle(double L_c, double L_i, double L_o, double alpha, double beta);

}  // namespace ananet::fusion
