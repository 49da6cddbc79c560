#include "ananet/fusion.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ananet/error.hpp"
#include "ananet/ops.hpp"

namespace ananet::fusion {

namespace tc = tensorcore;

namespace {

Tensor stream_logits(const Tensor& r, const Tensor& w, const Tensor& b, const char* name) {
  if (!w.defined()) {
    throw ShapeError(std::string("late_fusion: ") + name + " stream has no weights");
  }
  if (r.rank() != 1 || r.size() != w.cols()) {
    throw ShapeError(std::string("late_fusion: ") + name + " representation " +
                     r.shape_string() + " does not match weights " + w.shape_string());
  }
  return tc::add(tc::matvec(w, r), b);
}

}  // namespace

FusionParams init_fusion(std::size_t global_length, std::size_t local_length,
                         std::mt19937_64& /*rng*/) {
  FusionParams p;
  if (global_length > 0) {
    p.w_g = Tensor::zeros({kNumClasses, global_length}, true);
    p.b_g = Tensor::zeros({kNumClasses}, true);
  }
  if (local_length > 0) {
    p.w_l = Tensor::zeros({kNumClasses, local_length}, true);
    p.b_l = Tensor::zeros({kNumClasses}, true);
  }
  return p;
}

Prediction late_fusion(const Tensor& r_g, const Tensor& r_l, const FusionParams& params) {
  if (!std::isfinite(params.lambda) || !std::isfinite(params.eta)) {
    throw ConfigError("late_fusion: lambda and eta must be finite");
  }
  if (!r_g.defined() && !r_l.defined()) {
    throw ShapeError("late_fusion: both streams are absent");
  }
  Tensor logits;
  if (r_g.defined()) {
    logits = tc::scale(stream_logits(r_g, params.w_g, params.b_g, "global"), params.lambda);
  }
  if (r_l.defined()) {
    Tensor local = tc::scale(stream_logits(r_l, params.w_l, params.b_l, "local"), params.eta);
    logits = logits.defined() ? tc::add(logits, local) : local;
  }

  Prediction out;
  const auto p = tc::softmax(logits.values());
  for (std::size_t c = 0; c < kNumClasses; ++c) out.y_hat[c] = p[c];
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (logits[c] > logits[out.predicted]) out.predicted = c;
  }
  out.logits = std::move(logits);
  return out;
}

Tensor classification_loss(const Tensor& logits, std::size_t label) {
  if (label >= kNumClasses) {
    throw DataError("classification_loss: label " + std::to_string(label) +
                    " is outside {0, 1, 2}");
  }
  return tc::cross_entropy(logits, label);
}

double classification_loss(std::span<const double> y_hat, std::size_t label) {
  if (label >= y_hat.size() || label >= kNumClasses) {
    throw DataError("classification_loss: label " + std::to_string(label) +
                    " is outside {0, 1, 2}");
  }
  if (y_hat[label] <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(y_hat[label]);
}

double total_loss(double L_c, double L_i, double L_o, double alpha, double beta) {
  return L_c + alpha * L_i + beta * L_o;
}

Tensor total_loss(const Tensor& L_c, const Tensor& L_i, const Tensor& L_o, double alpha,
                  double beta) {
  return tc::add(tc::add(L_c, tc::scale(L_i, alpha)), tc::scale(L_o, beta));
}

LossBundle make_loss_bundle(double L_c, double L_i, double L_o, double alpha, double beta) {
  return {L_c, L_i, L_o, total_loss(L_c, L_i, L_o, alpha, beta), alpha, beta};
}

}  // namespace ananet::fusion
