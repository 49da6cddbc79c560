#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ananet/dataset.hpp"
#include "ananet/gradcheck.hpp"
#include "ananet/model.hpp"

namespace ananet {

struct GradSuiteOptions {
  std::uint64_t seed = 7;
  double eps = tensorcore::kDefaultGradCheckEpsilon;
};

inline constexpr double kGradCheckTolerance = 1e-4;

/// Small configuration used for the end-to-end checks: K=3, N=4, d=8,
/// d_inv=d_var=2.
model::ModelConfig toy_model_config();
/// A random pair shaped for `config` with `tokens` rows of text.
dataio::FeatureRecord random_record(const model::ModelConfig& config, std::size_t tokens,
                                    int label, std::uint64_t seed);

/// Per-pair L = L_c + α·L_i + β·L_o as a taped scalar.
tensorcore::Tensor full_pair_loss(const model::Model& model,
                                  const dataio::FeatureRecord& record);

/// Redraws every parameter from N(0, scale²), including the zero-initialized
/// classifier heads, so that no gradient path is trivially zero.
void randomize_parameters(model::Model& model, std::uint64_t seed, double scale = 0.5);

/// Smallest gradient magnitude central differences can resolve to within
/// `tolerance` for a loss of value `f`, allowing 16 ulps of rounding in f.
double resolution_floor(double f, double eps, double tolerance = kGradCheckTolerance);

/// Evaluates `loss` with a tape and reports whether every nonzero analytic
/// gradient coordinate of `params` is at or above resolution_floor.  Uses
/// only the analytic gradient, never the finite-difference comparison.
bool gradients_resolvable(const std::function<tensorcore::Tensor()>& loss,
                          const std::vector<tensorcore::Tensor>& params, double eps);

/// Checks every differentiable op, each module, and the full loss under all
/// fusion variants, modes and attention axes.  End-to-end instances are
/// redrawn (up to 64 times) until gradients_resolvable holds; the number of
/// redraws is appended to the check's name.
std::vector<tensorcore::GradCheckReport> run_gradcheck_suite(const GradSuiteOptions& options = {});

}  // namespace ananet
