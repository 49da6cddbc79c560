#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ananet/dataset.hpp"
#include "ananet/fusion.hpp"
#include "ananet/model.hpp"
#include "ananet/tensor.hpp"

namespace ananet::trainer {

using tensorcore::Tensor;
using dataio::FeatureRecord;

struct OptimizerState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of every tensor in `params` from its
/// accumulated gradient.  Moments are allocated on the first call.
void adam_step(std::span<const Tensor> params, OptimizerState& state);

using Confusion = std::array<std::array<std::size_t, 3>, 3>;  // [true][predicted]

Confusion merge(const Confusion& a, const Confusion& b);

struct MetricsReport {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::array<double, 3> f1{};  // indexed by label: irrelevant, implicit, explicit
  Confusion confusion{};
  std::size_t total = 0;

  double f_irr() const { return f1[0]; }
  double f_imr() const { return f1[1]; }
  double f_exr() const { return f1[2]; }
};

/// Per-class F1 is 0 when precision + recall is 0; weighted F1 weights by
/// true-class support.
MetricsReport metrics_from_confusion(const Confusion& confusion);

/// Metrics of always predicting the most frequent label (lowest label on ties).
MetricsReport majority_baseline(std::span<const int> labels);
inline constexpr double kRandomBaselineAccuracy = 1.0 / 3.0;

/// `threads` > 1 shards pairs across worker threads; the result does not
/// depend on the thread count.
MetricsReport evaluate(const model::Model& model, std::span<const FeatureRecord> records,
                       unsigned threads = 1);

/// Mean per-pair loss terms on a dataset without recording a tape.
fusion::LossBundle dataset_loss(const model::Model& model,
                                std::span<const FeatureRecord> records);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch = 64;
  std::size_t epochs = 50;
  std::uint64_t seed = 17;
  unsigned eval_threads = 1;
};

struct EpochLog {
  std::size_t epoch = 0;
  double L = 0.0;
  double L_c = 0.0;
  double L_i = 0.0;
  double L_o = 0.0;
  double dev_acc = 0.0;
  double dev_wf1 = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_dev_acc = 0.0;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch Adam on the mean per-pair loss.  Batches come from a seeded
/// shuffle each epoch and the last short batch is kept.  On return `model`
/// holds the parameters of the epoch with the best dev accuracy (earliest on
/// ties); with no dev pairs the final epoch is kept.
TrainResult train(model::Model& model, std::span<const FeatureRecord> train_set,
                  std::span<const FeatureRecord> dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

void write_log_csv(const std::filesystem::path& path, std::span<const EpochLog> log);
std::string log_csv(std::span<const EpochLog> log);

struct SweepCell {
  double lambda = 0.0;
  double eta = 0.0;
  double dev_acc = 0.0;
};

/// One seeded train + dev evaluation per (λ, η) cell, λ-major order.
std::vector<SweepCell> sweep(const model::ModelConfig& model_config,
                             const TrainConfig& train_config,
                             std::span<const double> lambda_grid,
                             std::span<const double> eta_grid,
                             std::span<const FeatureRecord> train_set,
                             std::span<const FeatureRecord> dev_set);
std::string sweep_csv(std::span<const SweepCell> cells);

struct AblationResult {
  model::ModelMode mode = model::ModelMode::full;
  MetricsReport dev;
  MetricsReport test;
  TrainResult training;
};

/// Trains each requested mode from the same seed and reports test metrics.
std::vector<AblationResult> ablate(const model::ModelConfig& model_config,
                                   const TrainConfig& train_config,
                                   std::span<const model::ModelMode> modes,
                                   std::span<const FeatureRecord> train_set,
                                   std::span<const FeatureRecord> dev_set,
                                   std::span<const FeatureRecord> test_set);
std::string ablation_csv(std::span<const AblationResult> results);

std::string format_number(double v);

}  // namespace ananet::trainer
