#include "ananet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "ananet/anaf.hpp"
#include "ananet/error.hpp"
#include "ananet/ops.hpp"

namespace ananet::trainer {

namespace tc = tensorcore;

void adam_step(std::span<const Tensor> params, OptimizerState& s) {
  if (s.m.empty()) {
    for (const auto& p : params) {
      s.m.emplace_back(p.size(), 0.0);
      s.v.emplace_back(p.size(), 0.0);
    }
  }
  if (s.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer holds " + std::to_string(s.m.size()) +
                     " moment buffers for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].requires_grad() || params[i].grad().size() != params[i].size()) {
      throw Error("adam_step: parameter " + std::to_string(i) + " " +
                  params[i].shape_string() + " has no gradient");
    }
  }

  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = s.m[i];
    auto& v = s.v[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
      v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
  }
}

Confusion merge(const Confusion& a, const Confusion& b) {
  Confusion out{};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) out[i][j] = a[i][j] + b[i][j];
  }
  return out;
}

MetricsReport metrics_from_confusion(const Confusion& c) {
  MetricsReport r;
  r.confusion = c;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    correct += c[i][i];
    for (std::size_t j = 0; j < 3; ++j) r.total += c[i][j];
  }
  if (r.total == 0) return r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  for (std::size_t k = 0; k < 3; ++k) {
    std::size_t support = 0, predicted = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      support += c[k][j];
      predicted += c[j][k];
    }
    const double precision = predicted ? static_cast<double>(c[k][k]) / predicted : 0.0;
    const double recall = support ? static_cast<double>(c[k][k]) / support : 0.0;
    r.f1[k] = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    r.weighted_f1 += static_cast<double>(support) / static_cast<double>(r.total) * r.f1[k];
  }
  return r;
}

MetricsReport majority_baseline(std::span<const int> labels) {
  std::array<std::size_t, 3> counts{};
  for (int y : labels) {
    if (y < 0 || y > 2) throw DataError("majority_baseline: label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  const auto majority = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  Confusion c{};
  for (std::size_t k = 0; k < 3; ++k) c[k][majority] = counts[k];
  return metrics_from_confusion(c);
}

namespace {

Confusion confusion_of(const model::Model& model, std::span<const FeatureRecord> records) {
  Confusion c{};
  for (const auto& r : records) {
    const auto pred = model.predict(r);
    ++c[static_cast<std::size_t>(r.label)][pred.predicted];
  }
  return c;
}

}  // namespace

MetricsReport evaluate(const model::Model& model, std::span<const FeatureRecord> records,
                       unsigned threads) {
  if (records.empty()) throw DataError("evaluate: empty dataset");
  threads = std::max(1u, std::min<unsigned>(threads, records.size()));
  if (threads == 1) return metrics_from_confusion(confusion_of(model, records));

  std::vector<Confusion> parts(threads);
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  const std::size_t chunk = (records.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(records.size(), t * chunk);
    const std::size_t end = std::min(records.size(), begin + chunk);
    workers.emplace_back([&, t, begin, end] {
      try {
        parts[t] = confusion_of(model, records.subspan(begin, end - begin));
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Confusion total{};
  for (const auto& p : parts) total = merge(total, p);
  return metrics_from_confusion(total);
}

fusion::LossBundle dataset_loss(const model::Model& model,
                                std::span<const FeatureRecord> records) {
  if (records.empty()) throw DataError("dataset_loss: empty dataset");
  tc::NoGradGuard guard;
  double L_c = 0.0, L_i = 0.0;
  for (const auto& r : records) {
    Tensor lc, li;
    model.pair_loss(model.forward(r), static_cast<std::size_t>(r.label), &lc, &li);
    L_c += lc.item();
    if (li.defined()) L_i += li.item();
  }
  const double n = static_cast<double>(records.size());
  const Tensor lo = model.orthogonal_loss();
  const auto& cfg = model.config();
  return fusion::make_loss_bundle(L_c / n, L_i / n, lo.defined() ? lo.item() : 0.0,
                                  cfg.uses_association() ? cfg.alpha : 0.0,
                                  cfg.uses_association() ? cfg.beta : 0.0);
}

TrainResult train(model::Model& model, std::span<const FeatureRecord> train_set,
                  std::span<const FeatureRecord> dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train_set.empty()) throw DataError("train: empty training set");
  if (config.batch == 0) throw ConfigError("batch must be >= 1");
  if (!std::isfinite(config.lr) || config.lr < 0) throw ConfigError("lr must be >= 0");
  for (const auto& r : train_set) model.check_record(r);
  for (const auto& r : dev_set) model.check_record(r);

  const auto& cfg = model.config();
  std::vector<Tensor> params;
  for (auto& p : model.parameters()) params.push_back(p.tensor);

  OptimizerState opt;
  opt.lr = config.lr;
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eed5eed5eed5eedULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<std::vector<double>> best;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum_c = 0.0, sum_i = 0.0, sum_o = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t count = std::min(config.batch, order.size() - start);
      for (auto& p : params) p.zero_grad();

      std::vector<Tensor> losses;
      losses.reserve(count);
      for (std::size_t b = 0; b < count; ++b) {
        const auto& rec = train_set[order[start + b]];
        Tensor lc, li;
        losses.push_back(
            model.pair_loss(model.forward(rec), static_cast<std::size_t>(rec.label), &lc, &li));
        sum_c += lc.item();
        if (li.defined()) sum_i += li.item();
      }
      Tensor batch_loss = tc::scale(tc::sum(tc::stack_rows(losses)), 1.0 / count);
      if (Tensor lo = model.orthogonal_loss(); lo.defined()) {
        sum_o += lo.item() * static_cast<double>(count);
        batch_loss = tc::add(batch_loss, tc::scale(lo, cfg.beta));
      }
      tc::backward(batch_loss);
      adam_step(params, opt);
      ++result.steps;
    }

    const double n = static_cast<double>(train_set.size());
    const double a = cfg.uses_association() ? cfg.alpha : 0.0;
    const double b = cfg.uses_association() ? cfg.beta : 0.0;
    EpochLog entry;
    entry.epoch = epoch;
    entry.L_c = sum_c / n;
    entry.L_i = sum_i / n;
    entry.L_o = sum_o / n;
    entry.L = fusion::total_loss(entry.L_c, entry.L_i, entry.L_o, a, b);
    if (!dev_set.empty()) {
      const auto dev = evaluate(model, dev_set, config.eval_threads);
      entry.dev_acc = dev.accuracy;
      entry.dev_wf1 = dev.weighted_f1;
    }
    if (best.empty() || entry.dev_acc > result.best_dev_acc || dev_set.empty()) {
      best = model.snapshot();
      result.best_epoch = epoch;
      result.best_dev_acc = entry.dev_acc;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  if (!best.empty()) model.restore(best);
  return result;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string log_csv(std::span<const EpochLog> log) {
  std::ostringstream os;
  os << "epoch,L,L_c,L_i,L_o,dev_acc,dev_wf1\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << format_number(e.L) << ',' << format_number(e.L_c) << ','
       << format_number(e.L_i) << ',' << format_number(e.L_o) << ','
       << format_number(e.dev_acc) << ',' << format_number(e.dev_wf1) << '\n';
  }
  return os.str();
}

void write_log_csv(const std::filesystem::path& path, std::span<const EpochLog> log) {
  const std::string text = log_csv(log);
  dataio::write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()),
                                  text.size()});
}

std::vector<SweepCell> sweep(const model::ModelConfig& model_config,
                             const TrainConfig& train_config,
                             std::span<const double> lambda_grid,
                             std::span<const double> eta_grid,
                             std::span<const FeatureRecord> train_set,
                             std::span<const FeatureRecord> dev_set) {
  if (lambda_grid.empty() || eta_grid.empty()) throw ConfigError("sweep: empty grid");
  if (dev_set.empty()) throw DataError("sweep: empty dev set");
  std::vector<SweepCell> cells;
  for (double lambda : lambda_grid) {
    for (double eta : eta_grid) {
      model::ModelConfig mc = model_config;
      mc.lambda = lambda;
      mc.eta = eta;
      model::Model m(mc, train_config.seed);
      train(m, train_set, dev_set, train_config);
      cells.push_back({lambda, eta, evaluate(m, dev_set, train_config.eval_threads).accuracy});
    }
  }
  return cells;
}

std::string sweep_csv(std::span<const SweepCell> cells) {
  std::ostringstream os;
  os << "lambda,eta,dev_acc\n";
  for (const auto& c : cells) {
    os << format_number(c.lambda) << ',' << format_number(c.eta) << ','
       << format_number(c.dev_acc) << '\n';
  }
  return os.str();
}

std::vector<AblationResult> ablate(const model::ModelConfig& model_config,
                                   const TrainConfig& train_config,
                                   std::span<const model::ModelMode> modes,
                                   std::span<const FeatureRecord> train_set,
                                   std::span<const FeatureRecord> dev_set,
                                   std::span<const FeatureRecord> test_set) {
  if (test_set.empty()) throw DataError("ablate: empty test set");
  std::vector<AblationResult> out;
  for (auto mode : modes) {
    model::ModelConfig mc = model_config;
    mc.mode = mode;
    model::Model m(mc, train_config.seed);
    AblationResult r;
    r.mode = mode;
    r.training = train(m, train_set, dev_set, train_config);
    if (!dev_set.empty()) r.dev = evaluate(m, dev_set, train_config.eval_threads);
    r.test = evaluate(m, test_set, train_config.eval_threads);
    out.push_back(std::move(r));
  }
  return out;
}

std::string ablation_csv(std::span<const AblationResult> results) {
  std::ostringstream os;
  os << "variant,accuracy,weighted_f1,f_exr,f_imr,f_irr\n";
  for (const auto& r : results) {
    os << model::to_string(r.mode) << ',' << format_number(r.test.accuracy) << ','
       << format_number(r.test.weighted_f1) << ',' << format_number(r.test.f_exr()) << ','
       << format_number(r.test.f_imr()) << ',' << format_number(r.test.f_irr()) << '\n';
  }
  return os.str();
}

}  // namespace ananet::trainer
