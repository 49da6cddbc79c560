#include "cli.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ananet/alignment.hpp"
#include "ananet/anaf.hpp"
#include "ananet/config.hpp"
#include "ananet/dataset.hpp"
#include "ananet/error.hpp"
#include "ananet/gradsuite.hpp"
#include "ananet/model_io.hpp"
#include "ananet/synthetic.hpp"
#include "ananet/trainer.hpp"

namespace ananet::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : Error {
  using Error::Error;
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
      throw UsageError(std::string(flag) + ": cannot parse '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<dataio::FeatureRecord> load_split(const fs::path& root, const std::string& split,
                                              bool required = true) {
  const auto path = dataio::manifest_path(root, split);
  if (!required && !fs::exists(path)) return {};
  return dataio::load_dataset(path);
}

struct TrainingInputs {
  std::string data;
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_training_options(CLI::App* cmd, TrainingInputs& in) {
  cmd->add_option("--data", in.data, "Dataset directory with train/dev/test manifests")
      ->required();
  cmd->add_option("--config", in.config_file, "key = value config file");
  cmd->add_option("--set", in.overrides, "Override a config key (key=value), repeatable");
}

RunConfig resolve_config(const TrainingInputs& in,
                         std::span<const dataio::FeatureRecord> train_set) {
  RunConfig cfg = in.config_file.empty() ? RunConfig{} : load_config(in.config_file);
  apply_overrides(cfg, in.overrides);
  infer_input_dims(cfg, train_set);
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json metrics_json(const trainer::MetricsReport& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["weighted_f1"] = m.weighted_f1;
  j["f_exr"] = m.f_exr();
  j["f_imr"] = m.f_imr();
  j["f_irr"] = m.f_irr();
  j["confusion"] = m.confusion;
  j["total"] = m.total;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  dataio::write_file_bytes(
      path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-text correlation classifier"};
  app.require_subcommand(1);

  // synth
  dataio::SynthConfig synth;
  std::string synth_out, synth_counts;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-structure dataset");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--n-per-class", synth_counts,
                        "Pairs per class for train,dev,test (e.g. 300,50,50)");
  synth_cmd->add_option("--K", synth.K, "Regions per image");
  synth_cmd->add_option("--N", synth.N, "Tokens per text");
  synth_cmd->add_option("--d-r", synth.d_r, "Region feature width");
  synth_cmd->add_option("--d-g", synth.d_G, "Word-vector width");
  synth_cmd->add_option("--d-b", synth.d_B, "Context-vector width");
  synth_cmd->add_option("--alignment-strength", synth.alignment_strength);
  synth_cmd->add_option("--association-strength", synth.association_strength);
  synth_cmd->add_option("--noise", synth.noise_sigma);

  // train
  TrainingInputs train_in;
  std::string train_out, train_log;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_training_options(train_cmd, train_in);
  train_cmd->add_option("--out", train_out, "Model file to write")->required();
  train_cmd->add_option("--log", train_log, "Per-epoch CSV log");

  // eval
  std::string eval_model, eval_data, eval_split = "test", eval_json;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model, printing JSON metrics");
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--split", eval_split, "Split to evaluate");
  eval_cmd->add_option("--json", eval_json, "Also write the JSON to this file");

  // gradcheck
  GradSuiteOptions grad_opts;
  bool grad_verbose = false;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad_cmd->add_option("--seed", grad_opts.seed);
  grad_cmd->add_option("--eps", grad_opts.eps);
  grad_cmd->add_flag("--verbose", grad_verbose, "Print every check");

  // attn-dump
  std::string attn_model, attn_data, attn_split = "test", attn_ids, attn_out = ".";
  auto* attn_cmd = app.add_subcommand("attn-dump", "Export attention matrices per pair");
  attn_cmd->add_option("--model", attn_model)->required();
  attn_cmd->add_option("--data", attn_data)->required();
  attn_cmd->add_option("--split", attn_split);
  attn_cmd->add_option("--ids", attn_ids, "Comma-separated pair ids")->required();
  attn_cmd->add_option("--out", attn_out, "Directory for <id>.json files");

  // sweep
  TrainingInputs sweep_in;
  std::string lambda_grid = "0.7", eta_grid = "1.3", sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search over lambda and eta");
  add_training_options(sweep_cmd, sweep_in);
  sweep_cmd->add_option("--lambda-grid", lambda_grid);
  sweep_cmd->add_option("--eta-grid", eta_grid);
  sweep_cmd->add_option("--out", sweep_out, "CSV file (stdout if omitted)");

  // ablate
  TrainingInputs ablate_in;
  std::string variants = "full,association_only,alignment_only,concat_only", ablate_out;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare model variants");
  add_training_options(ablate_cmd, ablate_in);
  ablate_cmd->add_option("--variants", variants);
  ablate_cmd->add_option("--out", ablate_out, "CSV file (stdout if omitted)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*synth_cmd) {
      if (!synth_counts.empty()) {
        auto c = parse_list<std::size_t>(synth_counts, "--n-per-class");
        if (c.size() != 3) throw UsageError("--n-per-class expects three counts: train,dev,test");
        synth.set_balanced(c[0], c[1], c[2]);
      }
      const auto m = dataio::generate_synthetic(synth, synth_out);
      out << "wrote " << m.train.string() << ", " << m.dev.string() << ", " << m.test.string()
          << "\n";
      return kExitOk;
    }

    if (*train_cmd) {
      const auto train_set = load_split(train_in.data, "train");
      const auto dev_set = load_split(train_in.data, "dev", false);
      const RunConfig cfg = resolve_config(train_in, train_set);
      model::Model model(cfg.model, cfg.train.seed);
      const auto start = std::chrono::steady_clock::now();
      auto result = trainer::train(model, train_set, dev_set, cfg.train,
                                   [&](const trainer::EpochLog& e) {
                                     err << "epoch " << e.epoch << "  L "
                                         << trainer::format_number(e.L) << "  dev_acc "
                                         << trainer::format_number(e.dev_acc) << "\n";
                                   });
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      save_model(train_out, model, cfg);
      if (!train_log.empty()) trainer::write_log_csv(train_log, result.log);
      out << "best epoch " << result.best_epoch << " (dev accuracy "
          << trainer::format_number(result.best_dev_acc) << "), " << result.steps
          << " steps in " << trainer::format_number(secs) << " s; model written to "
          << train_out << "\n";
      return kExitOk;
    }

    if (*eval_cmd) {
      const auto loaded = load_model(eval_model);
      const auto records = load_split(eval_data, eval_split);
      const auto report =
          trainer::evaluate(loaded.model, records, loaded.config.train.eval_threads);
      const std::string text = metrics_json(report).dump(2) + "\n";
      out << text;
      if (!eval_json.empty()) write_text(eval_json, text);
      return kExitOk;
    }

    if (*grad_cmd) {
      const auto reports = run_gradcheck_suite(grad_opts);
      std::size_t failed = 0;
      double worst = 0.0;
      for (const auto& r : reports) {
        const bool ok = r.max_relative_error <= kGradCheckTolerance;
        failed += ok ? 0 : 1;
        worst = std::max(worst, r.max_relative_error);
        if (grad_verbose || !ok) {
          out << (ok ? "ok    " : "FAIL  ") << r.op_name << "  max_rel_err "
              << trainer::format_number(r.max_relative_error) << "\n";
        }
      }
      out << reports.size() - failed << "/" << reports.size()
          << " checks within 1e-4 (worst " << trainer::format_number(worst) << ")\n";
      return failed ? kExitGradcheck : kExitOk;
    }

    if (*attn_cmd) {
      const auto loaded = load_model(attn_model);
      if (!loaded.model.config().uses_alignment()) {
        throw UsageError("model mode '" + model::to_string(loaded.model.config().mode) +
                         "' has no alignment stream");
      }
      const auto records = load_split(attn_data, attn_split);
      for (const auto& id : split_names(attn_ids)) {
        const auto it = std::find_if(records.begin(), records.end(),
                                     [&](const auto& r) { return r.id == id; });
        if (it == records.end()) {
          throw DataError("pair '" + id + "' not found in split '" + attn_split + "'");
        }
        tensorcore::NoGradGuard guard;
        const auto state = loaded.model.forward(*it).align;
        const fs::path path = fs::path(attn_out) / (id + ".json");
        write_text(path, alignment::export_attention(state, id).dump() + "\n");
        out << "wrote " << path.string() << "\n";
      }
      return kExitOk;
    }

    if (*sweep_cmd) {
      const auto train_set = load_split(sweep_in.data, "train");
      const auto dev_set = load_split(sweep_in.data, "dev");
      const RunConfig cfg = resolve_config(sweep_in, train_set);
      const auto lambdas = parse_list<double>(lambda_grid, "--lambda-grid");
      const auto etas = parse_list<double>(eta_grid, "--eta-grid");
      const auto cells = trainer::sweep(cfg.model, cfg.train, lambdas, etas, train_set, dev_set);
      const std::string csv = trainer::sweep_csv(cells);
      if (sweep_out.empty()) out << csv; else write_text(sweep_out, csv);
      return kExitOk;
    }

    if (*ablate_cmd) {
      const auto train_set = load_split(ablate_in.data, "train");
      const auto dev_set = load_split(ablate_in.data, "dev", false);
      const auto test_set = load_split(ablate_in.data, "test");
      const RunConfig cfg = resolve_config(ablate_in, train_set);
      std::vector<model::ModelMode> modes;
      for (const auto& v : split_names(variants)) modes.push_back(model::parse_model_mode(v));
      if (modes.empty()) throw UsageError("--variants: empty list");
      const auto results =
          trainer::ablate(cfg.model, cfg.train, modes, train_set, dev_set, test_set);
      const std::string csv = trainer::ablation_csv(results);
      if (ablate_out.empty()) out << csv; else write_text(ablate_out, csv);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ananet::cli
