#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ananet/dataset.hpp"
#include "ananet/model.hpp"
#include "ananet/trainer.hpp"

namespace ananet {

// Config grammar, one setting per line:
//
//   # comment
//   key = value      # trailing comment
//
// Keys: d d_r d_G d_B d_inv d_var K N_max lambda eta alpha beta lr batch
// epochs seed attention_axis attention_scale fusion_variant mode threads.
// λ, η, α and β are accepted as aliases.  Unknown or repeated keys are
// errors.  Overrides given as key=value strings are applied afterwards and
// win over the file.
struct RunConfig {
  model::ModelConfig model;
  trainer::TrainConfig train;
  std::set<std::string> explicit_keys;  // keys set by a file or override

  bool is_set(std::string_view key) const { return explicit_keys.count(std::string(key)) > 0; }
  void validate() const;
};

/// Every recognised key, in canonical order.
std::span<const char* const> config_keys();

void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
RunConfig parse_config_text(std::string_view text, std::string_view source = "config");
RunConfig load_config(const std::filesystem::path& path);
/// Applies "key=value" strings on top of `config`.
void apply_overrides(RunConfig& config, std::span<const std::string> overrides);

/// Fills d_r, d_G, d_B and K from the first record unless set explicitly.
void infer_input_dims(RunConfig& config, std::span<const dataio::FeatureRecord> records);

/// Canonical key = value text covering every key.
std::string to_config_text(const RunConfig& config);

nlohmann::ordered_json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::ordered_json& j);

}  // namespace ananet
