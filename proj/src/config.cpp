#include "ananet/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "ananet/anaf.hpp"
#include "ananet/error.hpp"

namespace ananet {

namespace {

constexpr const char* kKeys[] = {
    "d",      "d_r",   "d_G",   "d_B",  "d_inv",          "d_var",
    "K",      "N_max", "lambda", "eta", "alpha",          "beta",
    "lr",     "batch", "epochs", "seed", "attention_axis", "attention_scale",
    "fusion_variant", "mode", "threads"};

std::string canonical_key(std::string_view key) {
  if (key == "λ") return "lambda";
  if (key == "η") return "eta";
  if (key == "α") return "alpha";
  if (key == "β") return "beta";
  return std::string(key);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError("'" + std::string(key) + "' expects a finite number, got '" +
                      std::string(value) + "'");
  }
  return out;
}

}  // namespace

std::span<const char* const> config_keys() { return kKeys; }

void RunConfig::validate() const {
  model.validate();
  if (train.batch == 0) throw ConfigError("batch must be >= 1");
  if (train.lr < 0) throw ConfigError("lr must be >= 0");
  if (train.eval_threads == 0) throw ConfigError("threads must be >= 1");
}

void apply_setting(RunConfig& c, std::string_view raw_key, std::string_view value) {
  const std::string key = canonical_key(raw_key);
  auto& m = c.model;
  auto size = [&] { return static_cast<std::size_t>(parse_unsigned(key, value)); };
  if (key == "d") m.d = size();
  else if (key == "d_r") m.d_r = size();
  else if (key == "d_G") m.d_G = size();
  else if (key == "d_B") m.d_B = size();
  else if (key == "d_inv") m.d_inv = size();
  else if (key == "d_var") m.d_var = size();
  else if (key == "K") m.K = size();
  else if (key == "N_max") m.N_max = size();
  else if (key == "lambda") m.lambda = parse_real(key, value);
  else if (key == "eta") m.eta = parse_real(key, value);
  else if (key == "alpha") m.alpha = parse_real(key, value);
  else if (key == "beta") m.beta = parse_real(key, value);
  else if (key == "attention_scale") m.attention_scale = parse_real(key, value);
  else if (key == "attention_axis") m.attention_axis = alignment::parse_attention_axis(value);
  else if (key == "fusion_variant") m.fusion_variant = association::parse_fusion_variant(value);
  else if (key == "mode") m.mode = model::parse_model_mode(value);
  else if (key == "lr") c.train.lr = parse_real(key, value);
  else if (key == "batch") c.train.batch = size();
  else if (key == "epochs") c.train.epochs = size();
  else if (key == "seed") c.train.seed = parse_unsigned(key, value);
  else if (key == "threads") c.train.eval_threads = static_cast<unsigned>(size());
  else throw ConfigError("unknown config key '" + std::string(raw_key) + "'");
  c.explicit_keys.insert(key);
}

RunConfig parse_config_text(std::string_view text, std::string_view source) {
  RunConfig c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where + ": empty key or value");
    if (!seen.insert(canonical_key(key)).second) {
      throw ConfigError(where + ": key '" + std::string(key) + "' is set twice");
    }
    try {
      apply_setting(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto bytes = dataio::read_file_bytes(path);
  return parse_config_text(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
      path.string());
}

void apply_overrides(RunConfig& config, std::span<const std::string> overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + o + "' is not of the form key=value");
    }
    apply_setting(config, trim(std::string_view(o).substr(0, eq)),
                  trim(std::string_view(o).substr(eq + 1)));
  }
}

void infer_input_dims(RunConfig& config, std::span<const dataio::FeatureRecord> records) {
  if (records.empty()) return;
  const auto& r = records.front();
  auto& m = config.model;
  if (!config.is_set("d_r")) m.d_r = r.region_feats.cols;
  if (!config.is_set("d_G")) m.d_G = r.word_vecs.cols;
  if (!config.is_set("d_B")) m.d_B = r.ctx_vecs.cols;
  if (!config.is_set("K")) m.K = r.num_regions();
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  const auto& m = c.model;
  nlohmann::ordered_json j;
  j["d"] = m.d;
  j["d_r"] = m.d_r;
  j["d_G"] = m.d_G;
  j["d_B"] = m.d_B;
  j["d_inv"] = m.d_inv;
  j["d_var"] = m.d_var;
  j["K"] = m.K;
  j["N_max"] = m.N_max;
  j["lambda"] = m.lambda;
  j["eta"] = m.eta;
  j["alpha"] = m.alpha;
  j["beta"] = m.beta;
  j["lr"] = c.train.lr;
  j["batch"] = c.train.batch;
  j["epochs"] = c.train.epochs;
  j["seed"] = c.train.seed;
  j["attention_axis"] = alignment::to_string(m.attention_axis);
  j["attention_scale"] = m.attention_scale;
  j["fusion_variant"] = association::to_string(m.fusion_variant);
  j["mode"] = model::to_string(m.mode);
  j["threads"] = c.train.eval_threads;
  return j;
}

RunConfig run_config_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number_float()) {
      // Round-trip exact: nlohmann prints the shortest representation.
      text = value.dump();
    } else if (value.is_number_integer()) {
      text = value.dump();
    } else {
      throw ConfigError("run config key '" + key + "' has an unsupported value type");
    }
    apply_setting(c, key, text);
  }
  return c;
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  const auto j = to_json(c);
  for (const auto& [key, value] : j.items()) {
    os << key << " = " << (value.is_string() ? value.get<std::string>() : value.dump())
       << '\n';
  }
  return os.str();
}

}  // namespace ananet
