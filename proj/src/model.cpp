#include "ananet/model.hpp"

#include <cmath>
#include <random>

#include "ananet/error.hpp"
#include "ananet/ops.hpp"

namespace ananet::model {

namespace tc = tensorcore;

std::string to_string(ModelMode mode) {
  switch (mode) {
    case ModelMode::full: return "full";
    case ModelMode::association_only: return "association_only";
    case ModelMode::alignment_only: return "alignment_only";
    case ModelMode::concat_only: return "concat_only";
  }
  return "?";
}

ModelMode parse_model_mode(std::string_view name) {
  for (auto m : {ModelMode::full, ModelMode::association_only, ModelMode::alignment_only,
                 ModelMode::concat_only}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected full, association_only, alignment_only or concat_only)");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(d_r, "d_r");
  positive(d_G, "d_G");
  positive(d_B, "d_B");
  positive(d_inv, "d_inv");
  positive(d_var, "d_var");
  positive(K, "K");
  positive(N_max, "N_max");
  if (d < 2 || d % 2 != 0) {
    throw ConfigError("d must be even and >= 2, got " + std::to_string(d));
  }
  auto finite = [](double v, const char* name) {
    if (!std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite");
  };
  finite(lambda, "lambda");
  finite(eta, "eta");
  finite(attention_scale, "attention_scale");
  finite(alpha, "alpha");
  finite(beta, "beta");
  if (alpha < 0 || beta < 0) throw ConfigError("alpha and beta must be >= 0");
}

bool ModelConfig::uses_association() const {
  return mode == ModelMode::full || mode == ModelMode::association_only;
}

bool ModelConfig::uses_alignment() const {
  return mode == ModelMode::full || mode == ModelMode::alignment_only;
}

std::size_t ModelConfig::global_length() const {
  if (mode == ModelMode::concat_only) return 2 * d;
  if (!uses_association()) return 0;
  return association::global_length(fusion_variant, d, d_inv, d_var);
}

std::size_t ModelConfig::local_length() const { return uses_alignment() ? K + N_max : 0; }

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  encoder_ = encoders::init_encoder({config_.d, config_.d_r, config_.d_G, config_.d_B}, rng);
  if (config_.uses_association()) {
    association_ = association::init_association(config_.d, config_.d_inv, config_.d_var, rng);
  }
  fusion_ = fusion::init_fusion(config_.global_length(), config_.local_length(), rng);
  set_fusion_weights(config_.lambda, config_.eta);
}

void Model::set_fusion_weights(double lambda, double eta) {
  config_.lambda = lambda;
  config_.eta = eta;
  fusion_.lambda = lambda;
  fusion_.eta = eta;
}

std::vector<NamedTensor> Model::parameters() const {
  std::vector<NamedTensor> out;
  auto add = [&out](std::string name, const Tensor& t) {
    if (t.defined()) out.push_back({std::move(name), t});
  };
  add("encoder.w_v", encoder_.w_v);
  add("encoder.b_v", encoder_.b_v);
  for (const auto* dir : {"forward", "backward"}) {
    const auto& c = std::string(dir) == "forward" ? encoder_.forward : encoder_.backward;
    const std::string p = std::string("encoder.") + dir + ".";
    add(p + "W_z", c.W_z);
    add(p + "U_z", c.U_z);
    add(p + "b_z", c.b_z);
    add(p + "W_r", c.W_r);
    add(p + "U_r", c.U_r);
    add(p + "b_r", c.b_r);
    add(p + "W_h", c.W_h);
    add(p + "U_h", c.U_h);
    add(p + "b_h", c.b_h);
  }
  add("association.W", association_.W);
  add("association.P_image", association_.P_image);
  add("association.P_text", association_.P_text);
  add("fusion.w_g", fusion_.w_g);
  add("fusion.b_g", fusion_.b_g);
  add("fusion.w_l", fusion_.w_l);
  add("fusion.b_l", fusion_.b_l);
  return out;
}

void Model::check_record(const dataio::FeatureRecord& r) const {
  auto fail = [&r](const std::string& what) {
    throw ShapeError("dimension mismatch for pair '" + r.id + "': " + what);
  };
  if (r.region_feats.cols != config_.d_r) {
    fail("region width " + std::to_string(r.region_feats.cols) + " but model has d_r=" +
         std::to_string(config_.d_r));
  }
  if (r.word_vecs.cols != config_.d_G) {
    fail("word-vector width " + std::to_string(r.word_vecs.cols) + " but model has d_G=" +
         std::to_string(config_.d_G));
  }
  if (r.ctx_vecs.cols != config_.d_B) {
    fail("context width " + std::to_string(r.ctx_vecs.cols) + " but model has d_B=" +
         std::to_string(config_.d_B));
  }
  if (config_.uses_alignment() && r.num_regions() != config_.K) {
    fail("K=" + std::to_string(r.num_regions()) + " but model has K=" +
         std::to_string(config_.K));
  }
}

PairOutput Model::forward(const dataio::FeatureRecord& record) const {
  check_record(record);
  PairOutput out;
  auto& m = out.modal;
  m.V = encoders::encode_image(encoders::to_tensor(record.region_feats), encoder_);
  m.T = encoders::encode_text(encoders::to_tensor(record.word_vecs),
                              encoders::to_tensor(record.ctx_vecs), encoder_, config_.N_max);
  m.f_image = encoders::mean_pool(m.V);
  m.f_text = encoders::mean_pool(m.T);

  if (config_.mode == ModelMode::concat_only) {
    const Tensor parts[] = {m.f_image, m.f_text};
    out.r_g = tc::concat(parts);
  } else if (config_.uses_association()) {
    out.assoc = association::associate(m.f_image, m.f_text, association_, config_.fusion_variant);
    out.r_g = out.assoc.r_g;
  }

  if (config_.uses_alignment()) {
    out.align = alignment::align(m.V, m.T, {config_.attention_axis, config_.attention_scale});
    const std::size_t n = out.align.num_tokens();
    if (n == config_.N_max) {
      out.r_l = out.align.r_l;
    } else {
      const Tensor parts[] = {out.align.t_bar, Tensor::zeros({config_.N_max - n}),
                              out.align.v_bar};
      out.r_l = tc::concat(parts);
    }
  }

  out.prediction = fusion::late_fusion(out.r_g, out.r_l, fusion_);
  return out;
}

fusion::Prediction Model::predict(const dataio::FeatureRecord& record) const {
  tc::NoGradGuard guard;
  return forward(record).prediction;
}

Tensor Model::pair_loss(const PairOutput& out, std::size_t label, Tensor* L_c_out,
                        Tensor* L_i_out) const {
  Tensor L_c = fusion::classification_loss(out.prediction.logits, label);
  if (L_c_out) *L_c_out = L_c;
  if (!config_.uses_association()) return L_c;
  Tensor L_i = association::invariant_loss(out.assoc.f_image_inv, out.assoc.f_text_inv);
  if (L_i_out) *L_i_out = L_i;
  return tc::add(L_c, tc::scale(L_i, config_.alpha));
}

Tensor Model::orthogonal_loss() const {
  if (!config_.uses_association()) return {};
  return association::orthogonal_loss(association_);
}

std::vector<std::vector<double>> Model::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& p : parameters()) {
    out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  }
  return out;
}

void Model::restore(const std::vector<std::vector<double>>& values) {
  auto params = parameters();
  if (values.size() != params.size()) {
    throw ShapeError("restore: expected " + std::to_string(params.size()) +
                     " tensors, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_values();
    if (dst.size() != values[i].size()) {
      throw ShapeError("restore: tensor '" + params[i].name + "' has " +
                       std::to_string(dst.size()) + " values, got " +
                       std::to_string(values[i].size()));
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace ananet::model
