#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ananet/alignment.hpp"
#include "ananet/association.hpp"
#include "ananet/dataset.hpp"
#include "ananet/encoders.hpp"
#include "ananet/fusion.hpp"
#include "ananet/tensor.hpp"

namespace ananet::model {

using tensorcore::Tensor;

/// Which streams take part.  association_only drops the local stream,
/// alignment_only drops the global one, and concat_only classifies
/// [f_image ⊕ f_text] with a single linear head and no stream modules.
enum class ModelMode { full, association_only, alignment_only, concat_only };

std::string to_string(ModelMode mode);
ModelMode parse_model_mode(std::string_view name);

struct ModelConfig {
  std::size_t d = 1024;
  std::size_t d_r = 1024;
  std::size_t d_G = 200;
  std::size_t d_B = 768;
  std::size_t d_inv = 200;
  std::size_t d_var = 200;
  std::size_t K = 36;
  std::size_t N_max = 100;
  double lambda = 0.7;
  double eta = 1.3;
  double alpha = 0.1;
  double beta = 2.0;
  alignment::AttentionAxis attention_axis = alignment::AttentionAxis::attended;
  double attention_scale = 1.0;
  association::FusionVariant fusion_variant = association::FusionVariant::inv;
  ModelMode mode = ModelMode::full;

  void validate() const;

  bool uses_association() const;
  bool uses_alignment() const;
  /// Length of r_g as fed to the classifier (0 when the stream is off).
  std::size_t global_length() const;
  /// K + N_max: t_bar is zero-padded to N_max slots before v_bar.
  std::size_t local_length() const;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct PairOutput {
  encoders::ModalState modal;
  association::DecomposedFeatures assoc;  // empty unless the global stream runs
  alignment::AlignmentState align;        // empty unless the local stream runs
  Tensor r_g;
  Tensor r_l;  // padded to local_length()
  fusion::Prediction prediction;
};

class Model {
 public:
  Model() = default;
  /// Fresh parameters drawn from a generator seeded with `seed`.
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// λ and η are read from the config at every forward pass.
  void set_fusion_weights(double lambda, double eta);

  /// Every parameter tensor in a fixed order with stable names.
  std::vector<NamedTensor> parameters() const;

  PairOutput forward(const dataio::FeatureRecord& record) const;
  /// Same as forward but without recording a tape.
  fusion::Prediction predict(const dataio::FeatureRecord& record) const;

  /// L_c + α·L_i for one pair (the L_i term only when the global stream runs).
  Tensor pair_loss(const PairOutput& out, std::size_t label, Tensor* L_c = nullptr,
                   Tensor* L_i = nullptr) const;
  /// β·L_o applies once per batch; undefined when the association module is off.
  Tensor orthogonal_loss() const;

  /// Checks a record's widths and region count against the config.
  void check_record(const dataio::FeatureRecord& record) const;

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  ModelConfig config_;
  encoders::EncoderParams encoder_;
  association::AssociationParams association_;
  fusion::FusionParams fusion_;
};

}  // namespace ananet::model
