#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ananet/tensor.hpp"

namespace ananet::association {

using tensorcore::Tensor;

/// Shared projection W and the two modality-private projections.
struct AssociationParams {
  Tensor W;        // d_inv × d
  Tensor P_image;  // d_var × d
  Tensor P_text;   // d_var × d
};

AssociationParams init_association(std::size_t d, std::size_t d_inv, std::size_t d_var,
                                   std::mt19937_64& rng);

enum class Modality { image, text };

/// Returns (W·f, P_modality·f).
std::pair<Tensor, Tensor> decompose(const Tensor& f, const AssociationParams& params,
                                    Modality modality);

enum class Constituent { image_inv, text_inv, image_var, text_var, image_raw, text_raw };

/// Feature sets for the global representation; one per ablation row, in the
/// same order: inv (default), var, raw, var+raw, inv+raw, inv+var, all.
enum class FusionVariant { inv, var, raw, var_raw, inv_raw, inv_var, all };

inline constexpr FusionVariant kAllFusionVariants[] = {
    FusionVariant::inv,     FusionVariant::var,     FusionVariant::raw,
    FusionVariant::var_raw, FusionVariant::inv_raw, FusionVariant::inv_var,
    FusionVariant::all};

std::vector<Constituent> constituents(FusionVariant variant);
std::string to_string(FusionVariant variant);
/// Accepts the config spellings "inv", "var", "raw", "var+raw", "inv+raw",
/// "inv+var", "all"; throws ConfigError otherwise.
FusionVariant parse_fusion_variant(std::string_view name);

struct DecomposedFeatures {
  Tensor f_image, f_text;
  Tensor f_image_inv, f_text_inv;
  Tensor f_image_var, f_text_var;
  Tensor r_g;

  const Tensor& get(Constituent c) const;
};

/// Concatenates the selected features in the listed order.
Tensor build_global(const DecomposedFeatures& features,
                    std::span<const Constituent> selection);
Tensor build_global(const DecomposedFeatures& features, FusionVariant variant);

std::size_t global_length(FusionVariant variant, std::size_t d, std::size_t d_inv,
                          std::size_t d_var);

/// Decomposes both pooled features and builds r_g for `variant`.
DecomposedFeatures associate(const Tensor& f_image, const Tensor& f_text,
                             const AssociationParams& params, FusionVariant variant);

/// ‖a - b‖₂ (unsquared).
Tensor invariant_loss(const Tensor& f_image_inv, const Tensor& f_text_inv);

/// ‖W·P_imageᵀ‖_F + ‖W·P_textᵀ‖_F: zero iff every row of W is orthogonal to
/// every row of both private projections.
Tensor orthogonal_loss(const AssociationParams& params);

}  // namespace ananet::association
