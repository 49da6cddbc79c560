#include "ananet/association.hpp"

#include "ananet/encoders.hpp"
#include "ananet/error.hpp"
#include "ananet/ops.hpp"

namespace ananet::association {

namespace tc = tensorcore;

AssociationParams init_association(std::size_t d, std::size_t d_inv, std::size_t d_var,
                                   std::mt19937_64& rng) {
  return {encoders::init_weight(d_inv, d, rng), encoders::init_weight(d_var, d, rng),
          encoders::init_weight(d_var, d, rng)};
}

std::pair<Tensor, Tensor> decompose(const Tensor& f, const AssociationParams& params,
                                    Modality modality) {
  if (f.rank() != 1 || f.size() != params.W.cols()) {
    throw ShapeError("decompose: pooled feature " + f.shape_string() +
                     " does not match projection " + params.W.shape_string());
  }
  const Tensor& P = modality == Modality::image ? params.P_image : params.P_text;
  return {tc::matvec(params.W, f), tc::matvec(P, f)};
}

std::vector<Constituent> constituents(FusionVariant variant) {
  using C = Constituent;
  switch (variant) {
    case FusionVariant::inv:
      return {C::image_inv, C::text_inv};
    case FusionVariant::var:
      return {C::image_var, C::text_var};
    case FusionVariant::raw:
      return {C::image_raw, C::text_raw};
    case FusionVariant::var_raw:
      return {C::image_var, C::text_var, C::image_raw, C::text_raw};
    case FusionVariant::inv_raw:
      return {C::image_inv, C::text_inv, C::image_raw, C::text_raw};
    case FusionVariant::inv_var:
      return {C::image_var, C::image_inv, C::text_inv, C::text_var};
    case FusionVariant::all:
      return {C::image_var, C::image_inv, C::text_inv, C::text_var, C::image_raw,
              C::text_raw};
  }
  throw ConfigError("unknown fusion variant");
}

std::string to_string(FusionVariant variant) {
  switch (variant) {
    case FusionVariant::inv: return "inv";
    case FusionVariant::var: return "var";
    case FusionVariant::raw: return "raw";
    case FusionVariant::var_raw: return "var+raw";
    case FusionVariant::inv_raw: return "inv+raw";
    case FusionVariant::inv_var: return "inv+var";
    case FusionVariant::all: return "all";
  }
  return "?";
}

FusionVariant parse_fusion_variant(std::string_view name) {
  for (auto v : kAllFusionVariants) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown fusion_variant '" + std::string(name) +
                    "' (expected inv, var, raw, var+raw, inv+raw, inv+var or all)");
}

const Tensor& DecomposedFeatures::get(Constituent c) const {
  switch (c) {
    case Constituent::image_inv: return f_image_inv;
    case Constituent::text_inv: return f_text_inv;
    case Constituent::image_var: return f_image_var;
    case Constituent::text_var: return f_text_var;
    case Constituent::image_raw: return f_image;
    case Constituent::text_raw: return f_text;
  }
  throw ConfigError("unknown constituent");
}

Tensor build_global(const DecomposedFeatures& features,
                    std::span<const Constituent> selection) {
  if (selection.empty()) throw ConfigError("build_global: empty feature selection");
  std::vector<Tensor> parts;
  parts.reserve(selection.size());
  for (auto c : selection) parts.push_back(features.get(c));
  return tc::concat(parts);
}

Tensor build_global(const DecomposedFeatures& features, FusionVariant variant) {
  return build_global(features, constituents(variant));
}

std::size_t global_length(FusionVariant variant, std::size_t d, std::size_t d_inv,
                          std::size_t d_var) {
  std::size_t total = 0;
  for (auto c : constituents(variant)) {
    switch (c) {
      case Constituent::image_inv:
      case Constituent::text_inv: total += d_inv; break;
      case Constituent::image_var:
      case Constituent::text_var: total += d_var; break;
      case Constituent::image_raw:
      case Constituent::text_raw: total += d; break;
    }
  }
  return total;
}

DecomposedFeatures associate(const Tensor& f_image, const Tensor& f_text,
                             const AssociationParams& params, FusionVariant variant) {
  DecomposedFeatures out;
  out.f_image = f_image;
  out.f_text = f_text;
  std::tie(out.f_image_inv, out.f_image_var) = decompose(f_image, params, Modality::image);
  std::tie(out.f_text_inv, out.f_text_var) = decompose(f_text, params, Modality::text);
  out.r_g = build_global(out, variant);
  return out;
}

Tensor invariant_loss(const Tensor& f_image_inv, const Tensor& f_text_inv) {
  return tc::norm2(tc::sub(f_image_inv, f_text_inv));
}

Tensor orthogonal_loss(const AssociationParams& params) {
  const Tensor& W = params.W;
  return tc::add(tc::norm2(tc::matmul(W, tc::transpose(params.P_image))),
                 tc::norm2(tc::matmul(W, tc::transpose(params.P_text))));
}

}  // namespace ananet::association
