#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ananet/config.hpp"
#include "ananet/model.hpp"

namespace ananet {

// Model file layout, little-endian:
//   "ANAM" | u16 version | u16 reserved (0) | u32 header length | header JSON
//   | u32 tensor count | tensors, each one ANAF array stored as float64.
// The header holds {"config": RunConfig, "tensors": [{name, dims}, ...]}.
inline constexpr std::uint16_t kModelFileVersion = 1;

struct LoadedModel {
  RunConfig config;
  model::Model model;
};

std::vector<std::uint8_t> encode_model(const model::Model& model, const RunConfig& config);
LoadedModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const model::Model& model,
                const RunConfig& config);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace ananet
