#pragma once

// Planted-structure image-text pairs for the three correlation classes.
//
// All rows of both modalities start from a per-modality mean plus Gaussian
// noise. On top of that, per pair:
//   explicit (2):   min(3,K) region rows and min(3,N) token rows receive
//                   alignment_strength-scaled copies of anchors drawn from a
//                   dataset-wide bank, one anchor per (region, token) row pair;
//   implicit (1):   every row of both modalities receives the pair's shared
//                   latent z (from a dataset-wide shared subspace), scaled by
//                   association_strength;
//   irrelevant (0): each modality receives its own latent, drawn
//                   independently from a modality-private subspace.
// Anchors and latents live in R^max(d_r, d_G+d_B); each modality keeps the
// leading coordinates that fit its width (a token row is glove ⊕ context).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ananet/dataset.hpp"

namespace ananet::dataio {

enum class Split { train = 0, dev = 1, test = 2 };
inline constexpr std::array<const char*, 3> kSplitNames = {"train", "dev", "test"};

struct SynthConfig {
  // [split][class], classes ordered irrelevant, implicit, explicit.
  std::array<std::array<std::size_t, 3>, 3> n_per_class{
      {{300, 300, 300}, {50, 50, 50}, {50, 50, 50}}};
  std::size_t K = 8;
  std::size_t N = 12;
  std::size_t d_r = 32;
  std::size_t d_G = 8;
  std::size_t d_B = 24;
  double alignment_strength = 2.0;
  double association_strength = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 17;

  /// Throws ConfigError for zero counts/dims, non-positive strengths or
  /// negative noise.
  void validate() const;
  void set_balanced(std::size_t train, std::size_t dev, std::size_t test);
};

inline constexpr std::size_t kAnchorBankSize = 16;
inline constexpr std::size_t kLatentRank = 4;
inline constexpr std::size_t kAnchorsPerPair = 3;

/// Where anchors were planted in an explicit pair (empty for other classes).
struct PlantInfo {
  std::vector<std::size_t> region_rows;
  std::vector<std::size_t> token_rows;  // token_rows[k] pairs with region_rows[k]
  std::vector<std::size_t> anchor_ids;
};

struct SyntheticSplit {
  std::vector<FeatureRecord> records;
  std::vector<PlantInfo> plants;  // parallel to records
};

struct SyntheticDataset {
  std::array<SyntheticSplit, 3> splits;
  const SyntheticSplit& operator[](Split s) const {
    return splits[static_cast<std::size_t>(s)];
  }
};

/// Pure function of cfg. Values are rounded to single precision so in-memory
/// records equal what a later load_dataset returns.
SyntheticDataset synthesize(const SynthConfig& cfg);

struct SynthManifests {
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;
};

/// Synthesizes and writes the dataset under `out_dir` (ANAF files plus one
/// JSON-lines manifest per split).
SynthManifests generate_synthetic(const SynthConfig& cfg,
                                  const std::filesystem::path& out_dir);

}  // namespace ananet::dataio
