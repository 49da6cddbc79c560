#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ananet/matrix.hpp"

namespace ananet::dataio {

inline constexpr int kIrrelevant = 0;
inline constexpr int kImplicitRelevant = 1;
inline constexpr int kExplicitRelevant = 2;
inline constexpr int kNumClasses = 3;

/// One image-text pair.
struct FeatureRecord {
  std::string id;
  int label = kIrrelevant;
  Matrix region_feats;  // K × d_r
  Matrix word_vecs;     // N × d_G
  Matrix ctx_vecs;      // N × d_B

  std::size_t num_regions() const { return region_feats.rows; }
  std::size_t num_tokens() const { return word_vecs.rows; }
};

/// Throws DataError if the label, shapes or values are invalid.
void validate_record(const FeatureRecord& record);

struct ManifestEntry {
  std::string id;
  int label = 0;
  // Relative to the manifest's directory.
  std::string region_path;
  std::string glove_path;
  std::string context_path;
  std::size_t num_regions = 0;
  std::size_t num_tokens = 0;
};

struct DatasetManifest {
  std::string split;
  std::vector<ManifestEntry> entries;
};

/// Parses a JSON-lines manifest. Errors name the 1-based line number.
DatasetManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path,
                    const DatasetManifest& manifest);

/// Loads every record listed in the manifest, in manifest order.
std::vector<FeatureRecord> load_dataset(const std::filesystem::path& manifest_path);

/// Writes `<root>/<split>/<id>.{reg,glv,ctx}.anaf` and returns its manifest entry.
ManifestEntry write_record(const std::filesystem::path& root, const std::string& split,
                           const FeatureRecord& record);

/// `<root>/<split>.jsonl`
std::filesystem::path manifest_path(const std::filesystem::path& root,
                                    const std::string& split);

}  // namespace ananet::dataio
