#include "ananet/dataset.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "ananet/anaf.hpp"
#include "ananet/error.hpp"

namespace ananet::dataio {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

ManifestEntry parse_entry(const std::string& line, std::size_t line_no) {
  const std::string where = "manifest line " + std::to_string(line_no) + ": ";
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + "invalid JSON (" + e.what() + ")");
  }
  try {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.label = j.at("label").get<int>();
    e.region_path = j.at("region").get<std::string>();
    e.glove_path = j.at("glove").get<std::string>();
    e.context_path = j.at("context").get<std::string>();
    e.num_regions = j.at("K").get<std::size_t>();
    e.num_tokens = j.at("N").get<std::size_t>();
    if (e.label < 0 || e.label >= kNumClasses) {
      throw DataError(where + "label " + std::to_string(e.label) +
                      " not in {0,1,2}");
    }
    if (e.id.empty()) throw DataError(where + "empty id");
    if (e.num_regions == 0 || e.num_tokens == 0) {
      throw DataError(where + "K and N must be >= 1");
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(where + "missing or mistyped field (" + ex.what() + ")");
  }
}

Matrix load_part(const fs::path& path, const std::string& where) {
  try {
    return read_matrix(path);
  } catch (const FormatError& e) {
    throw DataError(where + path.string() + ": " + e.what());
  }
}

}  // namespace

void validate_record(const FeatureRecord& r) {
  const std::string where = "record '" + r.id + "': ";
  if (r.label < 0 || r.label >= kNumClasses) {
    throw DataError(where + "label " + std::to_string(r.label) + " not in {0,1,2}");
  }
  if (r.region_feats.rows == 0 || r.region_feats.cols == 0) {
    throw DataError(where + "empty region matrix");
  }
  if (r.word_vecs.rows == 0) throw DataError(where + "no tokens");
  if (r.ctx_vecs.rows != r.word_vecs.rows) {
    throw DataError(where + "word-vector rows " + std::to_string(r.word_vecs.rows) +
                    " differ from context rows " + std::to_string(r.ctx_vecs.rows));
  }
  for (const Matrix* m : {&r.region_feats, &r.word_vecs, &r.ctx_vecs}) {
    if (m->values.size() != m->rows * m->cols) {
      throw DataError(where + "matrix storage does not match " + shape(*m));
    }
    for (double v : m->values) {
      if (!std::isfinite(v)) throw DataError(where + "non-finite feature value");
    }
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  manifest.split = path.stem().string();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto entry = parse_entry(line, line_no);
    if (!seen.insert(entry.id).second) {
      throw DataError("manifest line " + std::to_string(line_no) + ": duplicate id '" +
                      entry.id + "'");
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::string text;
  for (const auto& e : manifest.entries) {
    ordered_json j;
    j["split"] = manifest.split;
    j["id"] = e.id;
    j["label"] = e.label;
    j["K"] = e.num_regions;
    j["N"] = e.num_tokens;
    j["region"] = e.region_path;
    j["glove"] = e.glove_path;
    j["context"] = e.context_path;
    text += j.dump();
    text += '\n';
  }
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<FeatureRecord> load_dataset(const fs::path& path) {
  const auto manifest = read_manifest(path);
  const fs::path root = path.parent_path();
  std::vector<FeatureRecord> records;
  records.reserve(manifest.entries.size());
  std::size_t line_no = 0;
  for (const auto& e : manifest.entries) {
    ++line_no;
    const std::string where = "record '" + e.id + "' (manifest entry " +
                              std::to_string(line_no) + "): ";
    FeatureRecord r;
    r.id = e.id;
    r.label = e.label;
    r.region_feats = load_part(root / e.region_path, where);
    r.word_vecs = load_part(root / e.glove_path, where);
    r.ctx_vecs = load_part(root / e.context_path, where);
    if (r.region_feats.rows != e.num_regions) {
      throw DataError(where + "dimension mismatch: region matrix has K=" +
                      std::to_string(r.region_feats.rows) + " but manifest says K=" +
                      std::to_string(e.num_regions));
    }
    if (r.word_vecs.rows != e.num_tokens || r.ctx_vecs.rows != e.num_tokens) {
      throw DataError(where + "dimension mismatch: token matrices are " +
                      shape(r.word_vecs) + " and " + shape(r.ctx_vecs) +
                      " but manifest says N=" + std::to_string(e.num_tokens));
    }
    validate_record(r);
    records.push_back(std::move(r));
  }
  return records;
}

ManifestEntry write_record(const fs::path& root, const std::string& split,
                           const FeatureRecord& r) {
  validate_record(r);
  ManifestEntry e;
  e.id = r.id;
  e.label = r.label;
  e.num_regions = r.num_regions();
  e.num_tokens = r.num_tokens();
  e.region_path = split + "/" + r.id + ".reg.anaf";
  e.glove_path = split + "/" + r.id + ".glv.anaf";
  e.context_path = split + "/" + r.id + ".ctx.anaf";
  write_matrix(root / e.region_path, r.region_feats);
  write_matrix(root / e.glove_path, r.word_vecs);
  write_matrix(root / e.context_path, r.ctx_vecs);
  return e;
}

fs::path manifest_path(const fs::path& root, const std::string& split) {
  return root / (split + ".jsonl");
}

}  // namespace ananet::dataio
