#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ananet/anaf.hpp"
#include "ananet/dataset.hpp"
#include "ananet/error.hpp"
#include "ananet/synthetic.hpp"
#include "support.hpp"

namespace dio = ananet::dataio;
using ananet::Matrix;
using support::Gen;
using support::kPropertyCases;
using support::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

Matrix round_single(Matrix m) {
  for (auto& v : m.values) v = static_cast<double>(static_cast<float>(v));
  return m;
}

dio::FeatureRecord small_record(const std::string& id, int label, std::size_t K,
                                std::size_t N, Gen& g) {
  dio::FeatureRecord r;
  r.id = id;
  r.label = label;
  r.region_feats = round_single(g.matrix(K, 4));
  r.word_vecs = round_single(g.matrix(N, 2));
  r.ctx_vecs = round_single(g.matrix(N, 3));
  return r;
}

std::string manifest_line(const dio::ManifestEntry& e, int label) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["label"] = label;
  j["K"] = e.num_regions;
  j["N"] = e.num_tokens;
  j["region"] = e.region_path;
  j["glove"] = e.glove_path;
  j["context"] = e.context_path;
  return j.dump() + "\n";
}

double row_cosine(std::span<const double> a, std::span<const double> b, std::size_t len) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < len; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> token_row(const dio::FeatureRecord& r, std::size_t j) {
  std::vector<double> out(r.word_vecs.row(j).begin(), r.word_vecs.row(j).end());
  out.insert(out.end(), r.ctx_vecs.row(j).begin(), r.ctx_vecs.row(j).end());
  return out;
}

}  // namespace

TEST(Anaf, IdentityRoundTripsBitExactly) {
  TempDir dir("anaf");
  Matrix I(2, 2, {1, 0, 0, 1});
  dio::write_matrix(dir / "i.anaf", I);
  EXPECT_EQ(dio::read_matrix(dir / "i.anaf"), I);
}

TEST(Anaf, HeaderSizeArithmeticOracle) {
  TempDir dir("anaf");
  Matrix m(36, 1024);
  dio::write_matrix(dir / "m.anaf", m);
  const auto bytes = dio::read_file_bytes(dir / "m.anaf");
  const std::size_t header = 4 + 2 + 1 + 1 + 2 * 4;
  EXPECT_EQ(header, 16u);
  EXPECT_EQ(dio::anaf_header_size(2), header);
  EXPECT_EQ(bytes.size(), header + 36u * 1024u * 4u);
  EXPECT_EQ(bytes.size() - header, 147456u);
}

TEST(Anaf, ByteLayoutOracle) {
  std::vector<std::uint8_t> out;
  dio::encode_anaf({{2, 3}, {1.5, -2, 0, 4, 5, 6}}, dio::Dtype::float32, out);
  ASSERT_EQ(out.size(), 16u + 6u * 4u);
  EXPECT_EQ(std::string(out.begin(), out.begin() + 4), "ANAF");
  EXPECT_EQ(out[4], 1);  // version, little-endian
  EXPECT_EQ(out[5], 0);
  EXPECT_EQ(out[6], 0);  // dtype single
  EXPECT_EQ(out[7], 2);  // rank
  EXPECT_EQ((std::vector<std::uint8_t>(out.begin() + 8, out.begin() + 16)),
            (std::vector<std::uint8_t>{2, 0, 0, 0, 3, 0, 0, 0}));
  // 1.5f = 0x3FC00000, stored little-endian.
  EXPECT_EQ((std::vector<std::uint8_t>(out.begin() + 16, out.begin() + 20)),
            (std::vector<std::uint8_t>{0x00, 0x00, 0xC0, 0x3F}));
  // -2.0f = 0xC0000000
  EXPECT_EQ((std::vector<std::uint8_t>(out.begin() + 20, out.begin() + 24)),
            (std::vector<std::uint8_t>{0x00, 0x00, 0x00, 0xC0}));
}

TEST(Anaf, EmptyFileIsFormatErrorAtOffsetZero) {
  TempDir dir("anaf");
  write_text(dir / "e.anaf", "");
  try {
    dio::read_matrix(dir / "e.anaf");
    FAIL() << "expected a format error";
  } catch (const ananet::FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Anaf, CorruptionErrorsCarryOffsets) {
  std::vector<std::uint8_t> good;
  dio::encode_anaf({{1, 2}, {1, 2}}, dio::Dtype::float32, good);

  auto expect_offset = [](std::vector<std::uint8_t> bytes, std::size_t offset) {
    std::size_t pos = 0;
    try {
      dio::decode_anaf(bytes, pos);
      ADD_FAILURE() << "expected a format error";
    } catch (const ananet::FormatError& e) {
      EXPECT_EQ(e.offset(), offset) << e.what();
    }
  };
  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_offset(bad_magic, 0);
  auto bad_version = good;
  bad_version[4] = 2;
  expect_offset(bad_version, 4);
  auto bad_dtype = good;
  bad_dtype[6] = 9;
  expect_offset(bad_dtype, 6);
  auto big_rank = good;
  big_rank[7] = 3;
  expect_offset(big_rank, 7);
}

TEST(Anaf, TruncatedPayloadReportsPayloadOffset) {
  std::vector<std::uint8_t> bytes;
  dio::encode_anaf({{1, 2}, {1, 2}}, dio::Dtype::float32, bytes);
  bytes.resize(bytes.size() - 1);
  std::size_t pos = 0;
  try {
    dio::decode_anaf(bytes, pos);
    FAIL();
  } catch (const ananet::FormatError& e) {
    EXPECT_GE(e.offset(), 16u);
  }
}

TEST(Anaf, Float64ArraysRoundTripExactly) {
  Gen g(11);
  auto values = g.normals(7);
  std::vector<std::uint8_t> bytes;
  dio::encode_anaf({{7}, values}, dio::Dtype::float64, bytes);
  std::size_t pos = 0;
  auto back = dio::decode_anaf(bytes, pos);
  EXPECT_EQ(pos, bytes.size());
  EXPECT_EQ(back.values, values);
}

TEST(Anaf, RoundTripIsSinglePrecisionIdentityProperty) {
  Gen g(12);
  for (int c = 0; c < kPropertyCases; ++c) {
    const std::size_t r = g.index(1, 6), k = g.index(1, 6);
    Matrix m = g.matrix(r, k, g.uniform(1e-3, 1e4));
    std::vector<std::uint8_t> bytes;
    dio::encode_anaf({{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(k)}, m.values},
                     dio::Dtype::float32, bytes);
    std::size_t pos = 0;
    auto back = dio::decode_anaf(bytes, pos);
    ASSERT_EQ(back.values, round_single(m).values) << "case " << c;
  }
}

TEST(Manifest, ThreeValidLinesLoadInOrder) {
  TempDir dir("manifest");
  Gen g(13);
  std::string text;
  for (int i = 0; i < 3; ++i) {
    auto rec = small_record("pair" + std::to_string(2 - i), i, 3, 2 + i, g);
    text += manifest_line(dio::write_record(dir.path(), "train", rec), i);
  }
  write_text(dir / "train.jsonl", text);
  auto records = dio::load_dataset(dir / "train.jsonl");
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].id, "pair2");
  EXPECT_EQ(records[1].id, "pair1");
  EXPECT_EQ(records[2].id, "pair0");
  EXPECT_EQ(records[2].label, 2);
  EXPECT_EQ(records[2].num_tokens(), 4u);
}

TEST(Manifest, BadLabelNamesLineNumber) {
  TempDir dir("manifest");
  Gen g(14);
  auto e1 = dio::write_record(dir.path(), "train", small_record("a", 0, 2, 2, g));
  auto e2 = dio::write_record(dir.path(), "train", small_record("b", 1, 2, 2, g));
  write_text(dir / "train.jsonl", manifest_line(e1, 0) + manifest_line(e2, 4));
  try {
    dio::load_dataset(dir / "train.jsonl");
    FAIL() << "expected a data error";
  } catch (const ananet::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("label 4"), std::string::npos) << e.what();
  }
}

TEST(Manifest, RegionCountMismatchIsDimensionError) {
  TempDir dir("manifest");
  Gen g(15);
  auto e = dio::write_record(dir.path(), "train", small_record("a", 2, 35, 3, g));
  e.num_regions = 36;
  write_text(dir / "train.jsonl", manifest_line(e, 2));
  try {
    dio::load_dataset(dir / "train.jsonl");
    FAIL() << "expected a data error";
  } catch (const ananet::DataError& ex) {
    const std::string msg = ex.what();
    EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("K=35"), std::string::npos) << msg;
    EXPECT_NE(msg.find("K=36"), std::string::npos) << msg;
  }
}

TEST(Manifest, MissingFileAndDuplicateIdAreErrors) {
  TempDir dir("manifest");
  Gen g(16);
  auto e = dio::write_record(dir.path(), "train", small_record("a", 0, 2, 2, g));
  write_text(dir / "dup.jsonl", manifest_line(e, 0) + manifest_line(e, 0));
  EXPECT_THROW(dio::read_manifest(dir / "dup.jsonl"), ananet::DataError);

  auto missing = e;
  missing.region_path = "train/nope.reg.anaf";
  write_text(dir / "missing.jsonl", manifest_line(missing, 0));
  EXPECT_THROW(dio::load_dataset(dir / "missing.jsonl"), ananet::DataError);
  EXPECT_THROW(dio::load_dataset(dir / "absent.jsonl"), ananet::DataError);

  write_text(dir / "junk.jsonl", "{not json\n");
  EXPECT_THROW(dio::read_manifest(dir / "junk.jsonl"), ananet::DataError);
}

TEST(Manifest, WriteReadRoundTrip) {
  TempDir dir("manifest");
  Gen g(17);
  dio::DatasetManifest m;
  m.split = "dev";
  for (int i = 0; i < 4; ++i)
    m.entries.push_back(dio::write_record(dir.path(), "dev", small_record("r" + std::to_string(i), i % 3, 2, 3, g)));
  dio::write_manifest(dio::manifest_path(dir.path(), "dev"), m);
  auto back = dio::read_manifest(dir / "dev.jsonl");
  EXPECT_EQ(back.split, "dev");
  ASSERT_EQ(back.entries.size(), 4u);
  EXPECT_EQ(back.entries[3].id, "r3");
  EXPECT_EQ(back.entries[3].region_path, m.entries[3].region_path);
}

TEST(Record, ValidationRejectsBadRecords) {
  Gen g(18);
  auto r = small_record("x", 1, 2, 2, g);
  EXPECT_NO_THROW(dio::validate_record(r));
  auto bad = r;
  bad.label = 3;
  EXPECT_THROW(dio::validate_record(bad), ananet::DataError);
  bad = r;
  bad.ctx_vecs = Matrix(3, 3);
  EXPECT_THROW(dio::validate_record(bad), ananet::DataError);
  bad = r;
  bad.region_feats.values[0] = NAN;
  EXPECT_THROW(dio::validate_record(bad), ananet::DataError);
}

namespace {

dio::SynthConfig tiny_synth(std::uint64_t seed) {
  dio::SynthConfig cfg;
  cfg.set_balanced(4, 2, 2);
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Synthetic, SameSeedGivesByteIdenticalFiles) {
  TempDir a("synth"), b("synth");
  dio::generate_synthetic(tiny_synth(3), a.path());
  dio::generate_synthetic(tiny_synth(3), b.path());
  std::size_t files = 0;
  for (auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    auto rel = std::filesystem::relative(entry.path(), a.path());
    ASSERT_TRUE(std::filesystem::exists(b.path() / rel)) << rel;
    EXPECT_EQ(dio::read_file_bytes(entry.path()), dio::read_file_bytes(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 3u + 3u * 24u);
}

TEST(Synthetic, DifferentSeedsDiffer) {
  auto a = dio::synthesize(tiny_synth(3));
  auto b = dio::synthesize(tiny_synth(4));
  EXPECT_NE(a[dio::Split::train].records[0].region_feats, b[dio::Split::train].records[0].region_feats);
}

TEST(Synthetic, TenPerClassGivesThirtyLines) {
  TempDir dir("synth");
  dio::SynthConfig cfg;
  cfg.set_balanced(10, 10, 10);
  auto paths = dio::generate_synthetic(cfg, dir.path());
  std::ifstream in(paths.train);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) lines += !line.empty();
  EXPECT_EQ(lines, 30u);
  EXPECT_EQ(dio::load_dataset(paths.train).size(), 30u);
}

TEST(Synthetic, ClassCountsHonorConfigExactly) {
  dio::SynthConfig cfg;
  cfg.n_per_class = {{{5, 7, 9}, {1, 2, 3}, {4, 1, 6}}};
  auto data = dio::synthesize(cfg);
  for (std::size_t s = 0; s < 3; ++s) {
    std::array<std::size_t, 3> counts{};
    for (const auto& r : data.splits[s].records) ++counts[static_cast<std::size_t>(r.label)];
    EXPECT_EQ(counts, cfg.n_per_class[s]) << "split " << s;
  }
}

TEST(Synthetic, InMemoryRecordsEqualLoadedRecords) {
  TempDir dir("synth");
  auto cfg = tiny_synth(9);
  auto data = dio::synthesize(cfg);
  auto paths = dio::generate_synthetic(cfg, dir.path());
  auto loaded = dio::load_dataset(paths.dev);
  const auto& mem = data[dio::Split::dev].records;
  ASSERT_EQ(loaded.size(), mem.size());
  for (std::size_t i = 0; i < mem.size(); ++i) {
    EXPECT_EQ(loaded[i].id, mem[i].id);
    EXPECT_EQ(loaded[i].label, mem[i].label);
    EXPECT_EQ(loaded[i].region_feats, mem[i].region_feats);
    EXPECT_EQ(loaded[i].ctx_vecs, mem[i].ctx_vecs);
  }
}

TEST(Synthetic, InvalidConfigIsRejected) {
  auto cfg = tiny_synth(1);
  cfg.n_per_class[0][1] = 0;
  EXPECT_THROW(dio::synthesize(cfg), ananet::ConfigError);
  cfg = tiny_synth(1);
  cfg.alignment_strength = 0;
  EXPECT_THROW(dio::synthesize(cfg), ananet::ConfigError);
  cfg = tiny_synth(1);
  cfg.noise_sigma = -1;
  EXPECT_THROW(dio::synthesize(cfg), ananet::ConfigError);
}

// With no noise, an anchored region row is closer (in cosine) to its own
// anchored token row than any other region/token row combination is.
TEST(Synthetic, AnchoredRowsWinExhaustiveCosineScanOracle) {
  std::size_t checked = 0;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto cfg = tiny_synth(seed);
    cfg.noise_sigma = 0.0;
    auto data = dio::synthesize(cfg);
    const auto& split = data[dio::Split::train];
    for (std::size_t p = 0; p < split.records.size(); ++p) {
      const auto& rec = split.records[p];
      const auto& plant = split.plants[p];
      if (rec.label != dio::kExplicitRelevant) {
        EXPECT_TRUE(plant.region_rows.empty());
        continue;
      }
      ASSERT_EQ(plant.region_rows.size(), 3u);
      const std::size_t len = std::min(cfg.d_r, cfg.d_G + cfg.d_B);
      for (std::size_t k = 0; k < plant.region_rows.size(); ++k) {
        const std::size_t i0 = plant.region_rows[k], j0 = plant.token_rows[k];
        const double planted = row_cosine(rec.region_feats.row(i0), token_row(rec, j0), len);
        for (std::size_t i = 0; i < cfg.K; ++i) {
          for (std::size_t j = 0; j < cfg.N; ++j) {
            bool is_plant = false;
            for (std::size_t q = 0; q < plant.region_rows.size(); ++q)
              is_plant |= plant.region_rows[q] == i && plant.token_rows[q] == j;
            if (is_plant) continue;
            EXPECT_GT(planted, row_cosine(rec.region_feats.row(i), token_row(rec, j), len))
                << "seed " << seed << " pair " << p << " anchor " << k << " vs (" << i << ","
                << j << ")";
            ++checked;
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 0u);
}
