#include <cstring>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ananet/anaf.hpp"
#include "ananet/error.hpp"
#include "ananet/gradsuite.hpp"
#include "ananet/model_io.hpp"
#include "ananet/synthetic.hpp"
#include "ananet/trainer.hpp"
#include "support.hpp"

namespace md = ananet::model;
using ananet::FormatError;
using ananet::RunConfig;
using support::Gen;

namespace {

RunConfig toy_run_config(md::ModelMode mode = md::ModelMode::full) {
  RunConfig c;
  c.model = ananet::toy_model_config();
  c.model.mode = mode;
  c.train.epochs = 4;
  c.train.seed = 99;
  return c;
}

std::string load_error(std::span<const std::uint8_t> bytes, std::size_t* offset = nullptr) {
  try {
    ananet::decode_model(bytes);
  } catch (const FormatError& e) {
    if (offset) *offset = e.offset();
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ModelFile, HeaderLayout) {
  const auto cfg = toy_run_config();
  md::Model m(cfg.model, 1);
  const auto bytes = ananet::encode_model(m, cfg);
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(std::memcmp(bytes.data(), "ANAM", 4), 0);
  EXPECT_EQ(bytes[4] | (bytes[5] << 8), ananet::kModelFileVersion);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], 0);
  const std::size_t header_len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (bytes[11] << 24);
  const auto header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  EXPECT_EQ(header["tensors"].size(), m.parameters().size());
  EXPECT_EQ(header["config"]["seed"], 99);
}

TEST(ModelFile, RoundTripRestoresConfigAndParametersExactly) {
  for (auto mode : {md::ModelMode::full, md::ModelMode::association_only,
                    md::ModelMode::alignment_only, md::ModelMode::concat_only}) {
    auto cfg = toy_run_config(mode);
    md::Model m(cfg.model, 3);
    ananet::randomize_parameters(m, 3);
    auto loaded = ananet::decode_model(ananet::encode_model(m, cfg));
    EXPECT_EQ(loaded.model.snapshot(), m.snapshot()) << md::to_string(mode);
    EXPECT_EQ(ananet::to_json(loaded.config), ananet::to_json(cfg));
    EXPECT_EQ(ananet::encode_model(loaded.model, loaded.config), ananet::encode_model(m, cfg));
  }
}

TEST(ModelFile, EvaluationIsBitIdenticalAfterReload) {
  ananet::dataio::SynthConfig sc;
  sc.set_balanced(6, 4, 1);
  sc.K = 3;
  sc.N = 5;
  sc.d_r = 10;
  sc.d_G = 3;
  sc.d_B = 5;
  const auto data = ananet::dataio::synthesize(sc);
  RunConfig cfg;
  cfg.model.d = 8;
  cfg.model.d_inv = 3;
  cfg.model.d_var = 2;
  cfg.model.N_max = 5;
  cfg.train.epochs = 3;
  cfg.train.batch = 8;
  ananet::infer_input_dims(cfg, data[ananet::dataio::Split::train].records);
  md::Model m(cfg.model, cfg.train.seed);
  ananet::trainer::train(m, data[ananet::dataio::Split::train].records, {}, cfg.train);

  support::TempDir dir("model_io");
  ananet::save_model(dir / "m.anam", m, cfg);
  const auto loaded = ananet::load_model(dir / "m.anam");
  const auto& dev = data[ananet::dataio::Split::dev].records;
  const auto a = ananet::trainer::evaluate(m, dev);
  const auto b = ananet::trainer::evaluate(loaded.model, dev);
  EXPECT_EQ(a.confusion, b.confusion);
  for (const auto& r : dev) {
    const auto pa = m.predict(r), pb = loaded.model.predict(r);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(pa.y_hat[c], pb.y_hat[c]);
  }
}

TEST(ModelFile, CorruptionIsFormatErrorWithOffset) {
  const auto cfg = toy_run_config();
  md::Model m(cfg.model, 1);
  const auto good = ananet::encode_model(m, cfg);

  auto bad = good;
  bad[0] = 'X';
  std::size_t off = 99;
  auto msg = load_error(bad, &off);
  EXPECT_NE(msg.find("model file (format v1)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("magic"), std::string::npos);
  EXPECT_EQ(off, 0u);

  bad = good;
  bad[4] = 7;
  msg = load_error(bad, &off);
  EXPECT_NE(msg.find("unsupported version 7"), std::string::npos) << msg;
  EXPECT_EQ(off, 4u);

  bad = good;
  bad[12] = '!';
  msg = load_error(bad);
  EXPECT_NE(msg.find("not valid JSON"), std::string::npos) << msg;

  bad = good;
  bad.push_back(0);
  msg = load_error(bad, &off);
  EXPECT_NE(msg.find("1 trailing bytes"), std::string::npos) << msg;
  EXPECT_EQ(off, good.size());

  EXPECT_NE(load_error(std::span(good).first(3)).find("model file (format v1)"),
            std::string::npos);
}

TEST(ModelFile, EveryTruncationIsRejected) {
  const auto cfg = toy_run_config(md::ModelMode::concat_only);
  md::Model m(cfg.model, 1);
  const auto good = ananet::encode_model(m, cfg);
  for (std::size_t n = 0; n < good.size(); ++n) {
    std::size_t off = 0;
    const auto msg = load_error(std::span(good).first(n), &off);
    ASSERT_NE(msg.find("model file (format v1)"), std::string::npos) << "length " << n;
    ASSERT_LE(off, n) << "length " << n;
  }
}

TEST(ModelFile, ConfigMismatchIsRejected) {
  auto cfg = toy_run_config();
  md::Model m(cfg.model, 1);
  auto other = cfg;
  other.model.d_inv += 1;
  const auto msg = load_error(ananet::encode_model(m, other));
  EXPECT_NE(msg.find("model file (format v1)"), std::string::npos) << msg;
}

TEST(ModelFile, MissingFileIsError) {
  support::TempDir dir("model_io_missing");
  EXPECT_THROW(ananet::load_model(dir / "nope.anam"), ananet::Error);
}
