#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ananet/anaf.hpp"
#include "ananet/dataset.hpp"
#include "cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
namespace cli = ananet::cli;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const fs::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      files[fs::relative(e.path(), root).string()] = ananet::dataio::read_file_bytes(e.path());
  return files;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

const std::vector<std::string> kSmall = {"--n-per-class", "6,3,3", "--K", "3", "--N", "4",
                                         "--d-r", "10", "--d-g", "3", "--d-b", "5"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

const std::vector<std::string> kTinyModel = {"--set", "d=8",       "--set", "d_inv=2",
                                             "--set", "d_var=2",   "--set", "N_max=4",
                                             "--set", "epochs=2",  "--set", "batch=8"};

}  // namespace

TEST(Cli, SynthDefaultIsByteIdenticalAcrossRuns) {
  support::TempDir dir("cli_synth");
  auto a = run({"synth", "--out", (dir / "a").string()});
  auto b = run({"synth", "--out", (dir / "b").string()});
  ASSERT_EQ(a.code, cli::kExitOk) << a.err;
  ASSERT_EQ(b.code, cli::kExitOk) << b.err;
  const auto ta = tree_bytes(dir / "a"), tb = tree_bytes(dir / "b");
  EXPECT_TRUE(ta.count("train.jsonl"));
  EXPECT_TRUE(ta.count("test.jsonl"));
  EXPECT_EQ(ta, tb);
  auto c = run({"synth", "--out", (dir / "c").string(), "--seed", "18"});
  ASSERT_EQ(c.code, cli::kExitOk);
  EXPECT_NE(tree_bytes(dir / "c"), ta);
}

TEST(Cli, SynthRejectsZeroCounts) {
  support::TempDir dir("cli_zero");
  auto r = run({"synth", "--out", dir.path().string(), "--n-per-class", "0,0,0"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(run({"synth", "--out", dir.path().string(), "--n-per-class", "1,2"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run({"synth", "--out", dir.path().string(), "--n-per-class", "a,b,c"}).code,
            cli::kExitUsage);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", "x"}).code, cli::kExitUsage);  // --out is required
  auto help = run({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("synth"), std::string::npos);
}

TEST(Cli, TrainThenEvalPrintsMetricsJson) {
  support::TempDir dir("cli_train");
  const auto data = (dir / "data").string();
  ASSERT_EQ(run(with({"synth", "--out", data}, kSmall)).code, cli::kExitOk);
  const auto model = (dir / "m.anam").string(), log = (dir / "log.csv").string();
  auto t = run(with({"train", "--data", data, "--out", model, "--log", log}, kTinyModel));
  ASSERT_EQ(t.code, cli::kExitOk) << t.err;
  EXPECT_NE(t.out.find("best epoch"), std::string::npos);
  EXPECT_NE(t.err.find("epoch 2"), std::string::npos);
  EXPECT_EQ(slurp(log).substr(0, 7), "epoch,L");

  const auto json_path = (dir / "eval.json").string();
  auto e = run({"eval", "--model", model, "--data", data, "--json", json_path});
  ASSERT_EQ(e.code, cli::kExitOk) << e.err;
  const auto j = nlohmann::json::parse(e.out);
  for (const char* key : {"accuracy", "weighted_f1", "f_exr", "f_imr", "f_irr", "confusion"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["total"], 9);
  EXPECT_EQ(slurp(json_path), e.out);
  EXPECT_EQ(run({"eval", "--model", model, "--data", data, "--split", "dev"}).code, cli::kExitOk);
}

TEST(Cli, SameSeedTrainingIsByteIdentical) {
  support::TempDir dir("cli_repeat");
  const auto data = (dir / "data").string();
  ASSERT_EQ(run(with({"synth", "--out", data}, kSmall)).code, cli::kExitOk);
  for (const char* name : {"a", "b"}) {
    auto t = run(with({"train", "--data", data, "--out", (dir / (std::string(name) + ".anam")).string(),
                       "--log", (dir / (std::string(name) + ".csv")).string()},
                      kTinyModel));
    ASSERT_EQ(t.code, cli::kExitOk) << t.err;
  }
  EXPECT_EQ(ananet::dataio::read_file_bytes(dir / "a.anam"),
            ananet::dataio::read_file_bytes(dir / "b.anam"));
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(Cli, InputWidthMismatchFails) {
  support::TempDir dir("cli_mismatch");
  const auto data = (dir / "data").string();
  ASSERT_EQ(run(with({"synth", "--out", data}, kSmall)).code, cli::kExitOk);
  auto t = run(with({"train", "--data", data, "--out", (dir / "m.anam").string(), "--set",
                     "d_r=11"},
                    kTinyModel));
  EXPECT_NE(t.code, cli::kExitOk);
  EXPECT_NE(t.err.find("dimension mismatch"), std::string::npos) << t.err;
}

TEST(Cli, BadConfigAndMissingDataFail) {
  support::TempDir dir("cli_bad");
  EXPECT_EQ(run({"train", "--data", (dir / "none").string(), "--out", (dir / "m").string()}).code,
            cli::kExitData);
  const auto data = (dir / "data").string();
  ASSERT_EQ(run(with({"synth", "--out", data}, kSmall)).code, cli::kExitOk);
  EXPECT_EQ(run({"train", "--data", data, "--out", (dir / "m").string(), "--set", "colour=1"}).code,
            cli::kExitUsage);
  {
    std::ofstream f(dir / "run.cfg");
    f << "epochs = 1\nepochs = 2\n";
  }
  auto r = run({"train", "--data", data, "--out", (dir / "m").string(), "--config",
                (dir / "run.cfg").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("set twice"), std::string::npos);
  EXPECT_EQ(run({"eval", "--model", (dir / "absent.anam").string(), "--data", data}).code,
            cli::kExitData);
}

TEST(Cli, GradcheckExitsCleanly) {
  auto r = run({"gradcheck"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.out;
  EXPECT_NE(r.out.find("checks within 1e-4"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, AttentionDumpWritesOneFilePerPair) {
  support::TempDir dir("cli_attn");
  const auto data = (dir / "data").string();
  ASSERT_EQ(run(with({"synth", "--out", data}, kSmall)).code, cli::kExitOk);
  const auto model = (dir / "m.anam").string();
  ASSERT_EQ(run(with({"train", "--data", data, "--out", model}, kTinyModel)).code, cli::kExitOk);
  const auto records = ananet::dataio::load_dataset(ananet::dataio::manifest_path(data, "test"));
  const std::string ids = records[0].id + "," + records[1].id;
  auto r = run({"attn-dump", "--model", model, "--data", data, "--ids", ids, "--out",
                dir.path().string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / (records[1].id + ".json")));
  EXPECT_FALSE(j.empty());
  EXPECT_EQ(run({"attn-dump", "--model", model, "--data", data, "--ids", "no-such-id", "--out",
                 dir.path().string()})
                .code,
            cli::kExitData);

  const auto assoc = (dir / "assoc.anam").string();
  ASSERT_EQ(run(with({"train", "--data", data, "--out", assoc, "--set", "mode=association_only"},
                     kTinyModel))
                .code,
            cli::kExitOk);
  EXPECT_EQ(run({"attn-dump", "--model", assoc, "--data", data, "--ids", ids}).code,
            cli::kExitUsage);
}

TEST(Cli, SweepAndAblateWriteCsv) {
  support::TempDir dir("cli_grid");
  const auto data = (dir / "data").string();
  ASSERT_EQ(run(with({"synth", "--out", data}, kSmall)).code, cli::kExitOk);
  auto s = run(with({"sweep", "--data", data, "--lambda-grid", "0.5,1", "--eta-grid", "1.3"},
                    kTinyModel));
  ASSERT_EQ(s.code, cli::kExitOk) << s.err;
  EXPECT_EQ(std::count(s.out.begin(), s.out.end(), '\n'), 3);
  EXPECT_EQ(run(with({"sweep", "--data", data, "--lambda-grid", "x"}, kTinyModel)).code,
            cli::kExitUsage);

  const auto csv = (dir / "ablation.csv").string();
  auto a = run(with({"ablate", "--data", data, "--variants", "full,concat_only", "--out", csv},
                    kTinyModel));
  ASSERT_EQ(a.code, cli::kExitOk) << a.err;
  const auto text = slurp(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("concat_only,"), std::string::npos);
  EXPECT_EQ(run(with({"ablate", "--data", data, "--variants", "both"}, kTinyModel)).code,
            cli::kExitUsage);
}
