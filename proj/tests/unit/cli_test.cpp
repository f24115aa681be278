#include <gtest/gtest.h>

#include <sstream>

#include "termforge/cli.hpp"
#include "termforge/corpus.hpp"
#include "termforge/io.hpp"
#include "test_util.hpp"

namespace termforge {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { ASSERT_EQ(run({"fixture", "--out", dir.path().string()}).code, cli::kExitOk); }
  std::string cfg() const { return (dir.path() / "termforge.cfg").string(); }
  fs::path work() const { return dir.path() / "work"; }

  testing::TempDir dir;
};

TEST(CliUsage, UnknownSubcommand) {
  auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("termforge --help"), std::string::npos);
}

TEST(CliUsage, MissingSubcommand) { EXPECT_EQ(run({}).code, cli::kExitUsage); }

TEST(CliUsage, MissingConfigFile) {
  auto r = run({"--config", "/nonexistent/termforge.cfg", "stats"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("not found"), std::string::npos);
}

TEST(CliUsage, BadOverride) { EXPECT_EQ(run({"--set", "novalue", "stats"}).code, cli::kExitUsage); }

TEST(CliUsage, HelpListsSubcommands) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  for (const char* s : {"prepare", "stats", "train-smt", "train-nmt", "tune", "adapt", "inject", "translate",
                        "evaluate", "report"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
}

TEST_F(Cli, StatsDelegatesToCorpusStats) {
  auto r = run({"--config", cfg(), "stats"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  auto train = load_parallel(dir.path() / "data" / "generic.src", dir.path() / "data" / "generic.tgt");
  EXPECT_EQ(r.out.rfind(format_stats("train", corpus_stats(train)), 0), 0u);
  EXPECT_EQ(io::read_file(work() / "reports" / "stats.txt"), r.out);
  EXPECT_EQ(run({"--config", cfg(), "stats"}).out, r.out);
}

TEST_F(Cli, PrepareIsIdempotent) {
  ASSERT_EQ(run({"--config", cfg(), "prepare"}).code, cli::kExitOk);
  auto first = io::read_file(work() / "prepared" / "train.src");
  ASSERT_EQ(run({"--config", cfg(), "prepare"}).code, cli::kExitOk);
  EXPECT_EQ(io::read_file(work() / "prepared" / "train.src"), first);
}

TEST_F(Cli, TrainSmtRefusesToOverwrite) {
  ASSERT_EQ(run({"--config", cfg(), "train-smt"}).code, cli::kExitOk);
  auto table = io::read_file(work() / "smt" / "phrase-table.txt");
  auto again = run({"--config", cfg(), "train-smt"});
  EXPECT_NE(again.code, cli::kExitOk);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(io::read_file(work() / "smt" / "phrase-table.txt"), table);
  EXPECT_EQ(run({"--config", cfg(), "--force", "train-smt"}).code, cli::kExitOk);
  EXPECT_EQ(io::read_file(work() / "smt" / "phrase-table.txt"), table);
}

TEST_F(Cli, MissingInputLeavesNothingBehind) {
  auto r = run({"--config", cfg(), "--set", "data.train.src=" + (dir.path() / "absent.src").string(), "train-smt"});
  EXPECT_NE(r.code, cli::kExitOk);
  EXPECT_NE(r.err.find("absent.src"), std::string::npos);
  EXPECT_FALSE(fs::exists(work() / "smt"));
  EXPECT_FALSE(fs::exists(work() / "smt.tmp"));
}

TEST_F(Cli, TranslateNeedsTrainedModel) {
  auto input = dir.write("in.txt", "mupo vido\n");
  auto r = run({"--config", cfg(), "--set", "translate.input=" + input.string(), "translate"});
  EXPECT_NE(r.code, cli::kExitOk);
  EXPECT_NE(r.err.find("train-smt"), std::string::npos);
}

TEST_F(Cli, SmtPipelineIsDeterministic) {
  testing::TempDir other;
  ASSERT_EQ(run({"fixture", "--out", other.path().string()}).code, cli::kExitOk);
  auto input = dir.write("in.txt", "Mupo vido\nnese\n\n");
  std::vector<std::string> outputs;
  for (const auto& root : {dir.path(), other.path()}) {
    auto c = (root / "termforge.cfg").string();
    for (const char* step : {"train-smt", "tune"}) ASSERT_EQ(run({"--config", c, step}).code, cli::kExitOk) << step;
    auto r = run({"--config", c, "--set", "translate.input=" + input.string(), "translate"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    outputs.push_back(r.out);
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(std::count(outputs[0].begin(), outputs[0].end(), '\n'), 3);
  for (const char* file : {"smt/phrase-table.txt", "smt/lm.arpa", "smt/weights.txt"}) {
    EXPECT_EQ(io::read_file(work() / file), io::read_file(other.path() / "work" / file)) << file;
  }
}

TEST_F(Cli, ThreadsDoNotChangeOutput) {
  ASSERT_EQ(run({"--config", cfg(), "train-smt"}).code, cli::kExitOk);
  auto input = (dir.path() / "data" / "eval_b.src").string();
  auto one = run({"--config", cfg(), "--threads", "1", "--set", "translate.input=" + input, "translate"});
  auto four = run({"--config", cfg(), "--threads", "4", "--set", "translate.input=" + input, "translate"});
  ASSERT_EQ(one.code, cli::kExitOk);
  EXPECT_EQ(one.out, four.out);
  EXPECT_EQ(run({"--config", cfg(), "--threads", "0", "translate"}).code, cli::kExitUsage);
}

}  // namespace
}  // namespace termforge
