#include "termforge/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "termforge/config.hpp"
#include "termforge/error.hpp"
#include "termforge/io.hpp"
#include "termforge/pipeline.hpp"
#include "termforge/synthetic.hpp"

namespace termforge::cli {

namespace fs = std::filesystem;

void write_fixture(const std::string& dir, unsigned long long seed) {
  fs::path root = fs::absolute(dir);
  fs::path data = root / "data";
  synthetic::write_two_domains(synthetic::two_domains(seed), data);
  auto p = [&](const char* file) { return (data / file).string(); };
  std::string cfg = fmt::format(
      "# two-domain synthetic fixture\n"
      "work.dir = {}\n"
      "seed = {}\n"
      "data.train.src = {}\ndata.train.tgt = {}\n"
      "data.tune.src = {}\ndata.tune.tgt = {}\n"
      "data.dev.src = {}\ndata.dev.tgt = {}\n"
      "eval.sets = eval_a, eval_b\n"
      "eval.eval_a.src = {}\neval.eval_a.tgt = {}\n"
      "eval.eval_b.src = {}\neval.eval_b.tgt = {}\n"
      "lexicon.path = {}\n"
      "smt.lm_order = 3\n"
      "smt.nbest = 50\n"
      "smt.mert_restarts = 2\n"
      "smt.mert_iterations = 3\n"
      "nmt.segmentation = bpe\n"
      "nmt.bpe_merges = 80\n"
      "nmt.layers = 2\n"
      "nmt.hidden = 32\n"
      "nmt.embed = 16\n"
      "nmt.epochs = 60\n"
      "nmt.learning_rate = 0.5\n"
      "nmt.batch_size = 8\n"
      "nmt.dropout = 0.1\n"
      "nmt.finetune_epochs = 12\n"
      "nmt.finetune_learning_rate = 0.1\n"
      "nmt.finetune_batch_size = 1\n"
      "nmt.finetune_dropout = 0\n"
      "inject.mode = exclusive\n"
      "inject.ranking = cosine\n",
      (root / "work").string(), seed, p("generic.src"), p("generic.tgt"), p("dev_b.src"), p("dev_b.tgt"),
      p("dev_a.src"), p("dev_a.tgt"), p("eval_a.src"), p("eval_a.tgt"), p("eval_b.src"), p("eval_b.tgt"),
      p("lexicon_a.tsv"));
  io::write_file_atomic(root / "termforge.cfg", cfg);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"termforge: terminology-aware machine translation workbench", "termforge"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
  unsigned long long seed = 42;
  bool force = false;
  app.add_option("--config", config_path, "Configuration file (dotted key = value lines)");
  app.add_option("--set", overrides, "Override one config key, key=value; repeatable");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads for decoding")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (default 42)");
  app.add_flag("--force", force, "Overwrite existing model directories");

  const std::map<std::string, void (Pipeline::*)()> steps = {
      {"prepare", &Pipeline::prepare},     {"stats", &Pipeline::stats},
      {"train-smt", &Pipeline::train_smt}, {"train-nmt", &Pipeline::train_nmt},
      {"tune", &Pipeline::tune},           {"adapt", &Pipeline::adapt},
      {"inject", &Pipeline::inject},       {"translate", &Pipeline::translate},
      {"evaluate", &Pipeline::evaluate},   {"report", &Pipeline::report},
  };
  const std::map<std::string, std::string> help = {
      {"prepare", "Tokenize and normalize every configured corpus"},
      {"stats", "Corpus statistics and term overlap report"},
      {"train-smt", "Align, extract phrases and train the language model"},
      {"train-nmt", "Train the attention encoder-decoder"},
      {"tune", "MERT on the tuning set"},
      {"adapt", "Re-tune SMT weights and fine-tune NMT on the in-domain dev set"},
      {"inject", "Rank lexicon candidates and annotate evaluation sources"},
      {"translate", "Translate translate.input with translate.system"},
      {"evaluate", "Score every system on every evaluation set"},
      {"report", "Render the results table"},
  };
  for (const auto& [name, text] : help) app.add_subcommand(name, text);
  std::string fixture_dir;
  auto* fixture = app.add_subcommand("fixture", "Write the synthetic two-domain fixture and its config");
  fixture->add_option("--out", fixture_dir, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'termforge --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (fixture->parsed()) {
      write_fixture(fixture_dir, seed);
      out << "wrote " << (fs::absolute(fixture_dir) / "termforge.cfg").string() << "\n";
      return kExitOk;
    }
    Config config;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw UsageError("config file " + config_path + " not found");
      config = Config::load(config_path);
    }
    for (const auto& o : overrides) config.apply_override(o);
    if (*seed_opt || !config.has("seed")) config.set("seed", std::to_string(seed));
    if (*threads_opt) config.set("threads", std::to_string(threads));

    Pipeline pipeline(std::move(config), force, out);
    for (const auto* sub : app.get_subcommands()) (pipeline.*steps.at(sub->get_name()))();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace termforge::cli
