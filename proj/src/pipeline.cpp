#include "termforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "termforge/align.hpp"
#include "termforge/error.hpp"
#include "termforge/eval.hpp"
#include "termforge/inject.hpp"
#include "termforge/io.hpp"
#include "termforge/lm.hpp"
#include "termforge/log.hpp"
#include "termforge/nmt/checkpoint.hpp"
#include "termforge/nmt/trainer.hpp"
#include "termforge/nmt/translate.hpp"
#include "termforge/smt.hpp"
#include "termforge/synthetic.hpp"

namespace termforge {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSystems = {"smt", "smt-adapted", "smt-inject", "nmt", "nmt-adapted", "nmt-inject"};

struct SmtModel {
  PhraseTable table;
  NgramLanguageModel lm;
};

SmtModel load_smt(const fs::path& dir) {
  return {load_phrase_table(dir / "phrase-table.txt"), load_arpa(dir / "lm.arpa")};
}

void require_file(const fs::path& path, std::string_view hint) {
  if (!fs::exists(path)) throw UsageError(fmt::format("{} not found; {}", path.string(), hint));
}

std::string format_losses(const nmt::TrainLog& log) {
  std::string out;
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
    out += fmt::format("epoch {} loss {} lr {}", e + 1, io::format_double(log.epoch_loss[e]),
                       io::format_double(log.learning_rate[e]));
    if (e < log.dev_perplexity.size()) out += " dev_ppl " + io::format_double(log.dev_perplexity[e]);
    out += '\n';
  }
  return out;
}

/// Removes a staging directory unless it was published.
class Staging {
 public:
  explicit Staging(fs::path path) : path_(std::move(path)) {}
  ~Staging() {
    std::error_code ec;
    if (!published_) fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  void published() { published_ = true; }

 private:
  fs::path path_;
  bool published_ = false;
};

/// Replaces `dir` with the contents of `staging` in one rename.
void publish_dir(const fs::path& staging, const fs::path& dir) {
  if (fs::exists(dir)) fs::remove_all(dir);
  fs::rename(staging, dir);
}

}  // namespace

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Pipeline::Pipeline(Config config, bool force, std::ostream& out)
    : config_(std::move(config)), force_(force), out_(out) {}

fs::path Pipeline::work_dir() const { return config_.get("work.dir", "work"); }

ParallelCorpus Pipeline::load_corpus(const std::string& key, const std::string& name) const {
  Normalization norm{config_.get_bool("normalize.lowercase", true)};
  fs::path src = config_.require(key + ".src");
  fs::path tgt = config_.require(key + ".tgt");
  require_file(src, "check " + key + ".src");
  require_file(tgt, "check " + key + ".tgt");
  return load_parallel(src, tgt, norm, name);
}

std::vector<ParallelCorpus> Pipeline::eval_sets() const {
  std::vector<ParallelCorpus> sets;
  for (const auto& name : config_.get_list("eval.sets")) sets.push_back(load_corpus("eval." + name, name));
  if (sets.empty()) throw UsageError("eval.sets lists no evaluation sets");
  return sets;
}

void Pipeline::prepare_model_dir(const fs::path& dir) const {
  if (fs::exists(dir) && !force_) {
    throw UsageError(dir.string() + " already exists; pass --force to overwrite");
  }
  fs::path staging = dir;
  staging += ".tmp";
  fs::remove_all(staging);
  fs::create_directories(staging);
}

void Pipeline::prepare() {
  fs::path dir = work_dir() / "prepared";
  fs::create_directories(dir);
  std::vector<ParallelCorpus> corpora{load_corpus("data.train", "train")};
  for (const char* key : {"tune", "dev"}) {
    if (config_.has(std::string("data.") + key + ".src")) corpora.push_back(load_corpus(std::string("data.") + key, key));
  }
  for (auto& c : eval_sets()) corpora.push_back(std::move(c));
  for (const auto& c : corpora) {
    io::write_file_atomic(dir / (c.name + ".src"), format_side(c.sources()));
    io::write_file_atomic(dir / (c.name + ".tgt"), format_side(c.targets()));
    out_ << fmt::format("{}: {} pairs\n", c.name, c.size());
  }
}

void Pipeline::stats() {
  auto train = load_corpus("data.train", "train");
  std::vector<ParallelCorpus> others;
  for (const char* key : {"tune", "dev"}) {
    if (config_.has(std::string("data.") + key + ".src")) others.push_back(load_corpus(std::string("data.") + key, key));
  }
  auto sets = eval_sets();

  std::string text = format_stats(train.name, corpus_stats(train));
  for (const auto& c : others) text += "\n" + format_stats(c.name, corpus_stats(c));
  for (const auto& c : sets) text += "\n" + format_stats(c.name, corpus_stats(c));
  for (const auto& c : sets) text += "\n" + format_overlap(c.name + " vs train", overlap_report(c, train));

  if (config_.has("lexicon.path")) {
    Normalization norm{config_.get_bool("normalize.lowercase", true)};
    auto lexicon = load_lexicon(config_.require("lexicon.path"), norm);
    ParallelCorpus entries;
    entries.name = "lexicon";
    for (const auto& e : lexicon.entries()) entries.pairs.push_back({e.source, e.best().tokens});
    for (const auto& c : sets) {
      text += "\n" + format_overlap(c.name + " vs lexicon", overlap_report(c, entries, TermMatch::ExactEntry));
    }
  }

  fs::path model = work_dir() / "nmt" / "model.tnmt";
  if (fs::exists(model)) {
    auto m = nmt::load_checkpoint(model);
    Vocabulary src(m.src_vocab.tokens().begin(), m.src_vocab.tokens().end());
    Vocabulary tgt(m.tgt_vocab.tokens().begin(), m.tgt_vocab.tokens().end());
    for (const auto& c : sets) {
      ParallelCorpus units;
      for (const auto& p : c.pairs) units.pairs.push_back({m.segment_source(p.source), m.segment_target(p.target)});
      auto [s, t] = vocabulary_coverage(units, src, tgt);
      text += fmt::format(
          "\n[{} vs nmt vocabulary]\nsource.in_vocab = {}\nsource.oov = {}\nsource.coverage = {:.2f}\n"
          "target.in_vocab = {}\ntarget.oov = {}\ntarget.coverage = {:.2f}\n",
          c.name, s.in_corpus, s.oov, s.coverage_percent(), t.in_corpus, t.oov, t.coverage_percent());
    }
  }

  fs::create_directories(work_dir() / "reports");
  io::write_file_atomic(work_dir() / "reports" / "stats.txt", text);
  out_ << text;
}

void Pipeline::train_smt() {
  auto corpus = load_corpus("data.train", "train");
  fs::path dir = work_dir() / "smt";
  prepare_model_dir(dir);
  fs::path staging = dir;
  staging += ".tmp";
  Staging guard(staging);

  int iterations = static_cast<int>(config_.get_int("smt.ibm1_iterations", 10));
  auto mode = parse_symmetrization(config_.get("smt.symmetrization", "grow-diag"));
  auto max_len = static_cast<std::size_t>(config_.get_int("smt.max_phrase_len", 7));
  int order = static_cast<int>(config_.get_int("smt.lm_order", 5));

  log::info("IBM-1 EM, {} iterations each direction", iterations);
  auto forward = ibm1_em(corpus, iterations);
  auto backward = ibm1_em(corpus.inverted(), iterations);
  std::vector<Alignment> alignments;
  alignments.reserve(corpus.size());
  for (const auto& pair : corpus.pairs) alignments.push_back(align_pair(forward, backward, pair, mode));
  auto table = extract_phrases(corpus, alignments, max_len, forward, backward);
  auto lm = train_lm(corpus.targets(), order);

  io::write_file_atomic(staging / "phrase-table.txt", format_phrase_table(table));
  io::write_file_atomic(staging / "lm.arpa", format_arpa(lm));
  io::write_file_atomic(staging / "weights.txt", format_weights(LogLinearWeights::defaults()));
  publish_dir(staging, dir);
  guard.published();
  out_ << fmt::format("phrase table: {} source phrases\n", table.size());
}

void Pipeline::train_nmt() {
  auto corpus = load_corpus("data.train", "train");
  fs::path dir = work_dir() / "nmt";
  prepare_model_dir(dir);
  fs::path staging = dir;
  staging += ".tmp";
  Staging guard(staging);

  nmt::ModelConfig mc;
  mc.layers = static_cast<int>(config_.get_int("nmt.layers", mc.layers));
  mc.hidden = static_cast<int>(config_.get_int("nmt.hidden", mc.hidden));
  mc.embed = static_cast<int>(config_.get_int("nmt.embed", mc.embed));
  mc.src_vocab_cap = static_cast<std::size_t>(config_.get_int("nmt.src_vocab_cap", 5000));
  mc.tgt_vocab_cap = static_cast<std::size_t>(config_.get_int("nmt.tgt_vocab_cap", 5000));
  mc.residual = config_.get_bool("nmt.residual", true);
  mc.positional = config_.get_bool("nmt.positional", false);

  nmt::TrainConfig tc;
  tc.batch_size = static_cast<std::size_t>(config_.get_int("nmt.batch_size", 16));
  tc.dropout = config_.get_double("nmt.dropout", tc.dropout);
  tc.epochs = static_cast<int>(config_.get_int("nmt.epochs", tc.epochs));
  tc.learning_rate = config_.get_double("nmt.learning_rate", tc.learning_rate);
  tc.decay_factor = config_.get_double("nmt.decay_factor", tc.decay_factor);
  tc.max_grad_norm = config_.get_double("nmt.max_grad_norm", tc.max_grad_norm);
  tc.seed = static_cast<std::uint64_t>(config_.get_int("seed", 42));

  std::optional<nmt::Subwords> subwords;
  std::string segmentation = config_.get("nmt.segmentation", "bpe");
  if (segmentation == "bpe") {
    auto merges = static_cast<std::size_t>(config_.get_int("nmt.bpe_merges", 1000));
    if (config_.get_bool("nmt.bpe_joint", false)) {
      auto both = corpus.sources();
      auto targets = corpus.targets();
      both.insert(both.end(), targets.begin(), targets.end());
      auto joint = learn_bpe(both, merges);
      subwords = nmt::Subwords{joint, joint};
    } else {
      subwords = nmt::Subwords{learn_bpe(corpus.sources(), merges), learn_bpe(corpus.targets(), merges)};
    }
  } else if (segmentation != "word") {
    throw UsageError("nmt.segmentation must be word or bpe");
  }

  std::optional<ParallelCorpus> dev;
  if (config_.has("data.tune.src")) dev = load_corpus("data.tune", "tune");
  nmt::TrainLog log;
  auto model = nmt::train_nmt(corpus, mc, tc, std::move(subwords), &log, dev ? &*dev : nullptr);
  nmt::save_checkpoint(model, staging / "model.tnmt");
  io::write_file_atomic(staging / "train.log", format_losses(log));
  publish_dir(staging, dir);
  guard.published();
  out_ << fmt::format("nmt model: {} parameters\n", model.params.count());
}

void Pipeline::tune() {
  fs::path dir = work_dir() / "smt";
  require_file(dir / "phrase-table.txt", "run train-smt first");
  auto model = load_smt(dir);
  auto dev = load_corpus("data.tune", "tune");
  MertConfig mc;
  mc.nbest = static_cast<std::size_t>(config_.get_int("smt.nbest", 100));
  mc.restarts = static_cast<std::size_t>(config_.get_int("smt.mert_restarts", 3));
  mc.max_iterations = static_cast<std::size_t>(config_.get_int("smt.mert_iterations", 5));
  mc.seed = static_cast<std::uint64_t>(config_.get_int("seed", 42));
  mc.beam.stack_size = static_cast<std::size_t>(config_.get_int("smt.stack_size", 100));
  mc.beam.distortion_limit = static_cast<int>(config_.get_int("smt.distortion_limit", 6));
  auto result = mert_tune(dev, model.table, model.lm, load_weights(dir / "weights.txt"), mc);
  io::write_file_atomic(dir / "weights.txt", format_weights(result.weights));
  out_ << fmt::format("tune BLEU {:.2f} -> {:.2f}\n", result.initial_bleu, result.tuned_bleu);
}

void Pipeline::adapt() {
  fs::path smt_dir = work_dir() / "smt";
  fs::path nmt_path = work_dir() / "nmt" / "model.tnmt";
  bool have_smt = fs::exists(smt_dir / "phrase-table.txt");
  bool have_nmt = fs::exists(nmt_path);
  if (!have_smt && !have_nmt) throw UsageError("nothing to adapt; run train-smt or train-nmt first");
  auto dev = load_corpus("data.dev", "dev");
  fs::path out_dir = work_dir() / "adapted";
  fs::create_directories(out_dir);

  if (have_smt) {
    auto model = load_smt(smt_dir);
    MertConfig mc;
    mc.nbest = static_cast<std::size_t>(config_.get_int("smt.nbest", 100));
    mc.restarts = static_cast<std::size_t>(config_.get_int("smt.mert_restarts", 3));
    mc.max_iterations = static_cast<std::size_t>(config_.get_int("smt.mert_iterations", 5));
    mc.seed = static_cast<std::uint64_t>(config_.get_int("seed", 42));
    mc.beam.stack_size = static_cast<std::size_t>(config_.get_int("smt.stack_size", 100));
    mc.beam.distortion_limit = static_cast<int>(config_.get_int("smt.distortion_limit", 6));
    auto result = mert_tune(dev, model.table, model.lm, load_weights(smt_dir / "weights.txt"), mc);
    io::write_file_atomic(out_dir / "weights.txt", format_weights(result.weights));
    out_ << fmt::format("smt dev BLEU {:.2f} -> {:.2f}\n", result.initial_bleu, result.tuned_bleu);
  }
  if (have_nmt) {
    auto model = nmt::load_checkpoint(nmt_path);
    nmt::TrainConfig tc;
    tc.batch_size = static_cast<std::size_t>(
        config_.get_int("nmt.finetune_batch_size", config_.get_int("nmt.batch_size", 16)));
    tc.dropout = config_.get_double("nmt.finetune_dropout", config_.get_double("nmt.dropout", tc.dropout));
    tc.epochs = static_cast<int>(config_.get_int("nmt.finetune_epochs", 10));
    tc.learning_rate = config_.get_double("nmt.finetune_learning_rate", 0.1);
    tc.decay_factor = config_.get_double("nmt.decay_factor", tc.decay_factor);
    tc.max_grad_norm = config_.get_double("nmt.max_grad_norm", tc.max_grad_norm);
    tc.seed = static_cast<std::uint64_t>(config_.get_int("seed", 42));
    nmt::TrainLog log;
    auto tuned = nmt::fine_tune(model, dev, tc, &log);
    nmt::save_checkpoint(tuned, out_dir / "model.tnmt");
    out_ << fmt::format("nmt fine-tuned for {} epochs\n", log.epoch_loss.size());
  }
}

void Pipeline::inject() {
  Normalization norm{config_.get_bool("normalize.lowercase", true)};
  auto lexicon = load_lexicon(config_.require("lexicon.path"), norm);
  auto mode = parse_injection_mode(config_.get("inject.mode", "exclusive"));
  auto ranking = parse_ranking_mode(config_.get("inject.ranking", "cosine"));
  auto sets = eval_sets();

  std::vector<Tokens> domain_text;
  std::string domain = config_.get("inject.domain", "dev");
  if (domain == "dev") {
    auto dev = load_corpus("data.dev", "dev");
    domain_text = dev.sources();
    for (auto& t : dev.targets()) domain_text.push_back(std::move(t));
  } else if (domain == "eval") {
    for (const auto& c : sets) {
      for (const auto& p : c.pairs) {
        domain_text.push_back(p.source);
        domain_text.push_back(p.target);
      }
    }
  } else {
    throw UsageError("inject.domain must be dev or eval");
  }
  auto ranked = rank_candidates(VocabVector::from_sentences(domain_text), lexicon, ranking, norm);

  fs::path dir = work_dir() / "inject";
  fs::create_directories(dir);
  io::write_file_atomic(dir / "lexicon.ranked.tsv", format_lexicon(ranked));
  for (const auto& c : sets) {
    std::string text;
    std::size_t spans = 0;
    for (const auto& p : c.pairs) {
      auto input = annotate(p.source, ranked, mode);
      spans += input.spans.size();
      text += format_markup(input) + "\n";
    }
    io::write_file_atomic(dir / (c.name + ".xml"), text);
    out_ << fmt::format("{}: {} annotated spans\n", c.name, spans);
  }
}

std::vector<Tokens> Pipeline::run_system(const std::string& system, const std::vector<Tokens>& sources,
                                         const std::string& set) const {
  int threads = static_cast<int>(config_.get_int("threads", 1));
  std::vector<Tokens> out(sources.size());

  if (system.rfind("smt", 0) == 0) {
    fs::path smt_dir = work_dir() / "smt";
    require_file(smt_dir / "phrase-table.txt", "run train-smt first");
    auto model = load_smt(smt_dir);
    fs::path weights_path = system == "smt-adapted" ? work_dir() / "adapted" / "weights.txt" : smt_dir / "weights.txt";
    require_file(weights_path, "run adapt first");
    auto weights = load_weights(weights_path);
    BeamConfig beam;
    beam.stack_size = static_cast<std::size_t>(config_.get_int("smt.stack_size", 100));
    beam.distortion_limit = static_cast<int>(config_.get_int("smt.distortion_limit", 6));

    std::vector<AnnotatedInput> inputs;
    if (system == "smt-inject") {
      fs::path markup = work_dir() / "inject" / (set + ".xml");
      require_file(markup, "run inject first");
      Normalization norm{config_.get_bool("normalize.lowercase", true)};
      auto mode = parse_injection_mode(config_.get("inject.mode", "exclusive"));
      for (const auto& line : io::read_lines(markup)) inputs.push_back(parse_markup(line, mode, norm));
      if (inputs.size() != sources.size()) {
        throw AlignmentError(fmt::format("{} has {} lines, expected {}", markup.string(), inputs.size(), sources.size()));
      }
    } else if (system == "smt" || system == "smt-adapted") {
      for (const auto& s : sources) inputs.push_back(plain_input(s));
    } else {
      throw UsageError("unknown system '" + system + "'");
    }
    parallel_for(inputs.size(), threads,
                 [&](std::size_t i) { out[i] = decode(inputs[i], model.table, model.lm, weights, beam).target; });
    return out;
  }

  if (system != "nmt" && system != "nmt-adapted" && system != "nmt-inject") {
    throw UsageError("unknown system '" + system + "'");
  }
  fs::path path = system == "nmt-adapted" ? work_dir() / "adapted" / "model.tnmt" : work_dir() / "nmt" / "model.tnmt";
  require_file(path, system == "nmt-adapted" ? "run adapt first" : "run train-nmt first");
  auto model = nmt::load_checkpoint(path);
  std::optional<Lexicon> lexicon;
  if (system == "nmt-inject") {
    fs::path ranked = work_dir() / "inject" / "lexicon.ranked.tsv";
    require_file(ranked, "run inject first");
    lexicon = load_lexicon(ranked, Normalization{false});
  }
  nmt::TranslateOptions opts;
  opts.beam_width = static_cast<std::size_t>(config_.get_int("nmt.beam", 5));
  opts.replace_unknown = config_.get_bool("nmt.replace_unk", true);
  opts.lexicon = lexicon ? &*lexicon : nullptr;
  parallel_for(sources.size(), threads, [&](std::size_t i) { out[i] = nmt::translate(model, sources[i], opts); });
  return out;
}

std::vector<std::string> Pipeline::available_systems() const {
  fs::path w = work_dir();
  std::vector<std::string> out;
  bool smt = fs::exists(w / "smt" / "phrase-table.txt");
  bool nmt = fs::exists(w / "nmt" / "model.tnmt");
  bool injected = fs::exists(w / "inject" / "lexicon.ranked.tsv");
  if (smt) out.push_back("smt");
  if (smt && fs::exists(w / "adapted" / "weights.txt")) out.push_back("smt-adapted");
  if (smt && injected) out.push_back("smt-inject");
  if (nmt) out.push_back("nmt");
  if (fs::exists(w / "adapted" / "model.tnmt")) out.push_back("nmt-adapted");
  if (nmt && injected) out.push_back("nmt-inject");
  return out;
}

void Pipeline::translate() {
  std::string system = config_.get("translate.system", "smt");
  fs::path input = config_.require("translate.input");
  require_file(input, "check translate.input");
  Normalization norm{config_.get_bool("normalize.lowercase", true)};
  auto lines = io::read_lines(input);

  std::vector<Tokens> sources;
  std::vector<Tokens> out;
  if (system == "smt-inject") {
    auto model = load_smt(work_dir() / "smt");
    auto weights = load_weights(work_dir() / "smt" / "weights.txt");
    BeamConfig beam;
    beam.stack_size = static_cast<std::size_t>(config_.get_int("smt.stack_size", 100));
    beam.distortion_limit = static_cast<int>(config_.get_int("smt.distortion_limit", 6));
    auto mode = parse_injection_mode(config_.get("inject.mode", "exclusive"));
    out.resize(lines.size());
    parallel_for(lines.size(), static_cast<int>(config_.get_int("threads", 1)), [&](std::size_t i) {
      out[i] = decode(parse_markup(lines[i], mode, norm), model.table, model.lm, weights, beam).target;
    });
  } else {
    for (const auto& l : lines) sources.push_back(tokenize(l, norm));
    out = run_system(system, sources, "");
  }
  std::string text = format_side(out);
  if (config_.has("translate.output")) {
    io::write_file_atomic(config_.require("translate.output"), text);
  } else {
    out_ << text;
  }
}

void Pipeline::evaluate() {
  auto systems = config_.get_list("evaluate.systems", available_systems());
  if (systems.empty()) throw UsageError("no trained systems to evaluate");
  for (const auto& s : systems) {
    if (std::find(kSystems.begin(), kSystems.end(), s) == kSystems.end()) {
      throw UsageError("unknown system '" + s + "' in evaluate.systems");
    }
  }
  auto sets = eval_sets();
  fs::path dir = work_dir() / "translations";
  fs::create_directories(dir);
  std::vector<ReportRow> rows;
  for (const auto& system : systems) {
    for (const auto& c : sets) {
      auto hyps = run_system(system, c.sources(), c.name);
      io::write_file_atomic(dir / (system + "." + c.name + ".txt"), format_side(hyps));
      rows.push_back({system, c.name, termforge::evaluate(hyps, c.targets())});
      log::info("{} on {}: BLEU {:.2f}", system, c.name, rows.back().score.bleu);
    }
  }
  fs::create_directories(work_dir() / "reports");
  io::write_file_atomic(work_dir() / "reports" / "results.tsv", format_report_tsv(rows));
  report();
}

void Pipeline::report() {
  fs::path tsv = work_dir() / "reports" / "results.tsv";
  require_file(tsv, "run evaluate first");
  auto text = format_report(parse_report_tsv(io::read_file(tsv)));
  io::write_file_atomic(work_dir() / "reports" / "report.txt", text);
  out_ << text;
}

}  // namespace termforge
