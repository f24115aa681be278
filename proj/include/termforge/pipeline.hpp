#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "termforge/config.hpp"
#include "termforge/corpus.hpp"

namespace termforge {

/// Runs the workbench steps against one configuration. Every artifact lives
/// under `work.dir` and is written atomically.
class Pipeline {
 public:
  Pipeline(Config config, bool force, std::ostream& out);

  void prepare();
  void stats();
  void train_smt();
  void train_nmt();
  void tune();
  void adapt();
  void inject();
  void translate();
  void evaluate();
  void report();

  /// Systems with artifacts on disk, in report order.
  std::vector<std::string> available_systems() const;

  const Config& config() const { return config_; }
  std::filesystem::path work_dir() const;

 private:
  ParallelCorpus load_corpus(const std::string& key, const std::string& name) const;
  std::vector<ParallelCorpus> eval_sets() const;
  /// Translates every source of `inputs` with `system`; `set` selects the
  /// annotated input file for injection systems.
  std::vector<Tokens> run_system(const std::string& system, const std::vector<Tokens>& sources,
                                 const std::string& set) const;
  void prepare_model_dir(const std::filesystem::path& dir) const;

  Config config_;
  bool force_;
  std::ostream& out_;
};

/// Applies `fn` to indices [0, n) on up to `threads` threads; results are
/// stored by index so output order never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace termforge
