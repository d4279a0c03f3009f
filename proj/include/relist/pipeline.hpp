#pragma once

// Experiment configuration and the end-to-end pipeline:
// synth -> annotate -> split -> train -> generate -> eval -> compare.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relist/corpus.hpp"
#include "relist/em.hpp"
#include "relist/evaluator.hpp"
#include "relist/generator.hpp"

namespace relist {

struct GenerationDefaults {
  std::size_t max_sentences = 20;
  std::size_t max_tokens = 40;
  std::size_t samples_per_input = 1;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  SynthConfig synth;
  EMConfig em;
  // Empty means the bundled lexicon.
  std::string lexicon_path;
  double split_fraction = 0.129;
  GenerationDefaults generation;
  EvalOptions eval;
  std::filesystem::path output_dir = "out";
  std::size_t jobs = 1;

  // Throws InvalidConfig.
  void validate() const;
};

// Parses the key = value / [table] config format. Unknown keys and malformed
// values throw InvalidConfig.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path &path);
// Applies RELIST_SEED when set.
void apply_environment(ExperimentConfig &cfg);

// Per-stage seeds derived from the global seed.
std::uint64_t stage_seed(const ExperimentConfig &cfg, std::string_view stage);

// Generation modes evaluated by the pipeline, in report order.
struct ModeSpec {
  std::string name;
  GenerationMode mode;
  // Generate with the initialized (pre-EM) model.
  bool initial_model = false;
};
const std::vector<ModeSpec> &pipeline_modes();

// Files written by each stage inside the output directory.
struct PipelinePaths {
  std::filesystem::path dir;

  std::filesystem::path corpus() const { return dir / "corpus.jsonl"; }
  std::filesystem::path annotated() const { return dir / "annotated.jsonl"; }
  std::filesystem::path annotate_stats() const { return dir / "annotate_stats.txt"; }
  std::filesystem::path train_split() const { return dir / "train.jsonl"; }
  std::filesystem::path test_split() const { return dir / "test.jsonl"; }
  std::filesystem::path model() const { return dir / "model.json"; }
  std::filesystem::path initial_model() const { return dir / "model_relist0.json"; }
  std::filesystem::path train_report() const { return dir / "train_report.json"; }
  std::filesystem::path generated(std::string_view mode) const;
  std::filesystem::path report(std::string_view mode) const;
  std::filesystem::path transitions(std::string_view mode) const;
  std::filesystem::path comparison_table() const { return dir / "comparison.txt"; }
  std::filesystem::path comparison_json() const { return dir / "comparison.json"; }
};

const SentimentLexicon &resolve_lexicon(const ExperimentConfig &cfg, SentimentLexicon &storage);

void stage_synth(const ExperimentConfig &cfg, const std::filesystem::path &out);
CorpusStats stage_annotate(const ExperimentConfig &cfg, const std::filesystem::path &corpus,
                           const std::filesystem::path &out);
void stage_split(const ExperimentConfig &cfg, const std::filesystem::path &annotated,
                 const std::filesystem::path &train_out, const std::filesystem::path &test_out);
// Writes the final model (with the SingleLM and flat ablations), the
// initialized model and the training report.
TrainReport stage_train(const ExperimentConfig &cfg, const std::filesystem::path &train,
                        const std::filesystem::path &model_out, const std::filesystem::path &initial_out,
                        const std::filesystem::path &report_out,
                        const std::filesystem::path &checkpoint_dir = {});
void stage_generate(const ExperimentConfig &cfg, const std::filesystem::path &model,
                    const std::filesystem::path &test, GenerationMode mode, const std::filesystem::path &out);
EvaluationReport stage_eval(const ExperimentConfig &cfg, std::string mode_name,
                            const std::filesystem::path &generated, const std::filesystem::path &test,
                            const std::filesystem::path &report_out, const std::filesystem::path &csv_out);

// Table with one row per mode and the RI / P-CLS / content columns.
std::string results_table(const std::vector<EvaluationReport> &reports);

struct PipelineResult {
  int exit_code = 0;
  std::string failed_stage;
  std::string message;
  std::vector<EvaluationReport> reports;
};

// Exit codes: 0 success, 2 config error, 3 stage failure. Outputs of the
// completed stages are kept on failure.
PipelineResult run_pipeline(const ExperimentConfig &cfg);

}  // namespace relist
