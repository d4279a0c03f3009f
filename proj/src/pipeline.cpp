#include "relist/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "relist/annotator.hpp"
#include "relist/error.hpp"
#include "relist/rng.hpp"

namespace relist {

std::uint64_t stage_seed(const ExperimentConfig &cfg, std::string_view stage) { return derive_seed(stage, cfg.seed); }

const std::vector<ModeSpec> &pipeline_modes() {
  static const std::vector<ModeSpec> modes = {
      {"relist", GenerationMode::ReList, false},
      {"relist0", GenerationMode::ReList, true},
      {"randselect", GenerationMode::RandSelect, false},
      {"singlelm", GenerationMode::SingleLM, false},
      {"flat", GenerationMode::FlatBaseline, false},
  };
  return modes;
}

std::filesystem::path PipelinePaths::generated(std::string_view mode) const {
  return dir / ("generated_" + std::string(mode) + ".jsonl");
}

std::filesystem::path PipelinePaths::report(std::string_view mode) const {
  return dir / ("report_" + std::string(mode) + ".json");
}

std::filesystem::path PipelinePaths::transitions(std::string_view mode) const {
  return dir / ("transitions_" + std::string(mode) + ".csv");
}

const SentimentLexicon &resolve_lexicon(const ExperimentConfig &cfg, SentimentLexicon &storage) {
  if (cfg.lexicon_path.empty()) return default_lexicon();
  storage = SentimentLexicon::load(cfg.lexicon_path);
  return storage;
}

namespace {

void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path &path, const nlohmann::json &j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const std::exception &e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

std::string story_id(std::size_t index, std::size_t sample, std::size_t samples) {
  std::string id = "test-" + std::to_string(index);
  if (samples > 1) id += "." + std::to_string(sample);
  return id;
}

}  // namespace

void stage_synth(const ExperimentConfig &cfg, const std::filesystem::path &out) {
  SynthConfig sc = cfg.synth;
  sc.seed = stage_seed(cfg, "synth");
  save_corpus(synthesize_corpus(sc, default_lexicon()), out);
}

CorpusStats stage_annotate(const ExperimentConfig &cfg, const std::filesystem::path &corpus,
                           const std::filesystem::path &out) {
  SentimentLexicon storage;
  const auto &lexicon = resolve_lexicon(cfg, storage);
  const auto stories = load_corpus(corpus);
  auto [annotated, stats] = annotate_corpus(stories, lexicon);
  save_annotated(annotated, out);
  return stats;
}

void stage_split(const ExperimentConfig &cfg, const std::filesystem::path &annotated,
                 const std::filesystem::path &train_out, const std::filesystem::path &test_out) {
  const auto stories = load_annotated(annotated);
  const auto split = split_indices(stories.size(), cfg.split_fraction, stage_seed(cfg, "split"));
  auto pick = [&](const std::vector<std::size_t> &part) {
    std::vector<AnnotatedStory> out;
    out.reserve(part.size());
    for (auto i : part) out.push_back(stories[i]);
    return out;
  };
  save_annotated(pick(split.train), train_out);
  save_annotated(pick(split.test), test_out);
}

TrainReport stage_train(const ExperimentConfig &cfg, const std::filesystem::path &train_path,
                        const std::filesystem::path &model_out, const std::filesystem::path &initial_out,
                        const std::filesystem::path &report_out, const std::filesystem::path &checkpoint_dir) {
  const auto annotated = load_annotated(train_path);
  const auto corpus = training_stories(annotated);
  EMConfig em = cfg.em;
  em.seed = stage_seed(cfg, "train");
  em.jobs = cfg.jobs;
  CheckpointFn checkpoint;
  if (!checkpoint_dir.empty()) {
    std::filesystem::create_directories(checkpoint_dir);
    checkpoint = [&](std::size_t cycle, const ReListModel &m) {
      save_model(m, checkpoint_dir / ("model_cycle" + std::to_string(cycle) + ".json"));
    };
  }
  TrainReport report = train(corpus, em, checkpoint);
  ReListModel final_model = report.final_model;
  final_model.single_lm = train_single_lm(corpus, report.final_assignments, em.lm);
  final_model.flat_lm = train_flat_lm(corpus, em.lm);
  save_model(final_model, model_out);
  save_model(report.initial, initial_out);
  write_json(report_out, report.to_json());
  return report;
}

void stage_generate(const ExperimentConfig &cfg, const std::filesystem::path &model_path,
                    const std::filesystem::path &test_path, GenerationMode mode, const std::filesystem::path &out) {
  SentimentLexicon storage;
  const auto &lexicon = resolve_lexicon(cfg, storage);
  const auto model = load_model(model_path);
  const auto test = load_annotated(test_path);
  std::vector<GenerationRequest> requests;
  std::vector<RelationshipSet> inputs;
  for (const auto &t : test) {
    for (std::size_t s = 0; s < cfg.generation.samples_per_input; ++s) {
      requests.push_back(GenerationRequest{t.source.story.prompt, t.silver.relationships, t.source.story.characters, 0,
                                           cfg.generation.max_sentences, cfg.generation.max_tokens, mode});
      inputs.push_back(t.silver.relationships);
    }
  }
  const auto stories = generate_batch(model, requests, stage_seed(cfg, "generate"), cfg.jobs);
  save_generated(stories, inputs, lexicon, out);
}

EvaluationReport stage_eval(const ExperimentConfig &cfg, std::string mode_name,
                            const std::filesystem::path &generated_path, const std::filesystem::path &test_path,
                            const std::filesystem::path &report_out, const std::filesystem::path &csv_out) {
  SentimentLexicon storage;
  const auto &lexicon = resolve_lexicon(cfg, storage);
  const auto test = load_annotated(test_path);
  const auto generated = load_generated(generated_path);
  const std::size_t samples = cfg.generation.samples_per_input;
  if (generated.size() != test.size() * samples) {
    throw Error(ErrorKind::AlignmentError, "generated stories do not line up with the test split");
  }
  std::vector<EvalItem> items;
  items.reserve(generated.size());
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const std::size_t t = i / samples;
    items.push_back(EvalItem{story_id(t, i % samples, samples), &test[t].source, generated[i].input,
                             &generated[i].generated});
  }
  EvalOptions opts = cfg.eval;
  opts.jobs = cfg.jobs;
  auto report = evaluate(std::move(mode_name), items, lexicon, opts);
  save_report(report, report_out);
  if (!csv_out.empty()) write_text(csv_out, report.transitions.to_csv());
  return report;
}

std::string results_table(const std::vector<EvaluationReport> &reports) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(12) << "mode" << std::right;
  for (const char *h : {"%Exact", "%Unspec", "%Incorrect", "AvgRel", "P-CLS", "BLEU", "R1-F", "RL-F", "D-1", "D-2",
                        "D-3", "Sents"}) {
    out << std::setw(11) << h;
  }
  out << '\n';
  for (const auto &r : reports) {
    out << std::left << std::setw(12) << r.mode << std::right;
    for (double v : {r.ri.pct_exact, r.ri.pct_unspec, r.ri.pct_incorrect, r.ri.avg_rel, 100.0 * r.pcls.accuracy,
                     100.0 * r.content.bleu, 100.0 * r.content.rouge1_f, 100.0 * r.content.rougeL_f,
                     100.0 * r.content.distinct1, 100.0 * r.content.distinct2, 100.0 * r.content.distinct3,
                     r.mean_sentences}) {
      out << std::setw(11) << v;
    }
    out << '\n';
  }
  if (!reports.empty()) {
    const auto &r = reports.front();
    out << "P-CLS references: test majority " << 100.0 * r.pcls.majority_baseline << ", test random "
        << 100.0 * r.pcls.random_baseline << ", mix majority " << 100.0 * r.mix.majority << ", mix random "
        << 100.0 * r.mix.random << '\n';
  }
  return out.str();
}

PipelineResult run_pipeline(const ExperimentConfig &cfg) {
  PipelineResult result;
  try {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
  } catch (const std::exception &e) {
    result.exit_code = 2;
    result.failed_stage = "config";
    result.message = e.what();
    return result;
  }
  const PipelinePaths paths{cfg.output_dir};
  std::string stage;
  try {
    stage = "synth";
    stage_synth(cfg, paths.corpus());
    stage = "annotate";
    const auto stats = stage_annotate(cfg, paths.corpus(), paths.annotated());
    write_text(paths.annotate_stats(), stats.to_text());
    stage = "split";
    stage_split(cfg, paths.annotated(), paths.train_split(), paths.test_split());
    stage = "train";
    stage_train(cfg, paths.train_split(), paths.model(), paths.initial_model(), paths.train_report());
    stage = "generate";
    for (const auto &m : pipeline_modes()) {
      stage_generate(cfg, m.initial_model ? paths.initial_model() : paths.model(), paths.test_split(), m.mode,
                     paths.generated(m.name));
    }
    stage = "eval";
    for (const auto &m : pipeline_modes()) {
      result.reports.push_back(stage_eval(cfg, m.name, paths.generated(m.name), paths.test_split(),
                                          paths.report(m.name), paths.transitions(m.name)));
    }
    stage = "compare";
    std::vector<nlohmann::json> docs;
    std::vector<std::string> labels;
    for (const auto &m : pipeline_modes()) {
      docs.push_back(read_json(paths.report(m.name)));
      labels.push_back(m.name);
    }
    const auto cmp = compare_reports(docs, labels);
    write_text(paths.comparison_table(), results_table(result.reports) + "\n" + cmp.to_table());
    write_json(paths.comparison_json(), cmp.to_json());
  } catch (const std::exception &e) {
    result.exit_code = 3;
    result.failed_stage = stage;
    result.message = e.what();
  }
  return result;
}

}  // namespace relist
