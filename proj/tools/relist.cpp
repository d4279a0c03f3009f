// relist: command-line front end for the ReList experiment pipeline.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "relist/annotator.hpp"
#include "relist/error.hpp"
#include "relist/evaluator.hpp"
#include "relist/pipeline.hpp"

namespace {

using relist::ExperimentConfig;
using relist::PipelinePaths;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string output_dir;
};

void add_common(CLI::App *cmd, CommonOptions &opts) {
  cmd->add_option("--config", opts.config, "Experiment config file");
  cmd->add_option("--seed", opts.seed, "Global seed (overrides config and RELIST_SEED)");
  cmd->add_option("--jobs", opts.jobs, "Worker thread cap");
  cmd->add_option("--output-dir", opts.output_dir, "Output directory");
}

ExperimentConfig resolve_config(const CommonOptions &opts) {
  ExperimentConfig cfg = opts.config.empty() ? ExperimentConfig{} : relist::load_config(opts.config);
  relist::apply_environment(cfg);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  cfg.validate();
  return cfg;
}

std::string or_default(const std::string &value, const std::filesystem::path &fallback) {
  return value.empty() ? fallback.string() : value;
}

void ensure_parent(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

nlohmann::json read_json_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw relist::Error(relist::ErrorKind::IoError, "cannot open " + path);
  return nlohmann::json::parse(in);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Relationship-guided story generation experiments"};
  app.require_subcommand(1);
  CommonOptions common;

  auto *synth = app.add_subcommand("synth", "Synthesize a gold-labeled corpus");
  add_common(synth, common);
  std::string synth_out;
  std::optional<std::size_t> num_stories;
  synth->add_option("--out", synth_out, "Corpus file");
  synth->add_option("--num-stories", num_stories, "Number of stories");

  auto *annotate = app.add_subcommand("annotate", "Silver-annotate a corpus");
  add_common(annotate, common);
  std::string annotate_in, annotate_out, lexicon;
  annotate->add_option("--in", annotate_in, "Corpus file");
  annotate->add_option("--out", annotate_out, "Annotated corpus file");
  annotate->add_option("--lexicon", lexicon, "Sentiment lexicon TSV");
  bool also_split = true;
  annotate->add_flag("!--no-split", also_split, "Do not write the train/test split");

  auto *train = app.add_subcommand("train", "Train ReList with EM");
  add_common(train, common);
  std::string train_in, model_out, checkpoint_dir, e_mode;
  std::optional<std::size_t> cycles;
  train->add_option("--in", train_in, "Annotated training split");
  train->add_option("--out", model_out, "Model file");
  train->add_option("--checkpoint-dir", checkpoint_dir, "Write a model after every EM cycle");
  train->add_option("--e-mode", e_mode, "sample, hard or soft");
  train->add_option("--cycles", cycles, "EM cycles");

  auto *generate = app.add_subcommand("generate", "Generate stories for the test split");
  add_common(generate, common);
  std::string gen_model, gen_test, gen_mode = "relist", gen_out;
  std::optional<std::size_t> max_sentences;
  generate->add_option("--model", gen_model, "Model file");
  generate->add_option("--test", gen_test, "Annotated test split");
  generate->add_option("--mode", gen_mode, "relist, relist0, randselect, singlelm or flat");
  generate->add_option("--out", gen_out, "Generated stories file");
  generate->add_option("--max-sentences", max_sentences, "Sentence cap per story");

  auto *eval = app.add_subcommand("eval", "Evaluate generated stories");
  add_common(eval, common);
  std::string eval_generated, eval_test, eval_mode = "relist", eval_out, eval_csv;
  eval->add_option("--generated", eval_generated, "Generated stories file");
  eval->add_option("--test", eval_test, "Annotated test split");
  eval->add_option("--mode", eval_mode, "Mode name recorded in the report");
  eval->add_option("--out", eval_out, "Report file");
  eval->add_option("--csv", eval_csv, "Transition matrix CSV");

  auto *analyze = app.add_subcommand("analyze", "Latent-trace analyses of generated stories");
  add_common(analyze, common);
  std::string analyze_in;
  std::size_t top_k = 10;
  analyze->add_option("--generated", analyze_in, "Generated stories file")->required();
  analyze->add_option("--top-k", top_k, "N-grams per list");

  auto *compare = app.add_subcommand("compare", "Compare reports with paired t-tests");
  std::vector<std::string> compare_reports;
  std::vector<std::string> compare_labels;
  std::string compare_out;
  compare->add_option("reports", compare_reports, "Report files")->required()->expected(2, -1);
  compare->add_option("--labels", compare_labels, "Report labels");
  compare->add_option("--out", compare_out, "Write the comparison as JSON");

  auto *pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  add_common(pipeline, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  if (!compare->parsed()) {
    try {
      cfg = resolve_config(common);
      if (!lexicon.empty()) cfg.lexicon_path = lexicon;
      if (num_stories) cfg.synth.num_stories = *num_stories;
      if (!e_mode.empty()) cfg.em.e_mode = relist::parse_e_mode(e_mode);
      if (cycles) cfg.em.cycles = *cycles;
      if (max_sentences) cfg.generation.max_sentences = *max_sentences;
      cfg.validate();
      std::filesystem::create_directories(cfg.output_dir);
    } catch (const std::exception &e) {
      std::cerr << "config: " << e.what() << '\n';
      return 2;
    }
  }
  const PipelinePaths paths{cfg.output_dir};

  std::string stage;
  try {
    if (synth->parsed()) {
      stage = "synth";
      const std::filesystem::path out = or_default(synth_out, paths.corpus());
      ensure_parent(out);
      relist::stage_synth(cfg, out);
    } else if (annotate->parsed()) {
      stage = "annotate";
      const std::filesystem::path out = or_default(annotate_out, paths.annotated());
      ensure_parent(out);
      const auto stats = relist::stage_annotate(cfg, or_default(annotate_in, paths.corpus()), out);
      std::cout << stats.to_text();
      if (also_split) {
        stage = "split";
        relist::stage_split(cfg, out, paths.train_split(), paths.test_split());
      }
    } else if (train->parsed()) {
      stage = "train";
      const std::filesystem::path out = or_default(model_out, paths.model());
      ensure_parent(out);
      const auto report = relist::stage_train(cfg, or_default(train_in, paths.train_split()), out,
                                              paths.initial_model(), paths.train_report(), checkpoint_dir);
      std::cout << report.to_json().dump(2) << '\n';
    } else if (generate->parsed()) {
      stage = "generate";
      relist::GenerationMode mode = relist::GenerationMode::ReList;
      std::filesystem::path model = paths.model();
      if (gen_mode == "relist0") {
        model = paths.initial_model();
      } else {
        mode = relist::parse_generation_mode(gen_mode);
      }
      if (!gen_model.empty()) model = gen_model;
      const std::filesystem::path out = or_default(gen_out, paths.generated(gen_mode));
      ensure_parent(out);
      relist::stage_generate(cfg, model, or_default(gen_test, paths.test_split()), mode, out);
    } else if (eval->parsed()) {
      stage = "eval";
      const std::filesystem::path out = or_default(eval_out, paths.report(eval_mode));
      ensure_parent(out);
      const auto report = relist::stage_eval(cfg, eval_mode, or_default(eval_generated, paths.generated(eval_mode)),
                                             or_default(eval_test, paths.test_split()), out,
                                             or_default(eval_csv, paths.transitions(eval_mode)));
      std::cout << relist::results_table({report});
    } else if (analyze->parsed()) {
      stage = "analyze";
      const auto records = relist::load_generated(analyze_in);
      std::vector<std::vector<std::size_t>> traces;
      std::vector<relist::TracedStory> traced;
      for (const auto &r : records) {
        traces.push_back(relist::trace_classes(r.generated.trace, r.input));
        traced.push_back({&r.generated.story, &r.generated.trace, &r.input});
      }
      const auto tm = relist::transition_matrix(traces);
      std::cout << "transition matrix (self-transitions discounted)\n" << tm.to_csv() << '\n';
      const auto pd = relist::position_distribution(traces);
      std::cout << "position distribution (%)\nposition,positive,neutral,negative,null\n";
      for (const auto &[name, row] : {std::pair{"beginning", pd.beginning}, std::pair{"ending", pd.ending},
                                      std::pair{"overall", pd.overall}}) {
        std::cout << name;
        for (double v : row) std::cout << ',' << v;
        std::cout << '\n';
      }
      const auto ngrams = relist::top_ngrams_by_polarity(traced, 3, relist::default_stopwords(), top_k);
      for (std::size_t p = 0; p < relist::kNumPolarities; ++p) {
        for (std::size_t n = 0; n < ngrams[p].size(); ++n) {
          std::cout << '\n' << relist::to_string(relist::kAllPolarities[p]) << ' ' << n + 1 << "-grams:";
          for (const auto &[gram, c] : ngrams[p][n]) std::cout << "  " << gram << " (" << c << ')';
        }
      }
      std::cout << '\n';
    } else if (compare->parsed()) {
      stage = "compare";
      std::vector<nlohmann::json> docs;
      for (const auto &p : compare_reports) docs.push_back(read_json_file(p));
      if (compare_labels.empty()) compare_labels = compare_reports;
      const auto cmp = relist::compare_reports(docs, compare_labels);
      std::cout << cmp.to_table();
      if (!compare_out.empty()) {
        std::ofstream out(compare_out, std::ios::binary);
        out << cmp.to_json().dump(2) << '\n';
      }
    } else if (pipeline->parsed()) {
      const auto result = relist::run_pipeline(cfg);
      if (result.exit_code != 0) {
        std::cerr << "stage " << result.failed_stage << " failed: " << result.message << '\n';
        return result.exit_code;
      }
      std::cout << relist::results_table(result.reports);
    }
  } catch (const std::exception &e) {
    std::cerr << "stage " << stage << " failed: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
