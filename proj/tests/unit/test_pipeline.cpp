#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "relist/error.hpp"
#include "relist/pipeline.hpp"

using namespace relist;

namespace {

std::filesystem::path fresh_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / ("relist_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentConfig tiny_config(const std::filesystem::path &dir) {
  ExperimentConfig cfg;
  cfg.synth.num_stories = 120;
  cfg.em.cycles = 1;
  cfg.em.selector.steps = 40;
  cfg.eval.pcls.steps = 20;
  cfg.output_dir = dir;
  return cfg;
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parser reads every section") {
  const auto cfg = parse_config(R"(
# comment
seed = 11
lexicon = "lex.tsv"   # trailing comment
split_fraction = 0.2
output_dir = "somewhere"
jobs = 2

[synth]
num_stories = 50
characters = [2, 3]
sentences = [5, 9]
relationships = [1, 2]
polarity_mix = [0.5, 0.2, 0.3]
null_sentence_rate = 0.25

[em]
cycles = 4
warmup = 2
e_mode = "soft"
null_lm_all_sentences_at_init = false
allow_empty_m_step = false

[selector]
steps = 10
learning_rate = 0.5
l2 = 0.01

[lm]
order = 2
alpha = 0.5
lambdas = [0.25, 0.75]

[generation]
max_sentences = 7
max_tokens = 12
samples_per_input = 2

[eval]
top_k = 4
n_max = 2
pooled_distinct = true
pcls_steps = 9
)");
  CHECK(cfg.seed == 11);
  CHECK(cfg.lexicon_path == "lex.tsv");
  CHECK(cfg.split_fraction == doctest::Approx(0.2));
  CHECK(cfg.output_dir == "somewhere");
  CHECK(cfg.jobs == 2);
  CHECK(cfg.synth.num_stories == 50);
  CHECK(cfg.synth.characters_per_story.max == 3);
  CHECK(cfg.synth.sentences_per_story.min == 5);
  CHECK(cfg.synth.polarity_mix[0] == doctest::Approx(0.5));
  CHECK(cfg.synth.null_sentence_rate == doctest::Approx(0.25));
  CHECK(cfg.em.cycles == 4);
  CHECK(cfg.em.e_mode == EMode::Soft);
  CHECK_FALSE(cfg.em.null_lm_all_sentences_at_init);
  CHECK_FALSE(cfg.em.allow_empty_m_step);
  CHECK(cfg.em.selector.steps == 10);
  CHECK(cfg.em.lm.order == 2);
  CHECK(cfg.em.lm.lambdas == std::vector<double>{0.25, 0.75});
  CHECK(cfg.generation.max_sentences == 7);
  CHECK(cfg.generation.samples_per_input == 2);
  CHECK(cfg.eval.top_k == 4);
  CHECK(cfg.eval.pooled_distinct);
  CHECK(cfg.eval.pcls.steps == 9);
  CHECK(cfg.eval.polarity_mix == cfg.synth.polarity_mix);
}

TEST_CASE("config errors name the line") {
  CHECK_THROWS_WITH_AS(parse_config("seed = 1\nbogus = 2\n"), doctest::Contains("line 2"), Error);
  CHECK_THROWS_WITH_AS(parse_config("seed = 1\nseed = 2\n"), doctest::Contains("duplicate"), Error);
  CHECK_THROWS_WITH_AS(parse_config("[em]\ncycles = -1\n"), doctest::Contains("InvalidConfig"), Error);
  CHECK_THROWS_AS(parse_config("seed = x\n"), Error);
  CHECK_THROWS_AS(parse_config("[em\n"), Error);
  CHECK_THROWS_AS(parse_config("just words\n"), Error);
  CHECK_THROWS_AS(parse_config("[synth]\npolarity_mix = [1, 2]\n"), Error);
  CHECK_THROWS_AS(parse_config("[em]\ne_mode = \"beam\"\n"), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), Error);
}

TEST_CASE("shipped config parses and validates") {
  const auto cfg = load_config(std::filesystem::path(RELIST_SOURCE_DIR) / "configs" / "default.toml");
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.seed == 7);
  CHECK(cfg.synth.num_stories == 2000);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.split_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ExperimentConfig{};
  cfg.jobs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ExperimentConfig{};
  cfg.generation.max_tokens = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("seed environment override") {
  ExperimentConfig cfg;
  setenv("RELIST_SEED", "123", 1);
  apply_environment(cfg);
  CHECK(cfg.seed == 123);
  setenv("RELIST_SEED", "12x", 1);
  CHECK_THROWS_AS(apply_environment(cfg), Error);
  unsetenv("RELIST_SEED");
  apply_environment(cfg);
  CHECK(cfg.seed == 123);
}

TEST_CASE("stage seeds differ by stage and seed") {
  ExperimentConfig a, b;
  b.seed = a.seed + 1;
  CHECK(stage_seed(a, "synth") != stage_seed(a, "split"));
  CHECK(stage_seed(a, "synth") != stage_seed(b, "synth"));
  CHECK(stage_seed(a, "train") == stage_seed(a, "train"));
}

TEST_CASE("pipeline writes every artifact and is reproducible") {
  const auto dir = fresh_dir("pipeline");
  const auto cfg = tiny_config(dir);
  const auto result = run_pipeline(cfg);
  REQUIRE_MESSAGE(result.exit_code == 0, result.message);
  CHECK(result.reports.size() == pipeline_modes().size());
  const PipelinePaths paths{dir};
  for (const auto &p : {paths.corpus(), paths.annotated(), paths.annotate_stats(), paths.train_split(),
                        paths.test_split(), paths.model(), paths.initial_model(), paths.train_report(),
                        paths.comparison_table(), paths.comparison_json()}) {
    CHECK_MESSAGE(std::filesystem::exists(p), p.string());
  }
  for (const auto &m : pipeline_modes()) {
    CHECK(std::filesystem::exists(paths.generated(m.name)));
    CHECK(std::filesystem::exists(paths.report(m.name)));
    CHECK(std::filesystem::exists(paths.transitions(m.name)));
  }
  const auto first = slurp(paths.report("relist"));
  const auto second_dir = fresh_dir("pipeline_again");
  auto again = cfg;
  again.output_dir = second_dir;
  again.jobs = 3;
  REQUIRE(run_pipeline(again).exit_code == 0);
  CHECK(slurp(PipelinePaths{second_dir}.report("relist")) == first);
  CHECK(slurp(PipelinePaths{second_dir}.generated("flat")) == slurp(paths.generated("flat")));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(second_dir);
}

TEST_CASE("pipeline failures name the stage") {
  const auto dir = fresh_dir("missing_lexicon");
  auto cfg = tiny_config(dir);
  cfg.lexicon_path = (dir / "no_such_lexicon.tsv").string();
  const auto result = run_pipeline(cfg);
  CHECK(result.exit_code == 3);
  CHECK(result.failed_stage == "annotate");
  CHECK(std::filesystem::exists(PipelinePaths{dir}.corpus()));

  auto bad = tiny_config(dir);
  bad.split_fraction = 0.0;
  const auto invalid = run_pipeline(bad);
  CHECK(invalid.exit_code == 2);
  CHECK(invalid.failed_stage == "config");
  std::filesystem::remove_all(dir);
}

TEST_CASE("results table lists every mode") {
  EvaluationReport a, b;
  a.mode = "relist";
  b.mode = "flat";
  const auto table = results_table({a, b});
  CHECK(table.find("relist") != std::string::npos);
  CHECK(table.find("flat") != std::string::npos);
  CHECK(table.find("%Exact") != std::string::npos);
}
