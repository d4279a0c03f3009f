#pragma once

// Automatic evaluation: relationship identification (RI), polarity
// classification (P-CLS), content-quality metrics and latent-trace analyses.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relist/corpus.hpp"
#include "relist/generator.hpp"
#include "relist/lexicon.hpp"
#include "relist/types.hpp"

namespace relist {

// ---- relationship identification ----

// Runs the annotation pipeline on generated text. Empty when no pair is found.
std::vector<RelationshipTriple> identify_relationships(const Story &story, std::span<const std::string> inventory,
                                                       const SentimentLexicon &lexicon);

struct RICounts {
  std::size_t exact = 0;
  std::size_t unspec = 0;
  std::size_t incorrect = 0;

  std::size_t total() const { return exact + unspec + incorrect; }
};

RICounts classify_identified(const RelationshipSet &input, std::span<const RelationshipTriple> identified);

struct RIReport {
  double pct_exact = 0.0;
  double pct_unspec = 0.0;
  double pct_incorrect = 0.0;
  double avg_rel = 0.0;
  std::size_t identified_total = 0;
  std::size_t stories = 0;
  // Set when nothing was identified; the percentages are then 0.
  bool undefined = false;
};

struct RIInput {
  RelationshipSet input;
  const Story *story = nullptr;
};

RIReport ri_metrics(std::span<const RIInput> inputs, const SentimentLexicon &lexicon);
RIReport ri_from_counts(std::span<const RICounts> per_story);

// ---- polarity classification ----

struct PairExample {
  const Story *story = nullptr;
  CharacterPair pair;
  Polarity polarity = Polarity::Neutral;
};

// Bag of words over the sentences that mention both characters (names
// removed) plus co-mention count and token-distance buckets.
std::vector<std::string> pair_features(const Story &story, const CharacterPair &pair);

struct PCLSConfig {
  std::size_t steps = 200;
  double learning_rate = 0.5;
  double l2 = 1e-3;
};

struct PCLSReport {
  double accuracy = 0.0;
  // Share of the most frequent class in the test labels.
  double majority_baseline = 0.0;
  // Expected accuracy of guessing by the training label distribution.
  double random_baseline = 0.0;
  std::array<double, kNumPolarities> test_distribution{0.0, 0.0, 0.0};
  std::size_t train_pairs = 0;
  std::size_t test_pairs = 0;
};

// Throws EmptyTrainingSet when `train` is empty.
PCLSReport pcls(std::span<const PairExample> train, std::span<const PairExample> test, const PCLSConfig &cfg = {});

// Reference numbers for a configured polarity mix: majority share and the
// expected accuracy of a guesser that follows the mix.
struct MixBaselines {
  double majority = 0.0;
  double random = 0.0;
};
MixBaselines mix_baselines(const std::array<double, kNumPolarities> &mix);

// ---- content quality ----

inline constexpr double kBleuEpsilon = 1e-9;

double bleu(std::span<const std::string> candidate, std::span<const std::string> reference, int max_n = 4);

struct RougeScores {
  double rouge1_f = 0.0;
  double rougeL_f = 0.0;
};
RougeScores rouge(std::span<const std::string> candidate, std::span<const std::string> reference);

// Ratio of unique to total n-grams in one token sequence; 0 when shorter than n.
double distinct_ratio(std::span<const std::string> tokens, int n);

struct DistinctResult {
  double value = 0.0;
  // Stories shorter than n (counted as 0 in the per-story mean).
  std::size_t short_stories = 0;
};

// Per-story mean by default; `pooled` counts n-grams over the whole corpus.
DistinctResult distinct_n(std::span<const std::vector<std::string>> stories, int n, bool pooled = false);

// Story body tokens (prompt excluded), sentences concatenated.
std::vector<std::string> story_tokens(const Story &story);

struct ContentReport {
  double bleu = 0.0;
  double rouge1_f = 0.0;
  double rougeL_f = 0.0;
  double distinct1 = 0.0;
  double distinct2 = 0.0;
  double distinct3 = 0.0;
};

// ---- trace analyses ----

// Trace classes: 0 Positive, 1 Neutral, 2 Negative, 3 null.
inline constexpr std::size_t kNumTraceClasses = 4;
inline constexpr std::size_t kNullClass = 3;
std::string_view trace_class_name(std::size_t c);

std::vector<std::size_t> trace_classes(const LatentTrace &trace, const RelationshipSet &set);

struct TransitionMatrix {
  std::array<std::array<double, kNumTraceClasses>, kNumTraceClasses> p{};
  std::array<std::size_t, kNumTraceClasses> row_counts{};
  // Rows without any counted transition (left all-zero).
  std::array<bool, kNumTraceClasses> empty_row{};

  std::string to_csv() const;
};

TransitionMatrix transition_matrix(std::span<const std::vector<std::size_t>> traces);

struct PositionDistribution {
  // Percentages over the trace classes.
  std::array<double, kNumTraceClasses> beginning{};
  std::array<double, kNumTraceClasses> ending{};
  std::array<double, kNumTraceClasses> overall{};
};

// Throws InvalidConfig when there is no non-empty trace.
PositionDistribution position_distribution(std::span<const std::vector<std::size_t>> traces);

const std::vector<std::string> &default_stopwords();

using RankedNgrams = std::vector<std::pair<std::string, std::size_t>>;
// [polarity][n-1] -> top-k n-grams over sentences assigned that polarity.
using PolarityNgrams = std::array<std::vector<RankedNgrams>, kNumPolarities>;

struct TracedStory {
  const Story *story = nullptr;
  const LatentTrace *trace = nullptr;
  const RelationshipSet *relationships = nullptr;
};

// Stopwords, character names and reserved tokens are removed before
// counting. Ties are broken lexicographically.
PolarityNgrams top_ngrams_by_polarity(std::span<const TracedStory> stories, int n_max,
                                      std::span<const std::string> stopwords, std::size_t k);

// ---- full report ----

inline constexpr std::string_view kReportFormat = "relist-report-v1";

struct EvalItem {
  std::string id;
  // Held-out story: BLEU/ROUGE reference and gold P-CLS labels.
  const GoldStory *reference = nullptr;
  // Relationships the generation was conditioned on.
  RelationshipSet input;
  const GeneratedStory *generated = nullptr;
};

struct EvalOptions {
  PCLSConfig pcls;
  std::array<double, kNumPolarities> polarity_mix{0.36, 0.19, 0.45};
  std::size_t top_k = 10;
  int n_max = 3;
  bool pooled_distinct = false;
  std::size_t jobs = 1;
};

struct StoryScores {
  std::string id;
  RICounts ri;
  double bleu = 0.0;
  double rouge1_f = 0.0;
  double rougeL_f = 0.0;
  double distinct1 = 0.0;
  double distinct2 = 0.0;
  double distinct3 = 0.0;
  std::size_t sentences = 0;
};

struct EvaluationReport {
  std::string mode;
  RIReport ri;
  PCLSReport pcls;
  MixBaselines mix;
  ContentReport content;
  TransitionMatrix transitions;
  PositionDistribution positions;
  PolarityNgrams ngrams;
  double mean_sentences = 0.0;
  std::size_t eos_terminated = 0;
  std::size_t truncated_sentences = 0;
  std::vector<StoryScores> per_story;

  nlohmann::json to_json() const;
};

EvaluationReport evaluate(std::string mode, std::span<const EvalItem> items, const SentimentLexicon &lexicon,
                          const EvalOptions &options = {});

void save_report(const EvaluationReport &report, const std::filesystem::path &path);

// ---- report comparison ----

// Two-sided paired t-test. Returns 1 when every difference is zero and 0 when
// the differences are constant and non-zero.
double paired_t_test(std::span<const double> a, std::span<const double> b);

struct MetricComparison {
  std::string metric;
  std::vector<double> means;   // one per report
  std::vector<double> deltas;  // report r minus report 0
  std::vector<double> p_values;
};

struct Comparison {
  std::vector<std::string> labels;
  std::vector<MetricComparison> metrics;

  std::string to_table() const;
  nlohmann::json to_json() const;
};

// Throws MisalignedReports when story ids differ or the schema is not
// relist-report-v1.
Comparison compare_reports(std::span<const nlohmann::json> reports, std::span<const std::string> labels);

}  // namespace relist
