#pragma once

// Relationship selector p(z_i | C_<i, R): a log-linear model scoring every
// candidate in {null, r^1..r^K} with a fixed feature template.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "relist/types.hpp"

namespace relist {

inline constexpr std::string_view kSelectorTemplate = "relist-selector-v1";

enum class SelectorFeature : std::size_t {
  NullBias,
  NullContextLength,  // (i-1) / 10
  NullPosition,       // min((i-1) / 12, 1)
  NullPrevMulti,      // previous sentence mentions >= 2 characters
  PositiveBias,
  NeutralBias,
  NegativeBias,
  MentionsFirst,   // mentions of the pair's first character in x_1..x_{i-1}
  MentionsSecond,
  RecencyFirst,    // sentences since last mention, capped at kRecencyCap, / kRecencyCap
  RecencySecond,
  PairCount,       // previous sentences mentioning both characters
  PairUnexpressed, // PairCount == 0
  PrevPair,        // previous sentence mentions both characters
  Count,
};

inline constexpr std::size_t kNumSelectorFeatures = static_cast<std::size_t>(SelectorFeature::Count);
inline constexpr double kRecencyCap = 5.0;

std::string_view feature_name(SelectorFeature f);

// Sparse feature vector: (feature id, value) pairs, ids strictly increasing.
class FeatureVector {
 public:
  void set(SelectorFeature f, double value);
  double get(SelectorFeature f) const;
  double dot(std::span<const double> weights) const;
  void add_to(std::span<double> dense, double scale) const;
  const std::vector<std::pair<std::size_t, double>> &entries() const noexcept { return entries_; }
  // Multiply every value by c.
  void scale(double c);

  friend bool operator==(const FeatureVector &, const FeatureVector &) = default;

 private:
  std::vector<std::pair<std::size_t, double>> entries_;
};

// Selector input: the relationship set and the story so far (no latent).
struct SelectorInput {
  const RelationshipSet *relationships = nullptr;
  Context context;
};

FeatureVector selector_features(const SelectorInput &input, LatentValue candidate);

// One training example: a feature vector per candidate (index 0 = null) and a
// target distribution over the candidates.
struct SelectorExample {
  std::vector<FeatureVector> candidates;
  std::vector<double> target;
  double weight = 1.0;
};

std::vector<FeatureVector> candidate_features(const SelectorInput &input);

struct SelectorTrainConfig {
  std::size_t steps = 400;
  double learning_rate = 1.0;
  double l2 = 1e-4;
  // Stop once an accepted step improves the objective by less than this.
  double tolerance = 1e-10;
};

class SelectorModel {
 public:
  SelectorModel() : weights_(kNumSelectorFeatures, 0.0) {}
  explicit SelectorModel(std::vector<double> weights);

  std::span<const double> weights() const noexcept { return weights_; }
  const std::string &template_id() const noexcept { return template_id_; }

  std::vector<double> log_probs(std::span<const FeatureVector> candidates) const;
  std::vector<double> log_probs(const SelectorInput &input) const;

  nlohmann::json to_json() const;
  static SelectorModel from_json(const nlohmann::json &j);

  friend bool operator==(const SelectorModel &, const SelectorModel &) = default;

 private:
  std::vector<double> weights_;
  std::string template_id_{kSelectorTemplate};
};

// log p(z | C, R) for z = null, r^1..r^K.
inline std::vector<double> selector_log_prob(const SelectorModel &sel, const SelectorInput &input) {
  return sel.log_probs(input);
}

// Gradient of sum_c target_c log p_c with respect to the weights:
// sum_c (target_c - p_c) f_c. The batch form weights each example.
std::vector<double> selector_grad(const SelectorModel &sel, const SelectorExample &example);
std::vector<double> selector_grad(const SelectorModel &sel, std::span<const SelectorExample> batch);

// sum_c target_c log p_c for one example.
double selector_log_likelihood(const SelectorModel &sel, const SelectorExample &example);

// Weighted mean log-likelihood minus l2 * |w|^2.
double selector_objective(const SelectorModel &sel, std::span<const SelectorExample> examples, double l2);

struct SelectorTrainResult {
  SelectorModel model;
  std::size_t steps_taken = 0;
  double objective = 0.0;
};

// Batch gradient ascent with step halving on a failed step and mild step
// growth after a successful one. Throws Divergence on a non-finite objective.
SelectorTrainResult selector_train(const SelectorModel &init, std::span<const SelectorExample> examples,
                                   const SelectorTrainConfig &cfg);

}  // namespace relist
