#pragma once

// Weighted-count n-gram language model: additive smoothing inside each order,
// fixed-weight linear interpolation across orders, no backoff. Counts may be
// fractional so the model can be fit to soft assignments.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "relist/rng.hpp"
#include "relist/types.hpp"

namespace relist {

inline constexpr std::string_view kBos = "<BOS>";
inline constexpr std::string_view kEosSent = "<EOS-SENT>";
inline constexpr std::string_view kEosStory = "<EOS-STORY>";
inline constexpr std::string_view kUnk = "<UNK>";
inline constexpr std::string_view kNullTag = "<NULL>";
inline constexpr std::string_view kSep = "<$>";
inline constexpr std::string_view kAt = "<@>";

std::string polarity_token(Polarity p);   // <POL:positive>
std::string char_placeholder(std::size_t k);  // <CHARk>, k >= 1
// k for "<CHARk>", 0 otherwise.
std::size_t placeholder_index(std::string_view token);

struct LMConfig {
  int order = 3;
  double alpha = 0.1;
  // Interpolation weights for orders 1..n; empty means uniform.
  std::vector<double> lambdas;

  std::vector<double> resolved_lambdas() const;
  // Throws InvalidConfig.
  void validate() const;
};

struct WeightedSequence {
  std::vector<std::string> prefix;  // conditioning tokens, never predicted
  std::vector<std::string> body;    // predicted tokens; <EOS-SENT> is appended
  double weight = 1.0;
};

struct SampleResult {
  std::vector<std::string> tokens;  // without <EOS-SENT>
  bool truncated = false;
};

class NGramLM {
 public:
  // Throws EmptyTrainingSet when `data` is empty, InvalidConfig on bad
  // weights or config.
  static NGramLM train(std::span<const WeightedSequence> data, const LMConfig &cfg);

  // Sum of log conditionals over body tokens and the closing <EOS-SENT>.
  // Unknown tokens are scored as <UNK>.
  double log_prob(std::span<const std::string> prefix, std::span<const std::string> body) const;

  // Next-token distribution over outcomes() given the tokens seen so far
  // (prefix followed by body so far, without BOS padding).
  std::vector<double> next_distribution(std::span<const std::string> history) const;
  double prob(std::span<const std::string> history, std::string_view token) const;

  SampleResult sample(std::span<const std::string> prefix, Rng &rng, std::size_t max_tokens) const;

  const LMConfig &config() const noexcept { return cfg_; }
  // Sorted predicted vocabulary, including <EOS-SENT> and <UNK>.
  const std::vector<std::string> &outcomes() const noexcept { return outcomes_; }
  // Raw weighted count of `token` after `context` (context length k-1 for order k).
  double count(std::span<const std::string> context, std::string_view token) const;
  double context_total(std::span<const std::string> context) const;
  // Total weighted number of predicted events (unigram count mass).
  double total_events() const { return context_total({}); }

  nlohmann::json to_json() const;
  static NGramLM from_json(const nlohmann::json &j);

 private:
  struct ContextCounts {
    double total = 0.0;
    std::unordered_map<std::size_t, double> counts;
  };

  std::size_t outcome_id(std::string_view token) const;
  std::string context_key(std::span<const std::string> padded, std::size_t end, int k) const;
  std::vector<std::string> padded_history(std::span<const std::string> history) const;
  double prob_at(std::span<const std::string> padded, std::size_t end, std::size_t outcome) const;
  void index_outcomes();

  LMConfig cfg_;
  std::vector<double> lambdas_;
  std::vector<std::string> outcomes_;
  std::unordered_map<std::string, std::size_t> outcome_index_;
  std::size_t unk_id_ = 0;
  std::size_t eos_id_ = 0;
  // tables_[k-1]: context key (k-1 tokens joined by ' ') -> counts.
  std::vector<std::unordered_map<std::string, ContextCounts>> tables_;
};

}  // namespace relist
