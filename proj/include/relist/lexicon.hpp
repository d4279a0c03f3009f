#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "relist/types.hpp"

namespace relist {

// Token valence table. File format, one entry per line:
//
//   token<TAB>valence[<TAB>verb]
//
// '#' starts a comment line. The optional third column marks the token as a
// verb; verbs anchor the subject/object analysis and feed the synthetic
// grammar. Unknown tokens have valence 0.
class SentimentLexicon {
 public:
  SentimentLexicon() = default;

  static SentimentLexicon parse(std::istream &in);
  static SentimentLexicon load(const std::filesystem::path &path);

  void add(std::string token, double valence, bool is_verb = false);

  double valence(std::string_view token) const;
  bool contains(std::string_view token) const;
  bool is_verb(std::string_view token) const;
  std::size_t size() const noexcept { return valences_.size(); }

  // Verbs grouped by the sign of their valence (Positive, Neutral, Negative),
  // in file order.
  const std::vector<std::string> &verbs(Polarity p) const {
    return verbs_by_class_[static_cast<std::size_t>(p)];
  }

  std::string serialize() const;

  friend bool operator==(const SentimentLexicon &, const SentimentLexicon &) = default;

 private:
  std::map<std::string, double, std::less<>> valences_;
  std::map<std::string, bool, std::less<>> verbs_;
  std::vector<std::string> order_;
  std::array<std::vector<std::string>, kNumPolarities> verbs_by_class_;
};

// The lexicon bundled with the library (identical to data/lexicon.tsv).
const SentimentLexicon &default_lexicon();
std::string_view default_lexicon_text();

Polarity valence_class(double v);

}  // namespace relist
