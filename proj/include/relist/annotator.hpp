#pragma once

// Silver annotation: find sentences where one character is the subject and
// another the object of the main verb, pool each pair's sentences, score the
// pool with the valence lexicon, and label sentences with their pair's
// triple (all other sentences get the null relationship).

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relist/corpus.hpp"
#include "relist/lexicon.hpp"
#include "relist/types.hpp"

namespace relist {

struct PolarityScores {
  double pos = 0.0;
  double neg = 0.0;
  double neu = 0.0;

  friend bool operator==(const PolarityScores &, const PolarityScores &) = default;
};

struct SilverAnnotation {
  RelationshipSet relationships;
  LatentTrace sentence_labels;

  friend bool operator==(const SilverAnnotation &, const SilverAnnotation &) = default;
};

// Pair named by the unique subject and object mentions, if they differ.
std::optional<CharacterPair> eligible_pair(const AnalyzedSentence &s);

PolarityScores score_sentiment(std::span<const std::string> tokens, const SentimentLexicon &lexicon);

// Positive if pos > neg, Negative if neg > pos, Neutral on a tie.
Polarity polarity_of(const PolarityScores &scores);

// Verb-anchored role tagging for raw text. Mentions are tokens that appear in
// `inventory`. The main verb is the first lexicon verb. A mention before it is
// the subject only when it is the sole mention before the verb (coordinated
// subjects get Other); the first mention after the verb is the object.
AnalyzedSentence analyze_sentence(const Sentence &sentence, std::span<const std::string> inventory,
                                  const SentimentLexicon &lexicon);

// Pipeline over already-analyzed sentences. Returns nullopt when no pair is
// found (the story is discarded).
std::optional<SilverAnnotation> annotate_sentences(std::span<const AnalyzedSentence> analyzed,
                                                   const SentimentLexicon &lexicon);

// Throws AlignmentError if the analysis does not line up with the story.
std::optional<SilverAnnotation> annotate_story(const Story &story, std::span<const AnalyzedSentence> analyzed,
                                               const SentimentLexicon &lexicon);

struct AnnotatedStory {
  GoldStory source;
  SilverAnnotation silver;
};

struct CorpusStats {
  std::size_t input_stories = 0;
  std::size_t count = 0;  // stories kept
  std::size_t total_relationships = 0;
  double mean_relationships = 0.0;
  std::array<double, kNumPolarities> polarity_distribution{0.0, 0.0, 0.0};  // fractions

  std::string to_text() const;
};

// Drops discarded stories. AlignmentError messages carry the story index.
std::pair<std::vector<AnnotatedStory>, CorpusStats> annotate_corpus(std::span<const GoldStory> stories,
                                                                   const SentimentLexicon &lexicon);

inline constexpr std::string_view kAnnotatedFormat = "relist-annotated-v1";

// Corpus records plus "silver_relationships" and "silver_labels".
void save_annotated(std::span<const AnnotatedStory> stories, const std::filesystem::path &path);
std::vector<AnnotatedStory> load_annotated(const std::filesystem::path &path);

}  // namespace relist
