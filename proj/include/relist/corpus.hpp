#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "relist/lexicon.hpp"
#include "relist/types.hpp"

namespace relist {

enum class MentionRole { SubjectOfMainVerb, ObjectOfMainVerb, Other };

std::string_view to_string(MentionRole role);
MentionRole parse_mention_role(std::string_view s);

struct Mention {
  std::string name;
  std::size_t position = 0;
  MentionRole role = MentionRole::Other;

  friend bool operator==(const Mention &, const Mention &) = default;
};

// A sentence with character mentions and their syntactic roles relative to
// the main verb.
struct AnalyzedSentence {
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;

  // Throws AlignmentError if a position is out of range or a role repeats.
  void check() const;

  friend bool operator==(const AnalyzedSentence &, const AnalyzedSentence &) = default;
};

struct GoldStory {
  Story story;
  RelationshipSet gold_relationships;
  LatentTrace gold_sentence_labels;
  std::vector<AnalyzedSentence> analyzed;

  friend bool operator==(const GoldStory &, const GoldStory &) = default;
};

struct IntRange {
  int min = 0;
  int max = 0;
};

struct SynthConfig {
  std::size_t num_stories = 2000;
  IntRange characters_per_story{2, 4};
  IntRange sentences_per_story{8, 14};
  IntRange relationships_per_story{1, 3};
  // Positive, Neutral, Negative.
  std::array<double, 3> polarity_mix{0.36, 0.19, 0.45};
  double null_sentence_rate = 0.5;
  std::uint64_t seed = 7;

  // Throws InvalidConfig.
  void validate() const;
};

// Deterministic in (cfg, lexicon). Requires >= 3 verbs per polarity class in
// the lexicon (LexiconTooSmall).
std::vector<GoldStory> synthesize_corpus(const SynthConfig &cfg, const SentimentLexicon &lexicon);

struct CorpusSplit {
  std::vector<GoldStory> train;
  std::vector<GoldStory> test;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// test size = round(fraction * n); throws InvalidFraction unless 0 < fraction < 1.
SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

// test size = round(fraction * n); throws InvalidFraction unless 0 < fraction < 1.
CorpusSplit split_corpus(std::vector<GoldStory> stories, double test_fraction, std::uint64_t seed);

inline constexpr std::string_view kCorpusFormat = "relist-corpus-v1";

// Line-delimited JSON: a header line {"format": "relist-corpus-v1"} followed
// by one record per story with keys prompt, sentences, characters,
// gold_relationships, gold_sentence_labels, analyzed.
void write_corpus(std::ostream &out, const std::vector<GoldStory> &stories);
std::vector<GoldStory> read_corpus(std::istream &in);
void save_corpus(const std::vector<GoldStory> &stories, const std::filesystem::path &path);
std::vector<GoldStory> load_corpus(const std::filesystem::path &path);

}  // namespace relist
