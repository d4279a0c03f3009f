#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "relist/em.hpp"
#include "relist/lexicon.hpp"
#include "relist/types.hpp"

namespace relist {

enum class GenerationMode { ReList, RandSelect, SingleLM, FlatBaseline };

std::string_view to_string(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view s);

struct GenerationRequest {
  Sentence prompt;
  RelationshipSet relationships;
  // Story characters; when empty the characters of `relationships` are used.
  std::vector<std::string> characters;
  std::uint64_t seed = 0;
  std::size_t max_sentences = 20;
  std::size_t max_tokens = 40;
  GenerationMode mode = GenerationMode::ReList;
};

enum class Termination { EosStory, MaxSentences };

std::string_view to_string(Termination t);

struct GeneratedStory {
  Story story;
  LatentTrace trace;
  Termination termination = Termination::MaxSentences;
  // Sentences cut at max_tokens.
  std::size_t truncated_sentences = 0;

  friend bool operator==(const GeneratedStory &, const GeneratedStory &) = default;
};

// Alternates selecting z_i and generating x_i until a Null-LM sentence
// starts with <EOS-STORY> or max_sentences is reached. Deterministic in
// request.seed. Throws IncompatibleVocabulary if a character name is a
// reserved token.
GeneratedStory generate(const ReListModel &model, const GenerationRequest &request);

// Same as generate(); request.mode selects RandSelect / SingleLM /
// FlatBaseline behaviour.
GeneratedStory generate_mode_variants(const ReListModel &model, const GenerationRequest &request);

// Order-preserving. Request i is generated with seed derive_seed(batch_seed, i),
// so output does not depend on `parallelism`. Errors are collected and
// rethrown as one BatchError naming every failed index.
std::vector<GeneratedStory> generate_batch(const ReListModel &model, std::span<const GenerationRequest> requests,
                                           std::uint64_t batch_seed, std::size_t parallelism = 1);

// Corpus-format records plus "trace" and "termination" fields.
void write_generated(std::ostream &out, std::span<const GeneratedStory> stories,
                     std::span<const RelationshipSet> inputs, const SentimentLexicon &lexicon);
void save_generated(std::span<const GeneratedStory> stories, std::span<const RelationshipSet> inputs,
                    const SentimentLexicon &lexicon, const std::filesystem::path &path);

struct GeneratedRecord {
  GeneratedStory generated;
  RelationshipSet input;
};
std::vector<GeneratedRecord> load_generated(const std::filesystem::path &path);

}  // namespace relist
