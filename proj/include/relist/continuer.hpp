#pragma once

// Story continuer: the conditional sentence models p(x_i | z_i, C_<i, R).
// Character names are replaced by <CHARk> placeholders before counting so
// the count models generalize across names.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relist/ngram_lm.hpp"
#include "relist/rng.hpp"
#include "relist/types.hpp"

namespace relist {

struct Delexicalized {
  Sentence sentence;
  // names[k-1] was replaced by <CHARk>.
  std::vector<std::string> names;
};

// `leading` names take <CHAR1>, <CHAR2>, ... in the given order; any other
// `inventory` name found in the sentence takes the next free placeholder in
// order of appearance. Tokens that are not names are left untouched.
Delexicalized delexicalize(const Sentence &sentence, std::span<const std::string> leading,
                           std::span<const std::string> inventory);

// Replaces <CHARk> with names[k-1]; placeholders without a name stay as is.
Sentence relexicalize(const Sentence &sentence, std::span<const std::string> names);

// The pair's names ordered by first appearance in the sentence (the subject
// comes first in subject-verb-object sentences). Names that do not occur keep
// canonical order after the ones that do.
std::vector<std::string> pair_slot_order(const Sentence &sentence, const CharacterPair &pair);

// Everything a continuer may condition on.
struct Conditioning {
  const RelationshipSet *relationships = nullptr;
  Context context;
  LatentValue latent;
  std::span<const std::string> characters;
};

// Interchange form of the conditioning:
//   Relationship LM: "R <@> C <@> z <$>"
//   Null LM:         "R <$> C"
// with R and z written as triples and C as the prompt plus previous sentences.
std::string serialize_conditioning(const Conditioning &cond, bool relationship_form);

enum class ContinuerKind {
  Relationship,  // z != null, prefix <POL:p>, pair-first delexicalization
  Null,          // z == null, no prefix
  Single,        // any z, prefix <POL:p> or <NULL>
  Flat,          // ignores z, prefix is the serialized (R, prompt)
};

std::string_view to_string(ContinuerKind kind);

struct EncodedSentence {
  std::vector<std::string> prefix;
  Delexicalized body;
};

struct ContinuerExample {
  Sentence sentence;
  Conditioning cond;
  double weight = 1.0;
};

class ContinuerLM {
 public:
  // Throws EmptyTrainingSet when `examples` is empty or carries no weight.
  static ContinuerLM train(ContinuerKind kind, std::span<const ContinuerExample> examples, const LMConfig &cfg);

  static EncodedSentence encode(ContinuerKind kind, const Sentence &sentence, const Conditioning &cond);
  static std::vector<std::string> encode_prefix(ContinuerKind kind, const Conditioning &cond);

  double log_prob(const Sentence &sentence, const Conditioning &cond) const;
  // Returns delexicalized tokens; the caller relexicalizes.
  SampleResult sample(const Conditioning &cond, Rng &rng, std::size_t max_tokens) const;

  ContinuerKind kind() const noexcept { return kind_; }
  const NGramLM &lm() const noexcept { return lm_; }

  nlohmann::json to_json() const;
  static ContinuerLM from_json(const nlohmann::json &j);

 private:
  ContinuerLM(ContinuerKind kind, NGramLM lm) : kind_(kind), lm_(std::move(lm)) {}

  ContinuerKind kind_;
  NGramLM lm_;
};

}  // namespace relist
