#pragma once

// Domain types shared by every module: polarities, canonical character
// pairs, relationship sets with the implicit null member, stories and the
// per-sentence latent traces attached to them.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace relist {

enum class Polarity : std::uint8_t { Positive = 0, Neutral = 1, Negative = 2 };

inline constexpr std::size_t kNumPolarities = 3;
inline constexpr Polarity kAllPolarities[kNumPolarities] = {Polarity::Positive, Polarity::Neutral,
                                                            Polarity::Negative};

std::string_view to_string(Polarity p);
// Accepts "positive" / "neutral" / "negative"; throws ParseError(0, ...) otherwise.
Polarity parse_polarity(std::string_view s);

// Undirected pair of distinct characters. Always canonical: first < second
// under byte-wise lexicographic order.
class CharacterPair {
 public:
  const std::string &first() const noexcept { return first_; }
  const std::string &second() const noexcept { return second_; }
  bool contains(std::string_view name) const noexcept { return name == first_ || name == second_; }
  // The member of the pair that is not `name`; `name` must be a member.
  const std::string &other(std::string_view name) const noexcept {
    return name == first_ ? second_ : first_;
  }

  friend auto operator<=>(const CharacterPair &, const CharacterPair &) = default;
  friend bool operator==(const CharacterPair &, const CharacterPair &) = default;

 private:
  friend CharacterPair canonical_pair(std::string_view a, std::string_view b);
  CharacterPair(std::string first, std::string second)
      : first_(std::move(first)), second_(std::move(second)) {}

  std::string first_;
  std::string second_;
};

// Throws SelfRelationship when a == b and EmptyName when either is empty or
// is not a single whitespace-free token.
CharacterPair canonical_pair(std::string_view a, std::string_view b);

struct RelationshipTriple {
  CharacterPair pair;
  Polarity polarity;

  friend bool operator==(const RelationshipTriple &, const RelationshipTriple &) = default;
};

// "Alice <positive> Bob"
std::string to_string(const RelationshipTriple &t);
RelationshipTriple parse_triple(std::string_view s);

// A latent assignment: either the null relationship or a 1-based index into a
// RelationshipSet.
class LatentValue {
 public:
  constexpr LatentValue() = default;
  static constexpr LatentValue null() { return LatentValue(0); }
  static constexpr LatentValue relationship(std::size_t j) { return LatentValue(j); }
  // 0 is null, j >= 1 is the j-th triple.
  static constexpr LatentValue from_index(std::size_t index) { return LatentValue(index); }

  constexpr bool is_null() const noexcept { return index_ == 0; }
  constexpr std::size_t index() const noexcept { return index_; }

  friend constexpr auto operator<=>(LatentValue, LatentValue) = default;

 private:
  constexpr explicit LatentValue(std::size_t index) : index_(index) {}
  std::size_t index_ = 0;
};

// The input relationship set R = {r^1..r^K}, plus the implicit null r^0.
// Insertion order is preserved and is the latent index order.
class RelationshipSet {
 public:
  static RelationshipSet validate(std::vector<RelationshipTriple> triples);

  std::size_t size() const noexcept { return triples_.size(); }  // K
  std::size_t num_latent_values() const noexcept { return triples_.size() + 1; }
  std::span<const RelationshipTriple> triples() const noexcept { return triples_; }
  // 1-based, j in [1, K].
  const RelationshipTriple &relationship(std::size_t j) const;
  const RelationshipTriple &at(LatentValue z) const { return relationship(z.index()); }
  std::optional<std::size_t> index_of(const CharacterPair &pair) const;
  // Distinct character names in order of first appearance.
  std::vector<std::string> characters() const;

  friend bool operator==(const RelationshipSet &, const RelationshipSet &) = default;

 private:
  explicit RelationshipSet(std::vector<RelationshipTriple> triples) : triples_(std::move(triples)) {}
  std::vector<RelationshipTriple> triples_;
};

RelationshipSet validate_relationship_set(std::vector<RelationshipTriple> triples);

struct Sentence {
  std::vector<std::string> tokens;

  std::string text() const;
  // Splits on ASCII whitespace.
  static Sentence from_text(std::string_view text);
  bool empty() const noexcept { return tokens.empty(); }
  std::size_t size() const noexcept { return tokens.size(); }

  friend bool operator==(const Sentence &, const Sentence &) = default;
};

struct Story {
  Sentence prompt;
  std::vector<Sentence> sentences;
  std::vector<std::string> characters;

  std::size_t num_sentences() const noexcept { return sentences.size(); }
  bool is_character(std::string_view token) const;

  friend bool operator==(const Story &, const Story &) = default;
};

struct LatentTrace {
  std::vector<LatentValue> assignments;

  std::size_t size() const noexcept { return assignments.size(); }
  // Throws AlignmentError on length mismatch or an out-of-range index.
  void check(const Story &story, const RelationshipSet &set) const;

  friend bool operator==(const LatentTrace &, const LatentTrace &) = default;
};

// Read-only view of the story so far: the prompt plus x_1..x_{i-1}.
struct Context {
  const Sentence *prompt = nullptr;
  std::span<const Sentence> previous;

  // 1-based index of the sentence that follows this context.
  std::size_t next_index() const noexcept { return previous.size() + 1; }
};

inline Context context_before(const Story &story, std::size_t i) {
  return Context{&story.prompt, std::span<const Sentence>(story.sentences).first(i)};
}

// True for tokens of the form <...>, which are reserved for the models.
bool is_reserved_token(std::string_view token);

}  // namespace relist
