#include "relist/types.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "relist/error.hpp"

namespace relist {

namespace {

bool is_single_token(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "positive";
    case Polarity::Neutral: return "neutral";
    case Polarity::Negative: return "negative";
  }
  return "neutral";
}

Polarity parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "neutral") return Polarity::Neutral;
  if (s == "negative") return Polarity::Negative;
  throw ParseError(0, "unknown polarity '" + std::string(s) + "'");
}

CharacterPair canonical_pair(std::string_view a, std::string_view b) {
  if (!is_single_token(a) || !is_single_token(b)) {
    throw Error(ErrorKind::EmptyName, "character names must be non-empty single tokens");
  }
  if (a == b) throw Error(ErrorKind::SelfRelationship, "self-relationship for '" + std::string(a) + "'");
  if (b < a) std::swap(a, b);
  return CharacterPair(std::string(a), std::string(b));
}

std::string to_string(const RelationshipTriple &t) {
  return t.pair.first() + " <" + std::string(to_string(t.polarity)) + "> " + t.pair.second();
}

RelationshipTriple parse_triple(std::string_view s) {
  const Sentence parts = Sentence::from_text(s);
  if (parts.size() != 3) throw ParseError(0, "triple needs 3 fields: '" + std::string(s) + "'");
  const std::string &pol = parts.tokens[1];
  if (pol.size() < 3 || pol.front() != '<' || pol.back() != '>') {
    throw ParseError(0, "polarity must be bracketed: '" + pol + "'");
  }
  return RelationshipTriple{canonical_pair(parts.tokens[0], parts.tokens[2]),
                            parse_polarity(std::string_view(pol).substr(1, pol.size() - 2))};
}

RelationshipSet RelationshipSet::validate(std::vector<RelationshipTriple> triples) {
  if (triples.empty()) throw Error(ErrorKind::EmptySet, "relationship set needs at least one triple");
  for (std::size_t i = 0; i < triples.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (triples[i].pair == triples[j].pair) {
        throw Error(ErrorKind::DuplicatePair,
                    "(" + triples[i].pair.first() + ", " + triples[i].pair.second() + ")");
      }
    }
  }
  return RelationshipSet(std::move(triples));
}

RelationshipSet validate_relationship_set(std::vector<RelationshipTriple> triples) {
  return RelationshipSet::validate(std::move(triples));
}

const RelationshipTriple &RelationshipSet::relationship(std::size_t j) const {
  if (j == 0 || j > triples_.size()) {
    throw Error(ErrorKind::AlignmentError, "latent index " + std::to_string(j) + " outside [1, " +
                                               std::to_string(triples_.size()) + "]");
  }
  return triples_[j - 1];
}

std::optional<std::size_t> RelationshipSet::index_of(const CharacterPair &pair) const {
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    if (triples_[i].pair == pair) return i + 1;
  }
  return std::nullopt;
}

std::vector<std::string> RelationshipSet::characters() const {
  std::vector<std::string> out;
  for (const auto &t : triples_) {
    for (const std::string *name : {&t.pair.first(), &t.pair.second()}) {
      if (std::find(out.begin(), out.end(), *name) == out.end()) out.push_back(*name);
    }
  }
  return out;
}

std::string Sentence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Sentence Sentence::from_text(std::string_view text) {
  Sentence s;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) s.tokens.push_back(std::move(tok));
  return s;
}

bool Story::is_character(std::string_view token) const {
  return std::find(characters.begin(), characters.end(), token) != characters.end();
}

void LatentTrace::check(const Story &story, const RelationshipSet &set) const {
  if (assignments.size() != story.num_sentences()) {
    throw Error(ErrorKind::AlignmentError, "trace length " + std::to_string(assignments.size()) +
                                               " != story length " + std::to_string(story.num_sentences()));
  }
  for (LatentValue z : assignments) {
    if (z.index() > set.size()) {
      throw Error(ErrorKind::AlignmentError, "latent index " + std::to_string(z.index()) + " out of range");
    }
  }
}

bool is_reserved_token(std::string_view token) {
  return token.size() >= 2 && token.front() == '<' && token.back() == '>';
}

}  // namespace relist
