#pragma once

// JSON conversions shared by the file formats. Internal to the library.

#include <json.hpp>
#include <string>
#include <vector>

#include "relist/corpus.hpp"
#include "relist/error.hpp"
#include "relist/types.hpp"

namespace relist::detail {

using nlohmann::json;

inline json triples_to_json(const RelationshipSet &set) {
  json out = json::array();
  for (const auto &t : set.triples()) out.push_back(to_string(t));
  return out;
}

inline RelationshipSet triples_from_json(const json &j) {
  std::vector<RelationshipTriple> triples;
  for (const auto &s : j) triples.push_back(parse_triple(s.get<std::string>()));
  return RelationshipSet::validate(std::move(triples));
}

inline json trace_to_json(const LatentTrace &trace) {
  json out = json::array();
  for (LatentValue z : trace.assignments) out.push_back(z.index());
  return out;
}

inline LatentTrace trace_from_json(const json &j) {
  LatentTrace trace;
  for (const auto &v : j) {
    const auto idx = v.get<long long>();
    if (idx < 0) throw ParseError(0, "negative latent index");
    trace.assignments.push_back(LatentValue::from_index(static_cast<std::size_t>(idx)));
  }
  return trace;
}

inline json sentences_to_json(const std::vector<Sentence> &sentences) {
  json out = json::array();
  for (const auto &s : sentences) out.push_back(s.text());
  return out;
}

inline std::vector<Sentence> sentences_from_json(const json &j) {
  std::vector<Sentence> out;
  for (const auto &s : j) out.push_back(Sentence::from_text(s.get<std::string>()));
  return out;
}

inline json mentions_to_json(const AnalyzedSentence &a) {
  json out = json::array();
  for (const auto &m : a.mentions) {
    out.push_back(json{{"name", m.name}, {"position", m.position}, {"role", std::string(to_string(m.role))}});
  }
  return out;
}

inline AnalyzedSentence mentions_from_json(const json &j, const Sentence &sentence) {
  AnalyzedSentence a;
  a.tokens = sentence.tokens;
  for (const auto &m : j) {
    a.mentions.push_back(Mention{m.at("name").get<std::string>(), m.at("position").get<std::size_t>(),
                                 parse_mention_role(m.at("role").get<std::string>())});
  }
  a.check();
  return a;
}

json gold_story_to_json(const GoldStory &g);
GoldStory gold_story_from_json(const json &j);

}  // namespace relist::detail
