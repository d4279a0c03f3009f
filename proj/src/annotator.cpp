#include "relist/annotator.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json_util.hpp"
#include "relist/error.hpp"

namespace relist {

std::optional<CharacterPair> eligible_pair(const AnalyzedSentence &s) {
  const Mention *subject = nullptr;
  const Mention *object = nullptr;
  for (const auto &m : s.mentions) {
    if (m.role == MentionRole::SubjectOfMainVerb) {
      if (subject) return std::nullopt;
      subject = &m;
    } else if (m.role == MentionRole::ObjectOfMainVerb) {
      if (object) return std::nullopt;
      object = &m;
    }
  }
  if (!subject || !object || subject->name == object->name) return std::nullopt;
  return canonical_pair(subject->name, object->name);
}

PolarityScores score_sentiment(std::span<const std::string> tokens, const SentimentLexicon &lexicon) {
  PolarityScores s;
  for (const auto &tok : tokens) {
    const double v = lexicon.valence(tok);
    if (v > 0.0) {
      s.pos += v;
    } else if (v < 0.0) {
      s.neg -= v;
    } else {
      s.neu += 1.0;
    }
  }
  return s;
}

Polarity polarity_of(const PolarityScores &scores) {
  if (scores.pos > scores.neg) return Polarity::Positive;
  if (scores.neg > scores.pos) return Polarity::Negative;
  return Polarity::Neutral;
}

AnalyzedSentence analyze_sentence(const Sentence &sentence, std::span<const std::string> inventory,
                                  const SentimentLexicon &lexicon) {
  AnalyzedSentence out;
  out.tokens = sentence.tokens;
  std::optional<std::size_t> verb;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const auto &tok = sentence.tokens[i];
    if (std::find(inventory.begin(), inventory.end(), tok) != inventory.end()) {
      out.mentions.push_back(Mention{tok, i, MentionRole::Other});
    } else if (!verb && lexicon.is_verb(tok)) {
      verb = i;
    }
  }
  if (!verb) return out;

  std::size_t before = 0;
  for (const auto &m : out.mentions) before += m.position < *verb;
  bool object_found = false;
  for (auto &m : out.mentions) {
    if (m.position < *verb) {
      if (before == 1) m.role = MentionRole::SubjectOfMainVerb;
    } else if (!object_found) {
      m.role = MentionRole::ObjectOfMainVerb;
      object_found = true;
    }
  }
  return out;
}

std::optional<SilverAnnotation> annotate_sentences(std::span<const AnalyzedSentence> analyzed,
                                                   const SentimentLexicon &lexicon) {
  std::vector<std::optional<CharacterPair>> pairs;
  pairs.reserve(analyzed.size());
  std::vector<CharacterPair> order;  // pairs in order of first eligible sentence
  std::map<CharacterPair, std::vector<std::string>> pooled;
  for (const auto &s : analyzed) {
    auto pair = eligible_pair(s);
    if (pair) {
      auto [it, fresh] = pooled.try_emplace(*pair);
      if (fresh) order.push_back(*pair);
      it->second.insert(it->second.end(), s.tokens.begin(), s.tokens.end());
    }
    pairs.push_back(std::move(pair));
  }
  if (order.empty()) return std::nullopt;

  std::vector<RelationshipTriple> triples;
  for (const auto &pair : order) {
    triples.push_back({pair, polarity_of(score_sentiment(pooled.at(pair), lexicon))});
  }
  SilverAnnotation out{RelationshipSet::validate(std::move(triples)), {}};
  for (const auto &pair : pairs) {
    out.sentence_labels.assignments.push_back(
        pair ? LatentValue::relationship(*out.relationships.index_of(*pair)) : LatentValue::null());
  }
  return out;
}

std::optional<SilverAnnotation> annotate_story(const Story &story, std::span<const AnalyzedSentence> analyzed,
                                               const SentimentLexicon &lexicon) {
  if (analyzed.size() != story.num_sentences()) {
    throw Error(ErrorKind::AlignmentError, "analyzed " + std::to_string(analyzed.size()) + " sentences, story has " +
                                               std::to_string(story.num_sentences()));
  }
  for (std::size_t i = 0; i < analyzed.size(); ++i) {
    if (analyzed[i].tokens != story.sentences[i].tokens) {
      throw Error(ErrorKind::AlignmentError, "analyzed sentence " + std::to_string(i) + " differs from story text");
    }
  }
  return annotate_sentences(analyzed, lexicon);
}

std::string CorpusStats::to_text() const {
  std::ostringstream out;
  out.precision(6);
  out << "input_stories = " << input_stories << '\n'
      << "stories = " << count << '\n'
      << "relationships = " << total_relationships << '\n'
      << "mean_relationships = " << mean_relationships << '\n';
  for (Polarity p : kAllPolarities) {
    out << "share_" << to_string(p) << " = " << polarity_distribution[static_cast<std::size_t>(p)] << '\n';
  }
  return out.str();
}

std::pair<std::vector<AnnotatedStory>, CorpusStats> annotate_corpus(std::span<const GoldStory> stories,
                                                                   const SentimentLexicon &lexicon) {
  std::vector<AnnotatedStory> kept;
  CorpusStats stats;
  stats.input_stories = stories.size();
  std::array<std::size_t, kNumPolarities> counts{};
  for (std::size_t i = 0; i < stories.size(); ++i) {
    std::optional<SilverAnnotation> silver;
    try {
      silver = annotate_story(stories[i].story, stories[i].analyzed, lexicon);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::AlignmentError) throw;
      throw Error(ErrorKind::AlignmentError, "story " + std::to_string(i) + ": " + e.what());
    }
    if (!silver) continue;
    for (const auto &t : silver->relationships.triples()) ++counts[static_cast<std::size_t>(t.polarity)];
    stats.total_relationships += silver->relationships.size();
    kept.push_back(AnnotatedStory{stories[i], std::move(*silver)});
  }
  stats.count = kept.size();
  if (stats.count > 0) {
    stats.mean_relationships = static_cast<double>(stats.total_relationships) / static_cast<double>(stats.count);
    for (std::size_t p = 0; p < kNumPolarities; ++p) {
      stats.polarity_distribution[p] =
          static_cast<double>(counts[p]) / static_cast<double>(stats.total_relationships);
    }
  }
  return {std::move(kept), stats};
}

}  // namespace relist

namespace relist {

void save_annotated(std::span<const AnnotatedStory> stories, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << detail::json{{"format", kAnnotatedFormat}}.dump() << '\n';
  for (const auto &a : stories) {
    auto j = detail::gold_story_to_json(a.source);
    j["silver_relationships"] = detail::triples_to_json(a.silver.relationships);
    j["silver_labels"] = detail::trace_to_json(a.silver.sentence_labels);
    out << j.dump() << '\n';
  }
}

std::vector<AnnotatedStory> load_annotated(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<AnnotatedStory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = detail::json::parse(line);
      if (line_no == 1) {
        if (j.value("format", "") != kAnnotatedFormat) throw ParseError(line_no, "missing relist-annotated-v1 header");
        continue;
      }
      AnnotatedStory a{detail::gold_story_from_json(j),
                       SilverAnnotation{detail::triples_from_json(j.at("silver_relationships")),
                                        detail::trace_from_json(j.at("silver_labels"))}};
      a.silver.sentence_labels.check(a.source.story, a.silver.relationships);
      out.push_back(std::move(a));
    } catch (const ParseError &e) {
      throw ParseError(line_no, e.reason());
    } catch (const std::exception &e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace relist
