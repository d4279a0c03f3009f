#include "relist/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json_util.hpp"
#include "relist/error.hpp"
#include "relist/rng.hpp"

namespace relist {

std::string_view to_string(MentionRole role) {
  switch (role) {
    case MentionRole::SubjectOfMainVerb: return "subject";
    case MentionRole::ObjectOfMainVerb: return "object";
    case MentionRole::Other: return "other";
  }
  return "other";
}

MentionRole parse_mention_role(std::string_view s) {
  if (s == "subject") return MentionRole::SubjectOfMainVerb;
  if (s == "object") return MentionRole::ObjectOfMainVerb;
  if (s == "other") return MentionRole::Other;
  throw ParseError(0, "unknown mention role '" + std::string(s) + "'");
}

void AnalyzedSentence::check() const {
  int subjects = 0;
  int objects = 0;
  for (const auto &m : mentions) {
    if (m.position >= tokens.size() || tokens[m.position] != m.name) {
      throw Error(ErrorKind::AlignmentError, "mention '" + m.name + "' does not match its token position");
    }
    subjects += m.role == MentionRole::SubjectOfMainVerb;
    objects += m.role == MentionRole::ObjectOfMainVerb;
  }
  if (subjects > 1 || objects > 1) throw Error(ErrorKind::AlignmentError, "repeated subject or object mention");
}

void SynthConfig::validate() const {
  auto bad = [](const std::string &what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (characters_per_story.min < 2 || characters_per_story.max < characters_per_story.min) {
    bad("characters_per_story must be a non-empty range with min >= 2");
  }
  if (sentences_per_story.min < 1 || sentences_per_story.max < sentences_per_story.min) {
    bad("sentences_per_story must be a non-empty range with min >= 1");
  }
  if (relationships_per_story.min < 1 || relationships_per_story.max < relationships_per_story.min) {
    bad("relationships_per_story must be a non-empty range with min >= 1");
  }
  double sum = 0.0;
  for (double p : polarity_mix) {
    if (!(p >= 0.0 && p <= 1.0)) bad("polarity_mix entries must lie in [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) bad("polarity_mix must sum to 1");
  if (!(null_sentence_rate >= 0.0 && null_sentence_rate <= 1.0)) bad("null_sentence_rate must lie in [0, 1]");
}

namespace {

const std::vector<std::string> &name_pool() {
  static const std::vector<std::string> names = {
      "Alice", "Bob",   "Carol", "David", "Emma",   "Frank",  "Grace", "Henry", "Irene", "Jack",
      "Karen", "Leo",   "Maria", "Nick",  "Olivia", "Peter",  "Quinn", "Rosa",  "Sam",   "Tina",
      "Umar",  "Vera",  "Walt",  "Xena",  "Yusuf",  "Zoe",    "Curtis", "Jonny", "Beth", "John",
      "Nora",  "Oscar", "Paula", "Ravi",  "Sofia",  "Tomas",  "Ursula", "Victor", "Wendy", "Yara"};
  return names;
}

const std::vector<std::string> &places() {
  static const std::vector<std::string> p = {"town", "village", "city", "valley", "harbor"};
  return p;
}

// Zero-valence, verb-free continuations for relationship sentences.
const std::vector<std::vector<std::string>> &relationship_tails() {
  static const std::vector<std::vector<std::string>> tails = {
      {}, {}, {"again"}, {"at", "the", "market"}, {"in", "the", "evening"}, {"every", "day"},
      {"after", "the", "storm"}};
  return tails;
}

// Null sentence templates. "$" is a character slot.
const std::vector<std::string> &scenery_templates() {
  static const std::vector<std::string> t = {
      "the rain fell on the town .", "meanwhile the river ran past the mill .", "the night grew quiet .",
      "the bells rang at noon .", "winter came to the valley .", "the road stood empty ."};
  return t;
}

const std::vector<std::string> &single_templates() {
  static const std::vector<std::string> t = {
      "$ walked to the market .", "$ slept until noon .",       "$ worked in the fields .",
      "$ felt happy .",           "$ felt sad and alone .",     "$ lost all the money .",
      "$ cried in the dark .",    "$ smiled at the sky .",      "$ returned home late .",
      "meanwhile $ waited by the door .", "$ sang an old song .", "$ felt proud of the harvest ."};
  return t;
}

const std::vector<std::string> &pair_templates() {
  static const std::vector<std::string> t = {"$ and $ walked to the river .", "$ and $ waited at the station .",
                                             "$ and $ worked in the fields ."};
  return t;
}

// Draw with weights 1/(rank+1) so earlier entries dominate.
std::size_t zipf_index(Rng &rng, std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / static_cast<double>(i + 1);
  return rng.categorical(w);
}

int uniform_in(Rng &rng, IntRange r) { return r.min + static_cast<int>(rng.below(static_cast<std::size_t>(r.max - r.min + 1))); }

struct Built {
  Sentence sentence;
  AnalyzedSentence analyzed;
};

Built fill_template(const std::string &tmpl, std::span<const std::string> names, bool single_subject) {
  Built b;
  b.sentence = Sentence::from_text(tmpl);
  std::size_t next = 0;
  for (std::size_t i = 0; i < b.sentence.tokens.size(); ++i) {
    if (b.sentence.tokens[i] != "$") continue;
    b.sentence.tokens[i] = names[next++];
    b.analyzed.mentions.push_back(
        Mention{b.sentence.tokens[i], i, single_subject ? MentionRole::SubjectOfMainVerb : MentionRole::Other});
  }
  b.analyzed.tokens = b.sentence.tokens;
  return b;
}

}  // namespace

std::vector<GoldStory> synthesize_corpus(const SynthConfig &cfg, const SentimentLexicon &lexicon) {
  cfg.validate();
  for (Polarity p : kAllPolarities) {
    if (lexicon.verbs(p).size() < 3) {
      throw Error(ErrorKind::LexiconTooSmall,
                  "need >= 3 " + std::string(to_string(p)) + " verbs, lexicon has " +
                      std::to_string(lexicon.verbs(p).size()));
    }
  }
  const auto &pool = name_pool();
  if (static_cast<std::size_t>(cfg.characters_per_story.max) > pool.size()) {
    throw Error(ErrorKind::InvalidConfig, "characters_per_story exceeds the name pool");
  }

  Rng rng(cfg.seed);
  std::vector<GoldStory> out;
  out.reserve(cfg.num_stories);
  for (std::size_t s = 0; s < cfg.num_stories; ++s) {
    // Characters.
    const int n_chars = uniform_in(rng, cfg.characters_per_story);
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(std::span<std::size_t>(idx));
    std::vector<std::string> chars;
    for (int c = 0; c < n_chars; ++c) chars.push_back(pool[idx[static_cast<std::size_t>(c)]]);

    // Relationships over distinct pairs.
    std::vector<std::pair<std::size_t, std::size_t>> all_pairs;
    for (std::size_t a = 0; a < chars.size(); ++a) {
      for (std::size_t b = a + 1; b < chars.size(); ++b) all_pairs.emplace_back(a, b);
    }
    rng.shuffle(std::span<std::pair<std::size_t, std::size_t>>(all_pairs));
    const int max_rel = std::min<int>(cfg.relationships_per_story.max, static_cast<int>(all_pairs.size()));
    const int min_rel = std::min(cfg.relationships_per_story.min, max_rel);
    const int n_rel = uniform_in(rng, IntRange{min_rel, max_rel});
    std::vector<RelationshipTriple> triples;
    for (int r = 0; r < n_rel; ++r) {
      const auto [a, b] = all_pairs[static_cast<std::size_t>(r)];
      const auto pol = static_cast<Polarity>(rng.categorical(cfg.polarity_mix));
      triples.push_back({canonical_pair(chars[a], chars[b]), pol});
    }
    RelationshipSet set = RelationshipSet::validate(std::move(triples));

    // Sentence plan: every triple at least once, the rest null or a random triple.
    const int n_sent = std::max(uniform_in(rng, cfg.sentences_per_story), n_rel);
    std::vector<std::size_t> plan;
    for (int r = 1; r <= n_rel; ++r) plan.push_back(static_cast<std::size_t>(r));
    while (plan.size() < static_cast<std::size_t>(n_sent)) {
      plan.push_back(rng.bernoulli(cfg.null_sentence_rate) ? 0 : 1 + rng.below(static_cast<std::size_t>(n_rel)));
    }
    rng.shuffle(std::span<std::size_t>(plan));

    GoldStory g{Story{}, std::move(set), LatentTrace{}, {}};
    // Prompt introduces every character.
    std::vector<std::string> prompt;
    for (std::size_t c = 0; c < chars.size(); ++c) {
      if (c > 0) prompt.push_back(c + 1 == chars.size() ? "and" : ",");
      prompt.push_back(chars[c]);
    }
    for (const char *w : {"lived", "in", "the"}) prompt.emplace_back(w);
    prompt.push_back(places()[rng.below(places().size())]);
    prompt.emplace_back(".");
    g.story.prompt.tokens = std::move(prompt);
    g.story.characters = chars;

    for (std::size_t z : plan) {
      Built b;
      if (z > 0) {
        const auto &t = g.gold_relationships.relationship(z);
        const bool flip = rng.bernoulli(0.5);
        const std::string &subj = flip ? t.pair.second() : t.pair.first();
        const std::string &obj = t.pair.other(subj);
        const auto &verbs = lexicon.verbs(t.polarity);
        const std::string &verb = verbs[zipf_index(rng, verbs.size())];
        b.sentence.tokens = {subj, verb, obj};
        const auto &tail = relationship_tails()[rng.below(relationship_tails().size())];
        b.sentence.tokens.insert(b.sentence.tokens.end(), tail.begin(), tail.end());
        b.sentence.tokens.emplace_back(".");
        b.analyzed.tokens = b.sentence.tokens;
        b.analyzed.mentions = {Mention{subj, 0, MentionRole::SubjectOfMainVerb},
                               Mention{obj, 2, MentionRole::ObjectOfMainVerb}};
      } else {
        const double u = rng.uniform();
        if (u < 0.3) {
          b = fill_template(scenery_templates()[rng.below(scenery_templates().size())], {}, false);
        } else if (u < 0.8) {
          const std::string &who = chars[rng.below(chars.size())];
          b = fill_template(single_templates()[rng.below(single_templates().size())], {&who, 1}, true);
        } else {
          const std::size_t a = rng.below(chars.size());
          std::size_t c = rng.below(chars.size() - 1);
          if (c >= a) ++c;
          const std::string names[2] = {chars[a], chars[c]};
          b = fill_template(pair_templates()[rng.below(pair_templates().size())], names, false);
        }
      }
      g.story.sentences.push_back(std::move(b.sentence));
      g.analyzed.push_back(std::move(b.analyzed));
      g.gold_sentence_labels.assignments.push_back(LatentValue::from_index(z));
    }
    out.push_back(std::move(g));
  }
  return out;
}

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidFraction, "test fraction must lie in (0, 1), got " + std::to_string(test_fraction));
  }
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  SplitIndices split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return split;
}

CorpusSplit split_corpus(std::vector<GoldStory> stories, double test_fraction, std::uint64_t seed) {
  const auto idx = split_indices(stories.size(), test_fraction, seed);
  CorpusSplit split;
  for (auto i : idx.train) split.train.push_back(std::move(stories[i]));
  for (auto i : idx.test) split.test.push_back(std::move(stories[i]));
  return split;
}

namespace detail {

json gold_story_to_json(const GoldStory &g) {
  json analyzed = json::array();
  for (const auto &a : g.analyzed) analyzed.push_back(mentions_to_json(a));
  return json{{"prompt", g.story.prompt.text()},
              {"sentences", sentences_to_json(g.story.sentences)},
              {"characters", g.story.characters},
              {"gold_relationships", triples_to_json(g.gold_relationships)},
              {"gold_sentence_labels", trace_to_json(g.gold_sentence_labels)},
              {"analyzed", std::move(analyzed)}};
}

GoldStory gold_story_from_json(const json &j) {
  Story story;
  story.prompt = Sentence::from_text(j.at("prompt").get<std::string>());
  story.sentences = sentences_from_json(j.at("sentences"));
  story.characters = j.at("characters").get<std::vector<std::string>>();
  RelationshipSet set = triples_from_json(j.at("gold_relationships"));
  LatentTrace trace = trace_from_json(j.at("gold_sentence_labels"));
  trace.check(story, set);
  const auto &analyzed_json = j.at("analyzed");
  if (analyzed_json.size() != story.num_sentences()) throw ParseError(0, "analyzed length differs from sentences");
  std::vector<AnalyzedSentence> analyzed;
  for (std::size_t i = 0; i < story.num_sentences(); ++i) {
    analyzed.push_back(mentions_from_json(analyzed_json[i], story.sentences[i]));
  }
  return GoldStory{std::move(story), std::move(set), std::move(trace), std::move(analyzed)};
}

}  // namespace detail

void write_corpus(std::ostream &out, const std::vector<GoldStory> &stories) {
  out << detail::json{{"format", kCorpusFormat}}.dump() << '\n';
  for (const auto &g : stories) out << detail::gold_story_to_json(g).dump() << '\n';
}

std::vector<GoldStory> read_corpus(std::istream &in) {
  std::vector<GoldStory> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    detail::json j;
    try {
      j = detail::json::parse(line);
    } catch (const detail::json::exception &e) {
      throw ParseError(line_no, e.what());
    }
    if (!header_seen) {
      if (!j.is_object() || !j.contains("format") || j["format"] != kCorpusFormat) {
        throw ParseError(line_no, "missing relist-corpus-v1 header");
      }
      header_seen = true;
      continue;
    }
    try {
      out.push_back(detail::gold_story_from_json(j));
    } catch (const ParseError &e) {
      throw ParseError(line_no, e.reason());
    } catch (const detail::json::exception &e) {
      throw ParseError(line_no, e.what());
    } catch (const Error &e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

void save_corpus(const std::vector<GoldStory> &stories, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_corpus(out, stories);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::vector<GoldStory> load_corpus(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_corpus(in);
}

}  // namespace relist
