#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relist/corpus.hpp"
#include "relist/error.hpp"
#include "relist/lexicon.hpp"

using namespace relist;

namespace {

std::filesystem::path temp_file(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / "relist_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<GoldStory> small_corpus(std::size_t n, std::uint64_t seed = 3) {
  SynthConfig cfg;
  cfg.num_stories = n;
  cfg.seed = seed;
  return synthesize_corpus(cfg, default_lexicon());
}

}  // namespace

TEST_CASE("lexicon parsing") {
  std::istringstream in("# comment\nloves\t3.2\tverb\nhappy\t2.7\n\nhates\t-2.7\tverb\nmeets\t0\tverb\n");
  const auto lex = SentimentLexicon::parse(in);
  CHECK(lex.size() == 4);
  CHECK(lex.valence("loves") == doctest::Approx(3.2));
  CHECK(lex.valence("unknown") == 0.0);
  CHECK(lex.is_verb("hates"));
  CHECK_FALSE(lex.is_verb("happy"));
  CHECK(lex.verbs(Polarity::Positive) == std::vector<std::string>{"loves"});
  CHECK(lex.verbs(Polarity::Neutral) == std::vector<std::string>{"meets"});
  std::istringstream again(lex.serialize());
  CHECK(SentimentLexicon::parse(again) == lex);
}

TEST_CASE("lexicon errors") {
  std::istringstream bad("loves\tlots\n");
  try {
    SentimentLexicon::parse(bad);
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(SentimentLexicon::load("/nonexistent/lexicon.tsv"), Error);
}

TEST_CASE("bundled lexicon matches the data file") {
  std::ifstream in(std::filesystem::path(RELIST_SOURCE_DIR) / "data" / "lexicon.tsv");
  REQUIRE(in);
  CHECK(SentimentLexicon::parse(in) == default_lexicon());
  for (auto p : kAllPolarities) CHECK(default_lexicon().verbs(p).size() >= 3);
  CHECK(default_lexicon().verbs(Polarity::Positive).front() == "loves");
  CHECK(valence_class(0.5) == Polarity::Positive);
  CHECK(valence_class(0.0) == Polarity::Neutral);
  CHECK(valence_class(-0.1) == Polarity::Negative);
}

TEST_CASE("synthesize_corpus basics") {
  SynthConfig cfg;
  cfg.num_stories = 0;
  CHECK(synthesize_corpus(cfg, default_lexicon()).empty());

  const auto a = small_corpus(50);
  const auto b = small_corpus(50);
  CHECK(a == b);
  std::ostringstream sa, sb;
  write_corpus(sa, a);
  write_corpus(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(small_corpus(50, 4) != a);
}

TEST_CASE("synthesized stories follow the grammar contract") {
  const auto &lex = default_lexicon();
  for (const auto &g : small_corpus(300)) {
    REQUIRE(g.gold_relationships.size() >= 1);
    REQUIRE(g.analyzed.size() == g.story.sentences.size());
    CHECK_NOTHROW(g.gold_sentence_labels.check(g.story, g.gold_relationships));
    for (const auto &c : g.story.characters) {
      CHECK(std::count(g.story.prompt.tokens.begin(), g.story.prompt.tokens.end(), c) == 1);
    }
    for (std::size_t i = 0; i < g.story.sentences.size(); ++i) {
      const auto &s = g.story.sentences[i];
      const auto &a = g.analyzed[i];
      CHECK(a.tokens == s.tokens);
      for (const auto &m : a.mentions) CHECK(s.tokens[m.position] == m.name);
      const auto z = g.gold_sentence_labels.assignments[i];
      std::size_t named = 0;
      for (const auto &tok : s.tokens) named += g.story.is_character(tok);
      if (!z.is_null()) {
        const auto &t = g.gold_relationships.at(z);
        REQUIRE(s.tokens.size() >= 3);
        CHECK(canonical_pair(s.tokens[0], s.tokens[2]) == t.pair);
        CHECK(lex.is_verb(s.tokens[1]));
        CHECK(valence_class(lex.valence(s.tokens[1])) == t.polarity);
        for (std::size_t k = 3; k < s.tokens.size(); ++k) CHECK(lex.valence(s.tokens[k]) == 0.0);
      } else if (named > 1) {
        for (const auto &tok : s.tokens) CHECK(lex.valence(tok) == 0.0);
      }
    }
  }
}

TEST_CASE("gold polarity frequencies follow the mix") {
  SynthConfig cfg;
  cfg.num_stories = 1000;
  cfg.seed = 7;
  std::array<double, 3> counts{};
  double total = 0.0;
  for (const auto &g : synthesize_corpus(cfg, default_lexicon())) {
    for (const auto &t : g.gold_relationships.triples()) {
      counts[static_cast<std::size_t>(t.polarity)] += 1.0;
      total += 1.0;
    }
  }
  for (std::size_t p = 0; p < 3; ++p) CHECK(std::abs(counts[p] / total - cfg.polarity_mix[p]) <= 0.03);
}

TEST_CASE("synthesize_corpus errors") {
  SentimentLexicon tiny;
  tiny.add("loves", 3.0, true);
  CHECK_THROWS_WITH_AS(synthesize_corpus(SynthConfig{}, tiny), doctest::Contains("LexiconTooSmall"), Error);
  SynthConfig bad;
  bad.polarity_mix = {0.5, 0.5, 0.5};
  CHECK_THROWS_WITH_AS(synthesize_corpus(bad, default_lexicon()), doctest::Contains("InvalidConfig"), Error);
  SynthConfig one_char;
  one_char.characters_per_story = {1, 1};
  CHECK_THROWS_AS(one_char.validate(), Error);
}

TEST_CASE("split_corpus sizes and determinism") {
  auto stories = small_corpus(10);
  const auto split = split_corpus(stories, 0.2, 5);
  CHECK(split.train.size() == 8);
  CHECK(split.test.size() == 2);
  CHECK(split_corpus(stories, 0.2, 5).test == split.test);
  const auto big = split_indices(16886, 0.129, 1);
  CHECK(big.test.size() >= 2177);
  CHECK(big.test.size() <= 2179);
  CHECK(big.test.size() + big.train.size() == 16886);
  CHECK_THROWS_WITH_AS(split_corpus(stories, 0.0, 1), doctest::Contains("InvalidFraction"), Error);
  CHECK_THROWS_WITH_AS(split_corpus(stories, 1.0, 1), doctest::Contains("InvalidFraction"), Error);
}

TEST_CASE("corpus files round trip") {
  const auto stories = small_corpus(3);
  const auto path = temp_file("three.jsonl");
  save_corpus(stories, path);
  CHECK(load_corpus(path) == stories);

  const auto empty = temp_file("empty.jsonl");
  std::ofstream(empty).close();
  CHECK(load_corpus(empty).empty());

  const auto broken = temp_file("broken.jsonl");
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    std::ofstream out(broken);
    out << header << "\n{\"prompt\": 3}\n";
  }
  try {
    load_corpus(broken);
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_WITH_AS(load_corpus(temp_file("missing.jsonl")), doctest::Contains("IoError"), Error);
}
