#include <doctest.h>

#include <set>
#include <sstream>

#include "relist/annotator.hpp"
#include "relist/error.hpp"
#include "relist/generator.hpp"

using namespace relist;

namespace {

struct Fixture {
  std::vector<TrainingStory> corpus;
  ReListModel model;
};

const Fixture &fixture() {
  static const Fixture f = [] {
    SynthConfig sc;
    sc.num_stories = 80;
    auto [annotated, stats] = annotate_corpus(synthesize_corpus(sc, default_lexicon()), default_lexicon());
    auto corpus = training_stories(annotated);
    EMConfig cfg;
    cfg.cycles = 1;
    cfg.selector.steps = 50;
    const auto report = train(corpus, cfg);
    auto model = report.final_model;
    model.single_lm = train_single_lm(corpus, report.final_assignments, cfg.lm);
    model.flat_lm = train_flat_lm(corpus, cfg.lm);
    return Fixture{std::move(corpus), std::move(model)};
  }();
  return f;
}

GenerationRequest request_for(std::size_t index, std::uint64_t seed, GenerationMode mode = GenerationMode::ReList) {
  const auto &ts = fixture().corpus.at(index);
  return GenerationRequest{ts.story.prompt, ts.relationships, ts.story.characters, seed, 20, 40, mode};
}

bool has_reserved(const Story &story) {
  for (const auto &s : story.sentences) {
    for (const auto &t : s.tokens) {
      if (t.starts_with("<POL:") || t == kEosSent || t == kEosStory || t == kBos || t == kNullTag || t == kSep) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST_CASE("mode names") {
  for (auto m : {GenerationMode::ReList, GenerationMode::RandSelect, GenerationMode::SingleLM, GenerationMode::FlatBaseline}) {
    CHECK(parse_generation_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_generation_mode("beam"), Error);
  CHECK(to_string(Termination::EosStory) == "eos_story");
}

TEST_CASE("generation is deterministic in the seed") {
  const auto &model = fixture().model;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CHECK(generate(model, request_for(0, seed)) == generate(model, request_for(0, seed)));
  }
  std::set<std::string> distinct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = generate(model, request_for(0, seed));
    std::string all;
    for (const auto &s : g.story.sentences) all += s.text() + "|";
    distinct.insert(all);
  }
  CHECK(distinct.size() > 1);
}

TEST_CASE("generated stories are well formed in every mode") {
  const auto &f = fixture();
  for (auto mode : {GenerationMode::ReList, GenerationMode::RandSelect, GenerationMode::SingleLM, GenerationMode::FlatBaseline}) {
    for (std::size_t i = 0; i < 20; ++i) {
      const auto req = request_for(i, 100 + i, mode);
      const auto g = generate_mode_variants(f.model, req);
      CHECK(g.story.num_sentences() >= 1);
      CHECK(g.story.num_sentences() <= req.max_sentences);
      CHECK_NOTHROW(g.trace.check(g.story, req.relationships));
      CHECK_FALSE(has_reserved(g.story));
      for (const auto &s : g.story.sentences) CHECK_FALSE(s.empty());
      if (g.termination == Termination::MaxSentences) CHECK(g.story.num_sentences() == req.max_sentences);
      if (mode == GenerationMode::FlatBaseline) {
        for (auto z : g.trace.assignments) CHECK(z.is_null());
      }
    }
  }
}

TEST_CASE("sentence and token caps") {
  const auto &model = fixture().model;
  auto req = request_for(1, 5);
  req.max_sentences = 1;
  const auto one = generate(model, req);
  CHECK(one.story.num_sentences() == 1);
  CHECK(one.termination == Termination::MaxSentences);

  req.max_sentences = 20;
  req.max_tokens = 2;
  const auto short_sents = generate(model, req);
  for (const auto &s : short_sents.story.sentences) CHECK(s.size() <= 2);
  CHECK(short_sents.truncated_sentences > 0);

  req.max_sentences = 0;
  CHECK_THROWS_AS(generate(model, req), Error);
}

TEST_CASE("reserved character names are rejected") {
  auto req = request_for(0, 1);
  req.characters.push_back("<EOS-STORY>");
  CHECK_THROWS_WITH_AS(generate(fixture().model, req), doctest::Contains("IncompatibleVocabulary"), Error);
}

TEST_CASE("batch output is independent of parallelism") {
  const auto &model = fixture().model;
  std::vector<GenerationRequest> requests;
  for (std::size_t i = 0; i < 12; ++i) requests.push_back(request_for(i, 0));
  const auto serial = generate_batch(model, requests, 42, 1);
  const auto parallel = generate_batch(model, requests, 42, 4);
  CHECK(serial == parallel);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto r = requests[i];
    r.seed = derive_seed(std::uint64_t{42}, i);
    CHECK(generate_mode_variants(model, r) == serial[i]);
  }
}

TEST_CASE("batch errors name every failed request") {
  std::vector<GenerationRequest> requests{request_for(0, 0), request_for(1, 0), request_for(2, 0)};
  requests[0].characters.push_back("<BOS>");
  requests[2].max_tokens = 0;
  try {
    generate_batch(fixture().model, requests, 1, 2);
    FAIL("expected a batch error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::BatchError);
    const std::string what = e.what();
    CHECK(what.find("[0]") != std::string::npos);
    CHECK(what.find("[1]") == std::string::npos);
    CHECK(what.find("[2]") != std::string::npos);
  }
}

TEST_CASE("generated file round trip") {
  const auto &model = fixture().model;
  std::vector<GenerationRequest> requests;
  std::vector<RelationshipSet> inputs;
  for (std::size_t i = 0; i < 5; ++i) {
    requests.push_back(request_for(i, 0));
    inputs.push_back(requests.back().relationships);
  }
  requests[1].max_sentences = 1;
  const auto stories = generate_batch(model, requests, 3);
  const auto path = std::filesystem::temp_directory_path() / "relist_test_generated.jsonl";
  save_generated(stories, inputs, default_lexicon(), path);
  const auto back = load_generated(path);
  REQUIRE(back.size() == stories.size());
  for (std::size_t i = 0; i < stories.size(); ++i) {
    CHECK(back[i].generated == stories[i]);
    CHECK(back[i].input == inputs[i]);
  }
  std::filesystem::remove(path);

  std::ostringstream sink;
  CHECK_THROWS_AS(write_generated(sink, stories, std::span(inputs).first(2), default_lexicon()), Error);
}
