#include <doctest.h>

#include "relist/continuer.hpp"
#include "relist/error.hpp"

using namespace relist;

namespace {

const std::vector<std::string> kCast{"Alice", "Bob", "Carol"};

RelationshipSet two_relationships() {
  return validate_relationship_set({{canonical_pair("Alice", "Bob"), Polarity::Positive},
                                    {canonical_pair("Bob", "Carol"), Polarity::Negative}});
}

}  // namespace

TEST_CASE("delexicalize: leading names first, then order of appearance") {
  const auto s = Sentence::from_text("Carol saw Bob hug Alice and Carol .");
  const std::vector<std::string> leading{"Bob", "Alice"};
  const auto d = delexicalize(s, leading, kCast);
  CHECK(d.sentence.text() == "<CHAR3> saw <CHAR1> hug <CHAR2> and <CHAR3> .");
  CHECK(d.names == std::vector<std::string>{"Bob", "Alice", "Carol"});

  const auto plain = delexicalize(s, {}, kCast);
  CHECK(plain.sentence.text() == "<CHAR1> saw <CHAR2> hug <CHAR3> and <CHAR1> .");
  CHECK(plain.names == std::vector<std::string>{"Carol", "Bob", "Alice"});
}

TEST_CASE("delexicalize leaves non-names alone") {
  const auto s = Sentence::from_text("the alice bob went home");
  const auto d = delexicalize(s, {}, kCast);
  CHECK(d.sentence == s);
  CHECK(d.names.empty());
}

TEST_CASE("relexicalize inverts delexicalize") {
  for (const auto *text : {"Alice loves Bob .", "Carol and Bob met Alice", "nobody here", "Bob Bob Bob"}) {
    const auto s = Sentence::from_text(text);
    for (const auto &leading : {std::vector<std::string>{}, std::vector<std::string>{"Bob", "Alice"}}) {
      const auto d = delexicalize(s, leading, kCast);
      CHECK(relexicalize(d.sentence, d.names) == s);
    }
  }
  // Placeholders without a name survive.
  const auto orphan = relexicalize(Sentence::from_text("<CHAR1> met <CHAR4>"), std::vector<std::string>{"Ann"});
  CHECK(orphan.text() == "Ann met <CHAR4>");
}

TEST_CASE("pair_slot_order follows the sentence") {
  const auto pair = canonical_pair("Alice", "Bob");
  CHECK(pair_slot_order(Sentence::from_text("Bob hates Alice"), pair) == std::vector<std::string>{"Bob", "Alice"});
  CHECK(pair_slot_order(Sentence::from_text("Alice hates Bob"), pair) == std::vector<std::string>{"Alice", "Bob"});
  CHECK(pair_slot_order(Sentence::from_text("Bob left"), pair) == std::vector<std::string>{"Bob", "Alice"});
  CHECK(pair_slot_order(Sentence::from_text("rain fell"), pair) == std::vector<std::string>{"Alice", "Bob"});
}

TEST_CASE("serialize_conditioning") {
  const auto rels = two_relationships();
  const auto prompt = Sentence::from_text("a day .");
  const std::vector<Sentence> prev{Sentence::from_text("Alice woke .")};
  Conditioning cond{&rels, Context{&prompt, prev}, LatentValue::relationship(2), kCast};
  CHECK(serialize_conditioning(cond, true) ==
        "Alice <positive> Bob , Bob <negative> Carol <@> a day . Alice woke . <@> Bob <negative> Carol <$>");
  CHECK(serialize_conditioning(cond, false) == "Alice <positive> Bob , Bob <negative> Carol <$> a day . Alice woke .");
  cond.latent = LatentValue::null();
  CHECK(serialize_conditioning(cond, true).ends_with("<@> <null> <$>"));
}

TEST_CASE("encoded prefixes by continuer kind") {
  const auto rels = two_relationships();
  const auto prompt = Sentence::from_text("a day .");
  Conditioning cond{&rels, Context{&prompt, {}}, LatentValue::relationship(1), kCast};
  const auto s = Sentence::from_text("Bob thanked Alice .");

  const auto rel = ContinuerLM::encode(ContinuerKind::Relationship, s, cond);
  CHECK(rel.prefix == std::vector<std::string>{"<POL:positive>"});
  CHECK(rel.body.sentence.text() == "<CHAR1> thanked <CHAR2> .");
  CHECK(rel.body.names == std::vector<std::string>{"Bob", "Alice"});

  CHECK(ContinuerLM::encode(ContinuerKind::Null, s, cond).prefix.empty());
  CHECK(ContinuerLM::encode(ContinuerKind::Single, s, cond).prefix == std::vector<std::string>{"<POL:positive>"});
  const auto flat = ContinuerLM::encode(ContinuerKind::Flat, s, cond).prefix;
  REQUIRE(flat.size() >= 2);
  CHECK(flat.back() == "<$>");

  cond.latent = LatentValue::null();
  CHECK(ContinuerLM::encode(ContinuerKind::Single, s, cond).prefix == std::vector<std::string>{"<NULL>"});
  CHECK(ContinuerLM::encode(ContinuerKind::Flat, s, cond).prefix == flat);
  CHECK_THROWS_AS(ContinuerLM::encode(ContinuerKind::Relationship, s, cond), Error);
}

TEST_CASE("continuer generalizes across names") {
  const auto rels = two_relationships();
  const auto prompt = Sentence::from_text("start .");
  const std::vector<ContinuerExample> examples{
      {Sentence::from_text("Alice hugged Bob ."), {&rels, {&prompt, {}}, LatentValue::relationship(1), kCast}, 1.0},
      {Sentence::from_text("Carol kicked Bob ."), {&rels, {&prompt, {}}, LatentValue::relationship(2), kCast}, 1.0}};
  const auto lm = ContinuerLM::train(ContinuerKind::Relationship, examples, LMConfig{});
  Conditioning pos{&rels, {&prompt, {}}, LatentValue::relationship(1), kCast};
  // Same delexicalized form, different names.
  CHECK(lm.log_prob(Sentence::from_text("Bob hugged Alice ."), pos) ==
        doctest::Approx(lm.log_prob(Sentence::from_text("Alice hugged Bob ."), pos)));
  CHECK(lm.log_prob(Sentence::from_text("Alice hugged Bob ."), pos) >
        lm.log_prob(Sentence::from_text("Alice kicked Bob ."), pos));

  Rng a(2), b(2);
  CHECK(lm.sample(pos, a, 40).tokens == lm.sample(pos, b, 40).tokens);

  const auto back = ContinuerLM::from_json(nlohmann::json::parse(lm.to_json().dump()));
  CHECK(back.kind() == ContinuerKind::Relationship);
  CHECK(back.log_prob(Sentence::from_text("Alice hugged Bob ."), pos) ==
        lm.log_prob(Sentence::from_text("Alice hugged Bob ."), pos));
}

TEST_CASE("continuer training errors") {
  CHECK_THROWS_WITH_AS(ContinuerLM::train(ContinuerKind::Null, {}, LMConfig{}), doctest::Contains("EmptyTrainingSet"),
                       Error);
  const auto rels = two_relationships();
  const std::vector<ContinuerExample> weightless{
      {Sentence::from_text("x ."), {&rels, {}, LatentValue::null(), kCast}, 0.0}};
  CHECK_THROWS_AS(ContinuerLM::train(ContinuerKind::Null, weightless, LMConfig{}), Error);
}
