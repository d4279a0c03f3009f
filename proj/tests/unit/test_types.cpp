#include <doctest.h>

#include <set>

#include "relist/error.hpp"
#include "relist/rng.hpp"
#include "relist/types.hpp"

using namespace relist;

namespace {

template <class Fn>
ErrorKind kind_of(Fn fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidConfig;
}

RelationshipTriple triple(std::string_view a, std::string_view b, Polarity p) {
  return RelationshipTriple{canonical_pair(a, b), p};
}

}  // namespace

TEST_CASE("canonical_pair orders names") {
  const auto p = canonical_pair("Bob", "Alice");
  CHECK(p.first() == "Alice");
  CHECK(p.second() == "Bob");
  CHECK(canonical_pair("Alice", "Bob") == p);
  CHECK(p.contains("Bob"));
  CHECK_FALSE(p.contains("Carol"));
  CHECK(p.other("Alice") == "Bob");
}

TEST_CASE("canonical_pair rejects bad names") {
  CHECK(kind_of([] { canonical_pair("Zed", "Zed"); }) == ErrorKind::SelfRelationship);
  CHECK(kind_of([] { canonical_pair("", "Bob"); }) == ErrorKind::EmptyName);
  CHECK(kind_of([] { canonical_pair("Ann Lee", "Bob"); }) == ErrorKind::EmptyName);
}

TEST_CASE("canonical_pair is symmetric and idempotent on random names") {
  Rng rng(11);
  const std::string letters = "abcdefgXYZ";
  for (int trial = 0; trial < 500; ++trial) {
    std::string a, b;
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) a += letters[rng.below(letters.size())];
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) b += letters[rng.below(letters.size())];
    if (a == b) continue;
    const auto p = canonical_pair(a, b);
    CHECK(p == canonical_pair(b, a));
    CHECK(canonical_pair(p.first(), p.second()) == p);
    CHECK(p.first() < p.second());
  }
}

TEST_CASE("polarity strings round trip") {
  for (auto p : kAllPolarities) CHECK(parse_polarity(to_string(p)) == p);
  CHECK(kind_of([] { parse_polarity("happy"); }) == ErrorKind::ParseError);
  CHECK(Polarity::Positive < Polarity::Neutral);
  CHECK(Polarity::Neutral < Polarity::Negative);
}

TEST_CASE("triples print and parse") {
  const auto t = triple("Bob", "Alice", Polarity::Positive);
  CHECK(to_string(t) == "Alice <positive> Bob");
  CHECK(parse_triple("Bob <positive> Alice") == t);
  CHECK(kind_of([] { parse_triple("Alice positive Bob"); }) == ErrorKind::ParseError);
}

TEST_CASE("validate_relationship_set") {
  const auto set = validate_relationship_set({triple("Alice", "Bob", Polarity::Positive)});
  CHECK(set.size() == 1);
  CHECK(set.num_latent_values() == 2);
  CHECK(kind_of([] {
          validate_relationship_set(
              {triple("Alice", "Bob", Polarity::Positive), triple("Bob", "Alice", Polarity::Negative)});
        }) == ErrorKind::DuplicatePair);
  CHECK(kind_of([] { validate_relationship_set({}); }) == ErrorKind::EmptySet);
}

TEST_CASE("relationship set keeps insertion order") {
  const auto set = validate_relationship_set({triple("Cat", "Dan", Polarity::Negative),
                                              triple("Alice", "Bob", Polarity::Positive),
                                              triple("Alice", "Dan", Polarity::Neutral)});
  CHECK(set.relationship(1).pair == canonical_pair("Cat", "Dan"));
  CHECK(set.relationship(3).polarity == Polarity::Neutral);
  CHECK(set.at(LatentValue::relationship(2)).pair.first() == "Alice");
  CHECK(set.index_of(canonical_pair("Dan", "Alice")) == 3u);
  CHECK_FALSE(set.index_of(canonical_pair("Bob", "Cat")).has_value());
  CHECK(set.characters() == std::vector<std::string>{"Cat", "Dan", "Alice", "Bob"});
  CHECK(kind_of([&] { set.relationship(0); }) == ErrorKind::AlignmentError);
  CHECK(kind_of([&] { set.relationship(4); }) == ErrorKind::AlignmentError);
}

TEST_CASE("latent values") {
  CHECK(LatentValue::null().is_null());
  CHECK(LatentValue::from_index(0) == LatentValue::null());
  CHECK(LatentValue::relationship(2).index() == 2);
  CHECK(LatentValue::null() < LatentValue::relationship(1));
}

TEST_CASE("sentences and contexts") {
  const auto s = Sentence::from_text("  Alice  loves\tBob . ");
  CHECK(s.tokens == std::vector<std::string>{"Alice", "loves", "Bob", "."});
  CHECK(s.text() == "Alice loves Bob .");
  Story story{Sentence::from_text("Alice and Bob lived here ."),
              {Sentence::from_text("a"), Sentence::from_text("b"), Sentence::from_text("c")},
              {"Alice", "Bob"}};
  const auto ctx = context_before(story, 2);
  CHECK(ctx.prompt == &story.prompt);
  CHECK(ctx.previous.size() == 2);
  CHECK(ctx.next_index() == 3);
  CHECK(context_before(story, 0).previous.empty());
  CHECK(story.is_character("Bob"));
  CHECK_FALSE(story.is_character("loves"));
}

TEST_CASE("latent trace check") {
  const auto set = validate_relationship_set({triple("Alice", "Bob", Polarity::Positive)});
  Story story{Sentence::from_text("p ."), {Sentence::from_text("a"), Sentence::from_text("b")}, {"Alice", "Bob"}};
  LatentTrace ok{{LatentValue::null(), LatentValue::relationship(1)}};
  CHECK_NOTHROW(ok.check(story, set));
  LatentTrace short_trace{{LatentValue::null()}};
  CHECK(kind_of([&] { short_trace.check(story, set); }) == ErrorKind::AlignmentError);
  LatentTrace bad_index{{LatentValue::null(), LatentValue::relationship(2)}};
  CHECK(kind_of([&] { bad_index.check(story, set); }) == ErrorKind::AlignmentError);
}

TEST_CASE("reserved tokens") {
  CHECK(is_reserved_token("<CHAR1>"));
  CHECK(is_reserved_token("<EOS-STORY>"));
  CHECK_FALSE(is_reserved_token("Alice"));
  CHECK_FALSE(is_reserved_token("<"));
}

TEST_CASE("error messages carry the kind") {
  const Error e(ErrorKind::DuplicatePair, "Alice/Bob");
  CHECK(std::string(e.what()).find("DuplicatePair") != std::string::npos);
  const ParseError pe(2, "bad record");
  CHECK(pe.line() == 2);
  CHECK(pe.kind() == ErrorKind::ParseError);
}

TEST_CASE("rng is deterministic and seeds are separated") {
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) CHECK(a.next() == b.next());
  CHECK(derive_seed("synth", 7) != derive_seed("train", 7));
  CHECK(derive_seed("synth", 7) == derive_seed("synth", 7));
  CHECK(derive_seed(std::uint64_t{7}, 0) != derive_seed(std::uint64_t{7}, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(std::uint64_t{3}, i));
  CHECK(seen.size() == 1000);
}

TEST_CASE("rng categorical frequencies match weights") {
  Rng rng(99);
  const std::vector<double> w{0.2, 0.0, 0.5, 0.3};
  std::vector<double> counts(w.size(), 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) counts[rng.categorical(w)] += 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(counts[i] / n - w[i]) < 0.02);
  CHECK(counts[1] == 0.0);
  std::vector<double> lw{std::log(0.2), -INFINITY, std::log(0.5), std::log(0.3)};
  std::vector<double> lcounts(w.size(), 0.0);
  for (int i = 0; i < n; ++i) lcounts[rng.categorical_log(lw)] += 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(lcounts[i] / n - w[i]) < 0.02);
}

TEST_CASE("rng below and uniform ranges") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7u);
  }
  std::vector<int> v{1, 2, 3, 4, 5};
  rng.shuffle(std::span<int>(v));
  std::multiset<int> s(v.begin(), v.end());
  CHECK(s == std::multiset<int>{1, 2, 3, 4, 5});
}
