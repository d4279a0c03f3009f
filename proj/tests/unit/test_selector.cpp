#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "relist/error.hpp"
#include "relist/rng.hpp"
#include "relist/selector.hpp"

using namespace relist;

namespace {

RelationshipSet cast_relationships() {
  return validate_relationship_set({{canonical_pair("Alice", "Bob"), Polarity::Positive},
                                    {canonical_pair("Bob", "Carol"), Polarity::Negative}});
}

std::vector<Sentence> sentences(std::initializer_list<const char *> texts) {
  std::vector<Sentence> out;
  for (const auto *t : texts) out.push_back(Sentence::from_text(t));
  return out;
}

SelectorExample random_example(Rng &rng) {
  SelectorExample ex;
  const std::size_t n = 2 + rng.below(3);
  for (std::size_t c = 0; c < n; ++c) {
    FeatureVector f;
    for (std::size_t k = 0; k < kNumSelectorFeatures; ++k) {
      if (rng.below(2)) f.set(static_cast<SelectorFeature>(k), rng.uniform() * 2.0 - 1.0);
    }
    ex.candidates.push_back(f);
  }
  ex.target.assign(n, 0.0);
  double total = 0.0;
  for (auto &t : ex.target) total += (t = rng.uniform());
  for (auto &t : ex.target) t /= total;
  ex.weight = 0.5 + rng.uniform();
  return ex;
}

}  // namespace

TEST_CASE("feature names are distinct") {
  std::set<std::string_view> names;
  for (std::size_t k = 0; k < kNumSelectorFeatures; ++k) names.insert(feature_name(static_cast<SelectorFeature>(k)));
  CHECK(names.size() == kNumSelectorFeatures);
}

TEST_CASE("FeatureVector") {
  FeatureVector f;
  f.set(SelectorFeature::PairCount, 2.0);
  f.set(SelectorFeature::NullBias, 1.0);
  f.set(SelectorFeature::PairCount, 3.0);
  CHECK(f.entries().size() == 2);
  CHECK(f.entries().front().first < f.entries().back().first);
  CHECK(f.get(SelectorFeature::PairCount) == 3.0);
  CHECK(f.get(SelectorFeature::PrevPair) == 0.0);
  std::vector<double> w(kNumSelectorFeatures, 0.5);
  CHECK(f.dot(w) == doctest::Approx(2.0));
  std::vector<double> dense(kNumSelectorFeatures, 0.0);
  f.add_to(dense, 2.0);
  CHECK(dense[static_cast<std::size_t>(SelectorFeature::PairCount)] == 6.0);
  f.scale(0.5);
  CHECK(f.get(SelectorFeature::NullBias) == 0.5);
}

TEST_CASE("features on a hand-built context") {
  const auto rels = cast_relationships();
  const auto prompt = Sentence::from_text("one day .");
  const auto prev = sentences({"Alice met Bob .", "rain fell .", "Carol waved .", "Bob saw Carol and Bob ."});
  const SelectorInput in{&rels, Context{&prompt, prev}};

  const auto null = selector_features(in, LatentValue::null());
  CHECK(null.get(SelectorFeature::NullBias) == 1.0);
  CHECK(null.get(SelectorFeature::NullContextLength) == doctest::Approx(0.4));
  CHECK(null.get(SelectorFeature::NullPosition) == doctest::Approx(4.0 / 12.0));
  CHECK(null.get(SelectorFeature::NullPrevMulti) == 1.0);
  CHECK(null.get(SelectorFeature::PositiveBias) == 0.0);

  const auto ab = selector_features(in, LatentValue::relationship(1));
  CHECK(ab.get(SelectorFeature::PositiveBias) == 1.0);
  CHECK(ab.get(SelectorFeature::NullBias) == 0.0);
  CHECK(ab.get(SelectorFeature::MentionsFirst) == 1.0);   // Alice
  CHECK(ab.get(SelectorFeature::MentionsSecond) == 3.0);  // Bob
  CHECK(ab.get(SelectorFeature::RecencyFirst) == doctest::Approx(3.0 / 5.0));
  CHECK(ab.get(SelectorFeature::RecencySecond) == 0.0);
  CHECK(ab.get(SelectorFeature::PairCount) == 1.0);
  CHECK(ab.get(SelectorFeature::PairUnexpressed) == 0.0);
  CHECK(ab.get(SelectorFeature::PrevPair) == 0.0);

  const auto bc = selector_features(in, LatentValue::relationship(2));
  CHECK(bc.get(SelectorFeature::NegativeBias) == 1.0);
  CHECK(bc.get(SelectorFeature::PairCount) == 1.0);
  CHECK(bc.get(SelectorFeature::PrevPair) == 1.0);
}

TEST_CASE("features at the first sentence and caps") {
  const auto rels = cast_relationships();
  const auto prompt = Sentence::from_text("one day .");
  const SelectorInput first{&rels, Context{&prompt, {}}};
  const auto null = selector_features(first, LatentValue::null());
  CHECK(null.get(SelectorFeature::NullContextLength) == 0.0);
  CHECK(null.get(SelectorFeature::NullPrevMulti) == 0.0);
  const auto ab = selector_features(first, LatentValue::relationship(1));
  CHECK(ab.get(SelectorFeature::RecencyFirst) == 1.0);
  CHECK(ab.get(SelectorFeature::PairUnexpressed) == 1.0);

  std::vector<Sentence> long_story(20, Sentence::from_text("rain ."));
  long_story.front() = Sentence::from_text("Alice ran .");
  const SelectorInput late{&rels, Context{&prompt, long_story}};
  CHECK(selector_features(late, LatentValue::null()).get(SelectorFeature::NullPosition) == 1.0);
  CHECK(selector_features(late, LatentValue::relationship(1)).get(SelectorFeature::RecencyFirst) == 1.0);
  CHECK(candidate_features(late).size() == 3);
}

TEST_CASE("log-probabilities are a normalized softmax") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(kNumSelectorFeatures);
    for (auto &x : w) x = rng.uniform() * 4.0 - 2.0;
    const SelectorModel m(w);
    const auto ex = random_example(rng);
    const auto lp = m.log_probs(ex.candidates);
    double z = 0.0;
    for (const auto &f : ex.candidates) z += std::exp(f.dot(w));
    for (std::size_t c = 0; c < lp.size(); ++c) CHECK(lp[c] == doctest::Approx(ex.candidates[c].dot(w) - std::log(z)));
  }
}

TEST_CASE("gradient matches finite differences") {
  Rng rng(21);
  std::vector<SelectorExample> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(random_example(rng));
  std::vector<double> w(kNumSelectorFeatures);
  for (auto &x : w) x = rng.uniform() - 0.5;
  const SelectorModel m(w);
  const auto grad = selector_grad(m, batch);
  auto total_ll = [&](const std::vector<double> &weights) {
    const SelectorModel mm(weights);
    double s = 0.0;
    for (const auto &ex : batch) s += ex.weight * selector_log_likelihood(mm, ex);
    return s;
  };
  const double h = 1e-6;
  for (std::size_t k = 0; k < kNumSelectorFeatures; ++k) {
    auto up = w, down = w;
    up[k] += h;
    down[k] -= h;
    CHECK(grad[k] == doctest::Approx((total_ll(up) - total_ll(down)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("training improves the objective and fits a separable target") {
  const auto rels = cast_relationships();
  const auto prompt = Sentence::from_text("one day .");
  std::vector<SelectorExample> examples;
  // The null candidate is always right at the first sentence.
  for (int i = 0; i < 20; ++i) {
    SelectorExample ex;
    ex.candidates = candidate_features(SelectorInput{&rels, Context{&prompt, {}}});
    ex.target = {1.0, 0.0, 0.0};
    examples.push_back(ex);
  }
  const SelectorModel init;
  const SelectorTrainConfig cfg;
  const double before = selector_objective(init, examples, cfg.l2);
  const auto result = selector_train(init, examples, cfg);
  CHECK(result.objective > before);
  CHECK(result.objective == doctest::Approx(selector_objective(result.model, examples, cfg.l2)));
  const auto lp = result.model.log_probs(examples.front().candidates);
  CHECK(std::exp(lp[0]) > 0.9);
}

TEST_CASE("training is deterministic and monotone in steps") {
  Rng rng(3);
  std::vector<SelectorExample> batch;
  for (int i = 0; i < 10; ++i) batch.push_back(random_example(rng));
  SelectorTrainConfig cfg;
  cfg.steps = 5;
  const auto a = selector_train(SelectorModel{}, batch, cfg);
  const auto b = selector_train(SelectorModel{}, batch, cfg);
  CHECK(a.model == b.model);
  cfg.steps = 50;
  const auto more = selector_train(SelectorModel{}, batch, cfg);
  CHECK(more.objective >= a.objective);
  cfg.steps = 0;
  CHECK(selector_train(SelectorModel{}, batch, cfg).model == SelectorModel{});
}

TEST_CASE("selector validation and json") {
  CHECK_THROWS_AS(SelectorModel(std::vector<double>(3, 0.0)), Error);
  std::vector<double> bad(kNumSelectorFeatures, 0.0);
  bad[2] = std::nan("");
  CHECK_THROWS_AS(SelectorModel{bad}, Error);

  std::vector<double> w(kNumSelectorFeatures);
  std::iota(w.begin(), w.end(), -3.0);
  const SelectorModel m(w);
  CHECK(SelectorModel::from_json(nlohmann::json::parse(m.to_json().dump())) == m);
  auto j = m.to_json();
  j["template"] = "other-template";
  CHECK_THROWS_AS(SelectorModel::from_json(j), Error);
}
