#include "relist/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "relist/annotator.hpp"
#include "relist/error.hpp"

namespace relist {

// ---- relationship identification ----

std::vector<RelationshipTriple> identify_relationships(const Story &story, std::span<const std::string> inventory,
                                                       const SentimentLexicon &lexicon) {
  std::vector<AnalyzedSentence> analyzed;
  analyzed.reserve(story.sentences.size());
  for (const auto &s : story.sentences) analyzed.push_back(analyze_sentence(s, inventory, lexicon));
  const auto silver = annotate_sentences(analyzed, lexicon);
  if (!silver) return {};
  const auto triples = silver->relationships.triples();
  return {triples.begin(), triples.end()};
}

RICounts classify_identified(const RelationshipSet &input, std::span<const RelationshipTriple> identified) {
  RICounts c;
  for (const auto &t : identified) {
    const auto j = input.index_of(t.pair);
    if (!j) {
      ++c.unspec;
    } else if (input.relationship(*j).polarity == t.polarity) {
      ++c.exact;
    } else {
      ++c.incorrect;
    }
  }
  return c;
}

RIReport ri_from_counts(std::span<const RICounts> per_story) {
  RIReport r;
  r.stories = per_story.size();
  RICounts sum;
  for (const auto &c : per_story) {
    sum.exact += c.exact;
    sum.unspec += c.unspec;
    sum.incorrect += c.incorrect;
  }
  r.identified_total = sum.total();
  r.avg_rel = r.stories ? static_cast<double>(r.identified_total) / static_cast<double>(r.stories) : 0.0;
  if (r.identified_total == 0) {
    r.undefined = true;
    return r;
  }
  const double n = static_cast<double>(r.identified_total);
  r.pct_exact = 100.0 * static_cast<double>(sum.exact) / n;
  r.pct_unspec = 100.0 * static_cast<double>(sum.unspec) / n;
  r.pct_incorrect = 100.0 * static_cast<double>(sum.incorrect) / n;
  return r;
}

RIReport ri_metrics(std::span<const RIInput> inputs, const SentimentLexicon &lexicon) {
  std::vector<RICounts> counts;
  counts.reserve(inputs.size());
  for (const auto &in : inputs) {
    const auto found = identify_relationships(*in.story, in.story->characters, lexicon);
    counts.push_back(classify_identified(in.input, found));
  }
  return ri_from_counts(counts);
}

// ---- polarity classification ----

namespace {

std::string distance_bucket(std::size_t d) {
  if (d <= 1) return "dist=1";
  if (d == 2) return "dist=2";
  if (d <= 4) return "dist=3-4";
  return "dist=5+";
}

std::size_t first_position(const Sentence &s, std::string_view name) {
  return static_cast<std::size_t>(std::find(s.tokens.begin(), s.tokens.end(), name) - s.tokens.begin());
}

}  // namespace

std::vector<std::string> pair_features(const Story &story, const CharacterPair &pair) {
  std::vector<std::string> out;
  std::size_t co = 0;
  for (const auto &s : story.sentences) {
    const auto a = first_position(s, pair.first());
    const auto b = first_position(s, pair.second());
    if (a == s.tokens.size() || b == s.tokens.size()) continue;
    ++co;
    out.push_back(distance_bucket(a > b ? a - b : b - a));
    for (const auto &tok : s.tokens) {
      if (story.is_character(tok) || tok == pair.first() || tok == pair.second() || is_reserved_token(tok)) continue;
      out.push_back("w=" + tok);
    }
  }
  out.push_back(co == 0 ? "co=0" : co == 1 ? "co=1" : "co=2+");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MixBaselines mix_baselines(const std::array<double, kNumPolarities> &mix) {
  double total = 0.0;
  for (double m : mix) total += m;
  MixBaselines b;
  if (total <= 0.0) return b;
  for (double m : mix) {
    const double p = m / total;
    b.majority = std::max(b.majority, p);
    b.random += p * p;
  }
  return b;
}

namespace {

struct EncodedPair {
  std::vector<std::size_t> features;
  std::size_t label = 0;
};

class PolarityClassifier {
 public:
  PolarityClassifier(std::size_t num_features, const std::array<double, kNumPolarities> &log_prior)
      : num_features_(num_features), w_((num_features + 1) * kNumPolarities, 0.0) {
    for (std::size_t c = 0; c < kNumPolarities; ++c) w_[bias(c)] = log_prior[c];
  }

  std::array<double, kNumPolarities> log_probs(const std::vector<std::size_t> &feats,
                                               const std::vector<double> &w) const {
    std::array<double, kNumPolarities> s{};
    double mx = -INFINITY;
    for (std::size_t c = 0; c < kNumPolarities; ++c) {
      s[c] = w[bias(c)];
      for (auto f : feats) s[c] += w[weight(c, f)];
      mx = std::max(mx, s[c]);
    }
    double z = 0.0;
    for (double v : s) z += std::exp(v - mx);
    const double lz = mx + std::log(z);
    for (double &v : s) v -= lz;
    return s;
  }

  double objective(const std::vector<EncodedPair> &data, const std::vector<double> &w, double l2,
                   std::vector<double> *grad) const {
    const double norm = 1.0 / static_cast<double>(data.size());
    if (grad) grad->assign(w.size(), 0.0);
    double obj = 0.0;
    for (const auto &ex : data) {
      const auto lp = log_probs(ex.features, w);
      obj += norm * lp[ex.label];
      if (!grad) continue;
      for (std::size_t c = 0; c < kNumPolarities; ++c) {
        const double g = norm * ((c == ex.label ? 1.0 : 0.0) - std::exp(lp[c]));
        (*grad)[bias(c)] += g;
        for (auto f : ex.features) (*grad)[weight(c, f)] += g;
      }
    }
    for (std::size_t c = 0; c < kNumPolarities; ++c) {
      for (std::size_t f = 0; f < num_features_; ++f) {
        const double v = w[weight(c, f)];
        obj -= l2 * v * v;
        if (grad) (*grad)[weight(c, f)] -= 2.0 * l2 * v;
      }
    }
    return obj;
  }

  void fit(const std::vector<EncodedPair> &data, const PCLSConfig &cfg) {
    std::vector<double> grad, trial_grad;
    double obj = objective(data, w_, cfg.l2, &grad);
    double lr = cfg.learning_rate;
    std::vector<double> trial(w_.size());
    for (std::size_t step = 0; step < cfg.steps; ++step) {
      for (std::size_t k = 0; k < w_.size(); ++k) trial[k] = w_[k] + lr * grad[k];
      const double t = objective(data, trial, cfg.l2, &trial_grad);
      if (std::isfinite(t) && t >= obj) {
        w_.swap(trial);
        grad.swap(trial_grad);
        obj = t;
        lr *= 1.25;
      } else {
        lr *= 0.5;
        if (lr < 1e-20) break;
      }
    }
  }

  std::size_t predict(const std::vector<std::size_t> &feats) const {
    const auto lp = log_probs(feats, w_);
    return static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
  }

 private:
  std::size_t bias(std::size_t c) const { return c * (num_features_ + 1) + num_features_; }
  std::size_t weight(std::size_t c, std::size_t f) const { return c * (num_features_ + 1) + f; }

  std::size_t num_features_;
  std::vector<double> w_;
};

}  // namespace

PCLSReport pcls(std::span<const PairExample> train, std::span<const PairExample> test, const PCLSConfig &cfg) {
  if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "P-CLS needs at least one training pair");
  std::map<std::string, std::size_t> vocab;
  std::vector<EncodedPair> data;
  std::array<double, kNumPolarities> train_counts{};
  for (const auto &ex : train) {
    EncodedPair e;
    for (auto &f : pair_features(*ex.story, ex.pair)) {
      const auto [it, inserted] = vocab.emplace(std::move(f), vocab.size());
      e.features.push_back(it->second);
    }
    e.label = static_cast<std::size_t>(ex.polarity);
    train_counts[e.label] += 1.0;
    data.push_back(std::move(e));
  }
  std::array<double, kNumPolarities> log_prior{};
  const double n_train = static_cast<double>(data.size());
  for (std::size_t c = 0; c < kNumPolarities; ++c) {
    log_prior[c] = std::log((train_counts[c] + 1.0) / (n_train + kNumPolarities));
  }
  PolarityClassifier clf(vocab.size(), log_prior);
  clf.fit(data, cfg);

  PCLSReport r;
  r.train_pairs = train.size();
  r.test_pairs = test.size();
  std::size_t correct = 0;
  for (const auto &ex : test) {
    std::vector<std::size_t> feats;
    for (const auto &f : pair_features(*ex.story, ex.pair)) {
      const auto it = vocab.find(f);
      if (it != vocab.end()) feats.push_back(it->second);
    }
    const auto label = static_cast<std::size_t>(ex.polarity);
    correct += clf.predict(feats) == label;
    r.test_distribution[label] += 1.0;
  }
  if (!test.empty()) {
    const double n_test = static_cast<double>(test.size());
    r.accuracy = static_cast<double>(correct) / n_test;
    for (std::size_t c = 0; c < kNumPolarities; ++c) {
      r.test_distribution[c] /= n_test;
      r.majority_baseline = std::max(r.majority_baseline, r.test_distribution[c]);
      r.random_baseline += r.test_distribution[c] * train_counts[c] / n_train;
    }
  }
  return r;
}

// ---- content quality ----

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

double bleu(std::span<const std::string> candidate, std::span<const std::string> reference, int max_n) {
  if (candidate.empty() || reference.empty() || max_n < 1) return 0.0;
  const std::size_t orders = std::min<std::size_t>(static_cast<std::size_t>(max_n), candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto cand = count_ngrams(candidate, n);
    const auto ref = count_ngrams(reference, n);
    double matches = 0.0;
    double total = 0.0;
    for (const auto &[gram, c] : cand) {
      total += static_cast<double>(c);
      const auto it = ref.find(gram);
      if (it != ref.end()) matches += static_cast<double>(std::min(c, it->second));
    }
    log_sum += std::log(std::max(matches, kBleuEpsilon) / total);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double log_bp = c > r ? 0.0 : 1.0 - r / c;
  return std::exp(log_bp + log_sum / static_cast<double>(orders));
}

RougeScores rouge(std::span<const std::string> candidate, std::span<const std::string> reference) {
  RougeScores out;
  if (candidate.empty() || reference.empty()) return out;
  const double nc = static_cast<double>(candidate.size());
  const double nr = static_cast<double>(reference.size());

  const auto cand = count_ngrams(candidate, 1);
  const auto ref = count_ngrams(reference, 1);
  double overlap = 0.0;
  for (const auto &[gram, c] : cand) {
    const auto it = ref.find(gram);
    if (it != ref.end()) overlap += static_cast<double>(std::min(c, it->second));
  }
  out.rouge1_f = f1(overlap / nc, overlap / nr);

  std::vector<std::size_t> prev(reference.size() + 1, 0), cur(reference.size() + 1, 0);
  for (std::size_t i = 1; i <= candidate.size(); ++i) {
    for (std::size_t j = 1; j <= reference.size(); ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[reference.size()]);
  out.rougeL_f = f1(lcs / nc, lcs / nr);
  return out;
}

double distinct_ratio(std::span<const std::string> tokens, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidConfig, "distinct-n needs n >= 1");
  const auto un = static_cast<std::size_t>(n);
  if (tokens.size() < un) return 0.0;
  const auto counts = count_ngrams(tokens, un);
  return static_cast<double>(counts.size()) / static_cast<double>(tokens.size() - un + 1);
}

DistinctResult distinct_n(std::span<const std::vector<std::string>> stories, int n, bool pooled) {
  if (n < 1) throw Error(ErrorKind::InvalidConfig, "distinct-n needs n >= 1");
  const auto un = static_cast<std::size_t>(n);
  DistinctResult r;
  for (const auto &s : stories) r.short_stories += s.size() < un;
  if (stories.empty()) return r;
  if (pooled) {
    std::set<std::vector<std::string>> unique;
    double total = 0.0;
    for (const auto &s : stories) {
      for (auto &[gram, c] : count_ngrams(s, un)) {
        unique.insert(gram);
        total += static_cast<double>(c);
      }
    }
    r.value = total > 0.0 ? static_cast<double>(unique.size()) / total : 0.0;
    return r;
  }
  double sum = 0.0;
  for (const auto &s : stories) sum += distinct_ratio(s, n);
  r.value = sum / static_cast<double>(stories.size());
  return r;
}

std::vector<std::string> story_tokens(const Story &story) {
  std::vector<std::string> out;
  for (const auto &s : story.sentences) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

// ---- trace analyses ----

std::string_view trace_class_name(std::size_t c) {
  switch (c) {
    case 0: return "positive";
    case 1: return "neutral";
    case 2: return "negative";
    default: return "null";
  }
}

std::vector<std::size_t> trace_classes(const LatentTrace &trace, const RelationshipSet &set) {
  std::vector<std::size_t> out;
  out.reserve(trace.size());
  for (const auto z : trace.assignments) {
    out.push_back(z.is_null() ? kNullClass : static_cast<std::size_t>(set.at(z).polarity));
  }
  return out;
}

std::string TransitionMatrix::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17) << "from";
  for (std::size_t c = 0; c < kNumTraceClasses; ++c) out << ',' << trace_class_name(c);
  out << ",count\n";
  for (std::size_t r = 0; r < kNumTraceClasses; ++r) {
    out << trace_class_name(r);
    for (std::size_t c = 0; c < kNumTraceClasses; ++c) out << ',' << p[r][c];
    out << ',' << row_counts[r] << '\n';
  }
  return out.str();
}

TransitionMatrix transition_matrix(std::span<const std::vector<std::size_t>> traces) {
  TransitionMatrix m;
  std::array<std::array<std::size_t, kNumTraceClasses>, kNumTraceClasses> counts{};
  for (const auto &t : traces) {
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i - 1] != t[i]) ++counts[t[i - 1]][t[i]];
    }
  }
  for (std::size_t r = 0; r < kNumTraceClasses; ++r) {
    std::size_t total = 0;
    for (auto c : counts[r]) total += c;
    m.row_counts[r] = total;
    m.empty_row[r] = total == 0;
    if (total == 0) continue;
    for (std::size_t c = 0; c < kNumTraceClasses; ++c) {
      m.p[r][c] = static_cast<double>(counts[r][c]) / static_cast<double>(total);
    }
  }
  return m;
}

PositionDistribution position_distribution(std::span<const std::vector<std::size_t>> traces) {
  PositionDistribution d;
  std::size_t stories = 0, sentences = 0;
  for (const auto &t : traces) {
    if (t.empty()) continue;
    ++stories;
    d.beginning[t.front()] += 1.0;
    d.ending[t.back()] += 1.0;
    for (auto c : t) d.overall[c] += 1.0;
    sentences += t.size();
  }
  if (stories == 0) throw Error(ErrorKind::InvalidConfig, "position distribution needs a non-empty trace");
  for (std::size_t c = 0; c < kNumTraceClasses; ++c) {
    d.beginning[c] *= 100.0 / static_cast<double>(stories);
    d.ending[c] *= 100.0 / static_cast<double>(stories);
    d.overall[c] *= 100.0 / static_cast<double>(sentences);
  }
  return d;
}

const std::vector<std::string> &default_stopwords() {
  static const std::vector<std::string> words = {
      ".", ",", "!", "?", ";", ":", "'", "\"", "a",    "an",   "and", "are",  "as",   "at",   "be",
      "but", "by", "for", "from", "had", "has", "he", "her", "him", "his", "i",   "in",   "into", "is",
      "it",  "its", "of", "on", "or", "she", "so", "that", "the", "their", "them", "then", "they", "this",
      "to",  "was", "were", "with"};
  return words;
}

PolarityNgrams top_ngrams_by_polarity(std::span<const TracedStory> stories, int n_max,
                                      std::span<const std::string> stopwords, std::size_t k) {
  const std::set<std::string> stop(stopwords.begin(), stopwords.end());
  const auto orders = static_cast<std::size_t>(std::max(n_max, 0));
  std::array<std::vector<std::map<std::string, std::size_t>>, kNumPolarities> counts;
  for (auto &c : counts) c.resize(orders);
  for (const auto &ts : stories) {
    const auto classes = trace_classes(*ts.trace, *ts.relationships);
    for (std::size_t i = 0; i < classes.size() && i < ts.story->sentences.size(); ++i) {
      if (classes[i] == kNullClass) continue;
      std::vector<std::string> kept;
      for (const auto &tok : ts.story->sentences[i].tokens) {
        if (stop.count(tok) || ts.story->is_character(tok) || is_reserved_token(tok)) continue;
        kept.push_back(tok);
      }
      for (std::size_t n = 1; n <= orders; ++n) {
        for (std::size_t j = 0; j + n <= kept.size(); ++j) {
          std::string gram = kept[j];
          for (std::size_t t = 1; t < n; ++t) gram += ' ' + kept[j + t];
          ++counts[classes[i]][n - 1][gram];
        }
      }
    }
  }
  PolarityNgrams out;
  for (std::size_t p = 0; p < kNumPolarities; ++p) {
    out[p].resize(orders);
    for (std::size_t n = 0; n < orders; ++n) {
      RankedNgrams ranked(counts[p][n].begin(), counts[p][n].end());
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto &a, const auto &b) { return a.second > b.second; });
      if (ranked.size() > k) ranked.resize(k);
      out[p][n] = std::move(ranked);
    }
  }
  return out;
}

// ---- full report ----

namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += jobs) fn(i);
    });
  }
  for (auto &t : workers) t.join();
}

nlohmann::json dist_json(const std::array<double, kNumTraceClasses> &d) {
  nlohmann::json j;
  for (std::size_t c = 0; c < kNumTraceClasses; ++c) j[std::string(trace_class_name(c))] = d[c];
  return j;
}

}  // namespace

EvaluationReport evaluate(std::string mode, std::span<const EvalItem> items, const SentimentLexicon &lexicon,
                          const EvalOptions &options) {
  EvaluationReport r;
  r.mode = std::move(mode);
  r.mix = mix_baselines(options.polarity_mix);
  r.per_story.resize(items.size());
  std::vector<std::vector<std::string>> generated_tokens(items.size());

  parallel_for(items.size(), options.jobs, [&](std::size_t i) {
    const auto &item = items[i];
    const Story &gen = item.generated->story;
    auto &s = r.per_story[i];
    s.id = item.id;
    s.sentences = gen.sentences.size();
    s.ri = classify_identified(item.input, identify_relationships(gen, gen.characters, lexicon));
    generated_tokens[i] = story_tokens(gen);
    const auto ref = story_tokens(item.reference->story);
    s.bleu = bleu(generated_tokens[i], ref);
    const auto rg = rouge(generated_tokens[i], ref);
    s.rouge1_f = rg.rouge1_f;
    s.rougeL_f = rg.rougeL_f;
    s.distinct1 = distinct_ratio(generated_tokens[i], 1);
    s.distinct2 = distinct_ratio(generated_tokens[i], 2);
    s.distinct3 = distinct_ratio(generated_tokens[i], 3);
  });

  std::vector<RICounts> counts;
  std::vector<std::vector<std::size_t>> traces;
  std::vector<TracedStory> traced;
  std::vector<PairExample> train, test;
  std::set<const GoldStory *> seen_reference;
  double sentences = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto &item = items[i];
    const auto &s = r.per_story[i];
    counts.push_back(s.ri);
    r.content.bleu += s.bleu;
    r.content.rouge1_f += s.rouge1_f;
    r.content.rougeL_f += s.rougeL_f;
    sentences += static_cast<double>(s.sentences);
    r.eos_terminated += item.generated->termination == Termination::EosStory;
    r.truncated_sentences += item.generated->truncated_sentences;
    traces.push_back(trace_classes(item.generated->trace, item.input));
    traced.push_back(TracedStory{&item.generated->story, &item.generated->trace, &item.input});
    for (const auto &t : item.input.triples()) train.push_back(PairExample{&item.generated->story, t.pair, t.polarity});
    if (seen_reference.insert(item.reference).second) {
      for (const auto &t : item.reference->gold_relationships.triples()) {
        test.push_back(PairExample{&item.reference->story, t.pair, t.polarity});
      }
    }
  }
  r.ri = ri_from_counts(counts);
  if (!items.empty()) {
    const double n = static_cast<double>(items.size());
    r.content.bleu /= n;
    r.content.rouge1_f /= n;
    r.content.rougeL_f /= n;
    r.mean_sentences = sentences / n;
    r.content.distinct1 = distinct_n(generated_tokens, 1, options.pooled_distinct).value;
    r.content.distinct2 = distinct_n(generated_tokens, 2, options.pooled_distinct).value;
    r.content.distinct3 = distinct_n(generated_tokens, 3, options.pooled_distinct).value;
    r.pcls = pcls(train, test, options.pcls);
    r.transitions = transition_matrix(traces);
    r.positions = position_distribution(traces);
  }
  r.ngrams = top_ngrams_by_polarity(traced, options.n_max, default_stopwords(), options.top_k);
  return r;
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json j;
  j["format"] = kReportFormat;
  j["mode"] = mode;
  j["stories"] = per_story.size();
  j["pct_exact"] = ri.pct_exact;
  j["pct_unspec"] = ri.pct_unspec;
  j["pct_incorrect"] = ri.pct_incorrect;
  j["avg_rel"] = ri.avg_rel;
  j["identified_total"] = ri.identified_total;
  j["ri_undefined"] = ri.undefined;
  j["p_cls"] = pcls.accuracy;
  j["p_cls_baselines"] = {{"test_majority", pcls.majority_baseline},
                          {"test_random", pcls.random_baseline},
                          {"mix_majority", mix.majority},
                          {"mix_random", mix.random},
                          {"train_pairs", pcls.train_pairs},
                          {"test_pairs", pcls.test_pairs}};
  j["bleu"] = content.bleu;
  j["rouge1_f"] = content.rouge1_f;
  j["rougeL_f"] = content.rougeL_f;
  j["distinct1"] = content.distinct1;
  j["distinct2"] = content.distinct2;
  j["distinct3"] = content.distinct3;
  j["mean_sentences"] = mean_sentences;
  j["eos_terminated"] = eos_terminated;
  j["truncated_sentences"] = truncated_sentences;

  nlohmann::json tm = nlohmann::json::array();
  for (const auto &row : transitions.p) tm.push_back(row);
  j["transition_matrix"] = {{"states", {"positive", "neutral", "negative", "null"}},
                            {"p", tm},
                            {"row_counts", transitions.row_counts},
                            {"empty_row", transitions.empty_row}};
  j["position_distribution"] = {{"beginning", dist_json(positions.beginning)},
                                {"ending", dist_json(positions.ending)},
                                {"overall", dist_json(positions.overall)}};
  nlohmann::json ng;
  for (std::size_t p = 0; p < kNumPolarities; ++p) {
    nlohmann::json by_n;
    for (std::size_t n = 0; n < ngrams[p].size(); ++n) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto &[gram, c] : ngrams[p][n]) list.push_back({gram, c});
      by_n[std::to_string(n + 1)] = std::move(list);
    }
    ng[std::string(to_string(kAllPolarities[p]))] = std::move(by_n);
  }
  j["top_ngrams"] = std::move(ng);

  nlohmann::json ps = nlohmann::json::array();
  for (const auto &s : per_story) {
    ps.push_back({{"id", s.id},
                  {"identified", s.ri.total()},
                  {"exact", s.ri.exact},
                  {"unspec", s.ri.unspec},
                  {"incorrect", s.ri.incorrect},
                  {"bleu", s.bleu},
                  {"rouge1_f", s.rouge1_f},
                  {"rougeL_f", s.rougeL_f},
                  {"distinct1", s.distinct1},
                  {"distinct2", s.distinct2},
                  {"distinct3", s.distinct3},
                  {"sentences", s.sentences}});
  }
  j["per_story"] = std::move(ps);
  return j;
}

void save_report(const EvaluationReport &report, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << report.to_json().dump(2) << '\n';
}

// ---- report comparison ----

double paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::MisalignedReports, "paired samples differ in length");
  const std::size_t n = a.size();
  if (n == 0) return 1.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  if (ss == 0.0 || n < 2) return mean == 0.0 ? 1.0 : (n < 2 ? 1.0 : 0.0);
  const double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  const double t = std::abs(mean / se);
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

namespace {

const std::vector<std::string> &compared_metrics() {
  static const std::vector<std::string> m = {"identified", "exact",     "unspec",    "incorrect",
                                             "bleu",       "rouge1_f",  "rougeL_f",  "distinct1",
                                             "distinct2",  "distinct3", "sentences"};
  return m;
}

}  // namespace

Comparison compare_reports(std::span<const nlohmann::json> reports, std::span<const std::string> labels) {
  if (reports.size() < 2) throw Error(ErrorKind::MisalignedReports, "need at least two reports");
  if (labels.size() != reports.size()) throw Error(ErrorKind::MisalignedReports, "one label per report required");
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto &rep = reports[r];
    if (!rep.is_object() || rep.value("format", "") != kReportFormat || !rep.contains("per_story")) {
      throw Error(ErrorKind::MisalignedReports, "report '" + labels[r] + "' is not relist-report-v1");
    }
    std::vector<std::string> these;
    for (const auto &s : rep.at("per_story")) these.push_back(s.at("id").get<std::string>());
    if (r == 0) {
      ids = std::move(these);
    } else if (these != ids) {
      throw Error(ErrorKind::MisalignedReports, "report '" + labels[r] + "' covers different story ids");
    }
  }
  Comparison cmp;
  cmp.labels.assign(labels.begin(), labels.end());
  for (const auto &metric : compared_metrics()) {
    std::vector<std::vector<double>> samples;
    for (const auto &rep : reports) {
      std::vector<double> v;
      for (const auto &s : rep.at("per_story")) v.push_back(s.at(metric).get<double>());
      samples.push_back(std::move(v));
    }
    MetricComparison mc;
    mc.metric = metric;
    for (std::size_t r = 0; r < samples.size(); ++r) {
      double m = 0.0;
      for (double x : samples[r]) m += x;
      mc.means.push_back(samples[r].empty() ? 0.0 : m / static_cast<double>(samples[r].size()));
      mc.deltas.push_back(mc.means.back() - mc.means.front());
      mc.p_values.push_back(paired_t_test(samples[r], samples[0]));
    }
    cmp.metrics.push_back(std::move(mc));
  }
  return cmp;
}

std::string Comparison::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(12) << "metric";
  for (const auto &l : labels) out << std::setw(14) << l;
  for (std::size_t r = 1; r < labels.size(); ++r) {
    out << std::setw(14) << ("d(" + labels[r] + ")") << std::setw(10) << "p";
  }
  out << '\n';
  for (const auto &m : metrics) {
    out << std::setw(12) << m.metric;
    for (double v : m.means) out << std::setw(14) << v;
    for (std::size_t r = 1; r < m.means.size(); ++r) out << std::setw(14) << m.deltas[r] << std::setw(10) << m.p_values[r];
    out << '\n';
  }
  return out.str();
}

nlohmann::json Comparison::to_json() const {
  nlohmann::json j;
  j["labels"] = labels;
  nlohmann::json ms = nlohmann::json::array();
  for (const auto &m : metrics) {
    ms.push_back({{"metric", m.metric}, {"means", m.means}, {"deltas", m.deltas}, {"p_values", m.p_values}});
  }
  j["metrics"] = std::move(ms);
  return j;
}

}  // namespace relist
