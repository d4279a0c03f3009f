#include "relist/selector.hpp"

#include <algorithm>
#include <cmath>

#include "relist/error.hpp"

namespace relist {

std::string_view feature_name(SelectorFeature f) {
  switch (f) {
    case SelectorFeature::NullBias: return "null_bias";
    case SelectorFeature::NullContextLength: return "null_context_length";
    case SelectorFeature::NullPosition: return "null_position";
    case SelectorFeature::NullPrevMulti: return "null_prev_multi";
    case SelectorFeature::PositiveBias: return "positive_bias";
    case SelectorFeature::NeutralBias: return "neutral_bias";
    case SelectorFeature::NegativeBias: return "negative_bias";
    case SelectorFeature::MentionsFirst: return "mentions_first";
    case SelectorFeature::MentionsSecond: return "mentions_second";
    case SelectorFeature::RecencyFirst: return "recency_first";
    case SelectorFeature::RecencySecond: return "recency_second";
    case SelectorFeature::PairCount: return "pair_count";
    case SelectorFeature::PairUnexpressed: return "pair_unexpressed";
    case SelectorFeature::PrevPair: return "prev_pair";
    case SelectorFeature::Count: break;
  }
  return "?";
}

void FeatureVector::set(SelectorFeature f, double value) {
  const auto id = static_cast<std::size_t>(f);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const auto &e, std::size_t key) { return e.first < key; });
  if (it != entries_.end() && it->first == id) {
    it->second = value;
  } else {
    entries_.insert(it, {id, value});
  }
}

double FeatureVector::get(SelectorFeature f) const {
  const auto id = static_cast<std::size_t>(f);
  for (const auto &[k, v] : entries_) {
    if (k == id) return v;
  }
  return 0.0;
}

double FeatureVector::dot(std::span<const double> weights) const {
  double s = 0.0;
  for (const auto &[k, v] : entries_) s += weights[k] * v;
  return s;
}

void FeatureVector::add_to(std::span<double> dense, double scale) const {
  for (const auto &[k, v] : entries_) dense[k] += scale * v;
}

void FeatureVector::scale(double c) {
  for (auto &e : entries_) e.second *= c;
}

namespace {

bool mentions(const Sentence &s, std::string_view name) {
  return std::find(s.tokens.begin(), s.tokens.end(), name) != s.tokens.end();
}

double count_mentions(std::span<const Sentence> previous, std::string_view name) {
  double n = 0.0;
  for (const auto &s : previous) n += static_cast<double>(std::count(s.tokens.begin(), s.tokens.end(), name));
  return n;
}

double recency(std::span<const Sentence> previous, std::string_view name) {
  for (std::size_t back = 0; back < previous.size() && static_cast<double>(back) < kRecencyCap; ++back) {
    if (mentions(previous[previous.size() - 1 - back], name)) return static_cast<double>(back) / kRecencyCap;
  }
  return 1.0;
}

SelectorFeature polarity_bias(Polarity p) {
  switch (p) {
    case Polarity::Positive: return SelectorFeature::PositiveBias;
    case Polarity::Neutral: return SelectorFeature::NeutralBias;
    case Polarity::Negative: return SelectorFeature::NegativeBias;
  }
  return SelectorFeature::NeutralBias;
}

}  // namespace

FeatureVector selector_features(const SelectorInput &input, LatentValue candidate) {
  FeatureVector f;
  const auto previous = input.context.previous;
  const double position = static_cast<double>(previous.size());
  if (candidate.is_null()) {
    f.set(SelectorFeature::NullBias, 1.0);
    f.set(SelectorFeature::NullContextLength, position / 10.0);
    f.set(SelectorFeature::NullPosition, std::min(position / 12.0, 1.0));
    double multi = 0.0;
    if (!previous.empty() && input.relationships) {
      std::size_t named = 0;
      for (const auto &name : input.relationships->characters()) named += mentions(previous.back(), name);
      multi = named >= 2 ? 1.0 : 0.0;
    }
    f.set(SelectorFeature::NullPrevMulti, multi);
    return f;
  }

  const auto &triple = input.relationships->at(candidate);
  const auto &a = triple.pair.first();
  const auto &b = triple.pair.second();
  double pair_count = 0.0;
  for (const auto &s : previous) pair_count += (mentions(s, a) && mentions(s, b)) ? 1.0 : 0.0;
  f.set(polarity_bias(triple.polarity), 1.0);
  f.set(SelectorFeature::MentionsFirst, count_mentions(previous, a));
  f.set(SelectorFeature::MentionsSecond, count_mentions(previous, b));
  f.set(SelectorFeature::RecencyFirst, recency(previous, a));
  f.set(SelectorFeature::RecencySecond, recency(previous, b));
  f.set(SelectorFeature::PairCount, pair_count);
  f.set(SelectorFeature::PairUnexpressed, pair_count == 0.0 ? 1.0 : 0.0);
  f.set(SelectorFeature::PrevPair,
        (!previous.empty() && mentions(previous.back(), a) && mentions(previous.back(), b)) ? 1.0 : 0.0);
  return f;
}

std::vector<FeatureVector> candidate_features(const SelectorInput &input) {
  std::vector<FeatureVector> out;
  const std::size_t k = input.relationships ? input.relationships->size() : 0;
  out.reserve(k + 1);
  for (std::size_t j = 0; j <= k; ++j) out.push_back(selector_features(input, LatentValue::from_index(j)));
  return out;
}

SelectorModel::SelectorModel(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.size() != kNumSelectorFeatures) {
    throw Error(ErrorKind::InvalidConfig, "selector weight vector has wrong length");
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw Error(ErrorKind::Divergence, "non-finite selector weight");
  }
}

std::vector<double> SelectorModel::log_probs(std::span<const FeatureVector> candidates) const {
  std::vector<double> scores(candidates.size());
  double mx = -INFINITY;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    scores[c] = candidates[c].dot(weights_);
    mx = std::max(mx, scores[c]);
  }
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);
  for (double &s : scores) s -= log_z;
  return scores;
}

std::vector<double> SelectorModel::log_probs(const SelectorInput &input) const {
  return log_probs(candidate_features(input));
}

nlohmann::json SelectorModel::to_json() const {
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t i = 0; i < kNumSelectorFeatures; ++i) {
    names.push_back(std::string(feature_name(static_cast<SelectorFeature>(i))));
  }
  return nlohmann::json{{"template", template_id_}, {"features", std::move(names)}, {"weights", weights_}};
}

SelectorModel SelectorModel::from_json(const nlohmann::json &j) {
  if (j.at("template").get<std::string>() != kSelectorTemplate) {
    throw Error(ErrorKind::InvalidConfig, "unsupported selector template");
  }
  return SelectorModel(j.at("weights").get<std::vector<double>>());
}

std::vector<double> selector_grad(const SelectorModel &sel, const SelectorExample &example) {
  std::vector<double> grad(kNumSelectorFeatures, 0.0);
  const auto lp = sel.log_probs(example.candidates);
  for (std::size_t c = 0; c < example.candidates.size(); ++c) {
    example.candidates[c].add_to(grad, example.target[c] - std::exp(lp[c]));
  }
  return grad;
}

std::vector<double> selector_grad(const SelectorModel &sel, std::span<const SelectorExample> batch) {
  std::vector<double> grad(kNumSelectorFeatures, 0.0);
  for (const auto &ex : batch) {
    const auto g = selector_grad(sel, ex);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += ex.weight * g[k];
  }
  return grad;
}

double selector_log_likelihood(const SelectorModel &sel, const SelectorExample &example) {
  const auto lp = sel.log_probs(example.candidates);
  double ll = 0.0;
  for (std::size_t c = 0; c < lp.size(); ++c) {
    if (example.target[c] != 0.0) ll += example.target[c] * lp[c];
  }
  return ll;
}

namespace {

// Objective and its gradient in one pass.
double objective_and_grad(const SelectorModel &sel, std::span<const SelectorExample> examples, double l2,
                          std::vector<double> *grad) {
  double total_weight = 0.0;
  for (const auto &ex : examples) total_weight += ex.weight;
  const double norm = total_weight > 0.0 ? 1.0 / total_weight : 0.0;
  if (grad) grad->assign(kNumSelectorFeatures, 0.0);
  double obj = 0.0;
  for (const auto &ex : examples) {
    if (ex.weight == 0.0) continue;
    const auto lp = sel.log_probs(ex.candidates);
    for (std::size_t c = 0; c < lp.size(); ++c) {
      if (ex.target[c] != 0.0) obj += norm * ex.weight * ex.target[c] * lp[c];
      if (grad) ex.candidates[c].add_to(*grad, norm * ex.weight * (ex.target[c] - std::exp(lp[c])));
    }
  }
  const auto w = sel.weights();
  for (std::size_t k = 0; k < w.size(); ++k) {
    obj -= l2 * w[k] * w[k];
    if (grad) (*grad)[k] -= 2.0 * l2 * w[k];
  }
  return obj;
}

}  // namespace

double selector_objective(const SelectorModel &sel, std::span<const SelectorExample> examples, double l2) {
  return objective_and_grad(sel, examples, l2, nullptr);
}

SelectorTrainResult selector_train(const SelectorModel &init, std::span<const SelectorExample> examples,
                                   const SelectorTrainConfig &cfg) {
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning rate must be > 0");
  if (!(cfg.l2 >= 0.0)) throw Error(ErrorKind::InvalidConfig, "l2 must be >= 0");
  SelectorTrainResult result{init, 0, 0.0};
  std::vector<double> grad;
  double obj = objective_and_grad(result.model, examples, cfg.l2, &grad);
  if (!std::isfinite(obj)) throw Error(ErrorKind::Divergence, "selector objective is not finite");
  double lr = cfg.learning_rate;
  std::vector<double> trial(kNumSelectorFeatures);
  std::vector<double> trial_grad;
  while (result.steps_taken < cfg.steps) {
    ++result.steps_taken;
    const auto w = result.model.weights();
    for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = w[k] + lr * grad[k];
    bool finite = std::all_of(trial.begin(), trial.end(), [](double v) { return std::isfinite(v); });
    double trial_obj = -INFINITY;
    SelectorModel candidate;
    if (finite) {
      candidate = SelectorModel(trial);
      trial_obj = objective_and_grad(candidate, examples, cfg.l2, &trial_grad);
    }
    if (std::isfinite(trial_obj) && trial_obj >= obj) {
      const double gain = trial_obj - obj;
      result.model = std::move(candidate);
      obj = trial_obj;
      grad.swap(trial_grad);
      lr *= 1.25;
      if (gain < cfg.tolerance) break;
    } else {
      lr *= 0.5;
      if (lr < 1e-30) break;
    }
  }
  result.objective = obj;
  if (!std::isfinite(obj)) throw Error(ErrorKind::Divergence, "selector objective is not finite");
  return result;
}

}  // namespace relist
