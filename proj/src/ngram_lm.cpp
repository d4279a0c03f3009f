#include "relist/ngram_lm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "relist/error.hpp"

namespace relist {

std::string polarity_token(Polarity p) { return "<POL:" + std::string(to_string(p)) + ">"; }

std::string char_placeholder(std::size_t k) { return "<CHAR" + std::to_string(k) + ">"; }

std::size_t placeholder_index(std::string_view token) {
  constexpr std::string_view head = "<CHAR";
  if (token.size() <= head.size() + 1 || token.substr(0, head.size()) != head || token.back() != '>') return 0;
  const std::string_view digits = token.substr(head.size(), token.size() - head.size() - 1);
  std::size_t k = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return 0;
  return k;
}

std::vector<double> LMConfig::resolved_lambdas() const {
  if (!lambdas.empty()) return lambdas;
  return std::vector<double>(static_cast<std::size_t>(std::max(order, 1)), 1.0 / static_cast<double>(std::max(order, 1)));
}

void LMConfig::validate() const {
  if (order < 1) throw Error(ErrorKind::InvalidConfig, "LM order must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::InvalidConfig, "LM alpha must be > 0");
  const auto lam = resolved_lambdas();
  if (lam.size() != static_cast<std::size_t>(order)) {
    throw Error(ErrorKind::InvalidConfig, "need one interpolation weight per order");
  }
  double sum = 0.0;
  for (double l : lam) {
    if (!(l >= 0.0)) throw Error(ErrorKind::InvalidConfig, "interpolation weights must be >= 0");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorKind::InvalidConfig, "interpolation weights must sum to 1");
}

void NGramLM::index_outcomes() {
  std::sort(outcomes_.begin(), outcomes_.end());
  outcomes_.erase(std::unique(outcomes_.begin(), outcomes_.end()), outcomes_.end());
  outcome_index_.clear();
  for (std::size_t i = 0; i < outcomes_.size(); ++i) outcome_index_.emplace(outcomes_[i], i);
  unk_id_ = outcome_index_.at(std::string(kUnk));
  eos_id_ = outcome_index_.at(std::string(kEosSent));
}

std::size_t NGramLM::outcome_id(std::string_view token) const {
  auto it = outcome_index_.find(std::string(token));
  return it == outcome_index_.end() ? unk_id_ : it->second;
}

std::vector<std::string> NGramLM::padded_history(std::span<const std::string> history) const {
  std::vector<std::string> padded(static_cast<std::size_t>(cfg_.order - 1), std::string(kBos));
  padded.insert(padded.end(), history.begin(), history.end());
  return padded;
}

std::string NGramLM::context_key(std::span<const std::string> padded, std::size_t end, int k) const {
  // Tokens padded[end-k+1 .. end-1].
  std::string key;
  for (std::size_t i = end - static_cast<std::size_t>(k - 1); i < end; ++i) {
    if (!key.empty()) key += ' ';
    key += padded[i];
  }
  return key;
}

NGramLM NGramLM::train(std::span<const WeightedSequence> data, const LMConfig &cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training sequences");
  NGramLM lm;
  lm.cfg_ = cfg;
  lm.lambdas_ = cfg.resolved_lambdas();
  lm.outcomes_ = {std::string(kEosSent), std::string(kUnk)};
  for (const auto &seq : data) {
    if (!(seq.weight >= 0.0) || !std::isfinite(seq.weight)) {
      throw Error(ErrorKind::InvalidConfig, "training weights must be finite and >= 0");
    }
    lm.outcomes_.insert(lm.outcomes_.end(), seq.body.begin(), seq.body.end());
  }
  lm.index_outcomes();
  lm.tables_.assign(static_cast<std::size_t>(cfg.order), {});

  for (const auto &seq : data) {
    if (seq.weight == 0.0) continue;
    std::vector<std::string> padded = lm.padded_history(seq.prefix);
    const std::size_t body_start = padded.size();
    padded.insert(padded.end(), seq.body.begin(), seq.body.end());
    padded.emplace_back(kEosSent);
    for (std::size_t pos = body_start; pos < padded.size(); ++pos) {
      const std::size_t w = lm.outcome_index_.at(padded[pos]);
      for (int k = 1; k <= cfg.order; ++k) {
        auto &cc = lm.tables_[static_cast<std::size_t>(k - 1)][lm.context_key(padded, pos, k)];
        cc.total += seq.weight;
        cc.counts[w] += seq.weight;
      }
    }
  }
  return lm;
}

double NGramLM::prob_at(std::span<const std::string> padded, std::size_t end, std::size_t outcome) const {
  const double v = static_cast<double>(outcomes_.size());
  double p = 0.0;
  for (int k = 1; k <= cfg_.order; ++k) {
    const double lambda = lambdas_[static_cast<std::size_t>(k - 1)];
    if (lambda == 0.0) continue;
    const auto &table = tables_[static_cast<std::size_t>(k - 1)];
    double c = 0.0;
    double total = 0.0;
    if (auto it = table.find(context_key(padded, end, k)); it != table.end()) {
      total = it->second.total;
      if (auto jt = it->second.counts.find(outcome); jt != it->second.counts.end()) c = jt->second;
    }
    p += lambda * (c + cfg_.alpha) / (total + cfg_.alpha * v);
  }
  return p;
}

double NGramLM::log_prob(std::span<const std::string> prefix, std::span<const std::string> body) const {
  std::vector<std::string> padded = padded_history(prefix);
  const std::size_t body_start = padded.size();
  for (const auto &tok : body) padded.push_back(outcome_index_.count(tok) ? tok : std::string(kUnk));
  padded.emplace_back(kEosSent);
  double lp = 0.0;
  for (std::size_t pos = body_start; pos < padded.size(); ++pos) {
    lp += std::log(prob_at(padded, pos, outcome_index_.at(padded[pos])));
  }
  return lp;
}

std::vector<double> NGramLM::next_distribution(std::span<const std::string> history) const {
  std::vector<std::string> padded = padded_history(history);
  padded.emplace_back();  // slot for the predicted token
  const std::size_t end = padded.size() - 1;
  const double v = static_cast<double>(outcomes_.size());
  std::vector<double> dist(outcomes_.size(), 0.0);
  for (int k = 1; k <= cfg_.order; ++k) {
    const double lambda = lambdas_[static_cast<std::size_t>(k - 1)];
    if (lambda == 0.0) continue;
    const auto &table = tables_[static_cast<std::size_t>(k - 1)];
    const auto it = table.find(context_key(padded, end, k));
    const double total = it == table.end() ? 0.0 : it->second.total;
    const double denom = total + cfg_.alpha * v;
    for (double &d : dist) d += lambda * cfg_.alpha / denom;
    if (it != table.end()) {
      for (const auto &[w, c] : it->second.counts) dist[w] += lambda * c / denom;
    }
  }
  return dist;
}

double NGramLM::prob(std::span<const std::string> history, std::string_view token) const {
  std::vector<std::string> padded = padded_history(history);
  padded.emplace_back(token);
  return prob_at(padded, padded.size() - 1, outcome_id(token));
}

SampleResult NGramLM::sample(std::span<const std::string> prefix, Rng &rng, std::size_t max_tokens) const {
  SampleResult out;
  std::vector<std::string> history(prefix.begin(), prefix.end());
  while (true) {
    if (out.tokens.size() >= max_tokens) {
      out.truncated = true;
      break;
    }
    const auto dist = next_distribution(history);
    const std::size_t w = rng.categorical(dist);
    if (w == eos_id_) break;
    out.tokens.push_back(outcomes_[w]);
    history.push_back(outcomes_[w]);
  }
  return out;
}

double NGramLM::count(std::span<const std::string> context, std::string_view token) const {
  const int k = static_cast<int>(context.size()) + 1;
  if (k > cfg_.order) return 0.0;
  std::vector<std::string> padded(context.begin(), context.end());
  padded.emplace_back();
  const auto &table = tables_[static_cast<std::size_t>(k - 1)];
  auto it = table.find(context_key(padded, padded.size() - 1, k));
  if (it == table.end()) return 0.0;
  auto oit = outcome_index_.find(std::string(token));
  if (oit == outcome_index_.end()) return 0.0;
  auto jt = it->second.counts.find(oit->second);
  return jt == it->second.counts.end() ? 0.0 : jt->second;
}

double NGramLM::context_total(std::span<const std::string> context) const {
  const int k = static_cast<int>(context.size()) + 1;
  if (k > cfg_.order) return 0.0;
  std::vector<std::string> padded(context.begin(), context.end());
  padded.emplace_back();
  const auto &table = tables_[static_cast<std::size_t>(k - 1)];
  auto it = table.find(context_key(padded, padded.size() - 1, k));
  return it == table.end() ? 0.0 : it->second.total;
}

nlohmann::json NGramLM::to_json() const {
  using nlohmann::json;
  json tables = json::array();
  for (const auto &table : tables_) {
    // std::map keys give a sorted, deterministic layout.
    std::map<std::string, std::map<std::string, double>> sorted;
    for (const auto &[ctx, cc] : table) {
      auto &row = sorted[ctx];
      for (const auto &[w, c] : cc.counts) row[outcomes_[w]] = c;
    }
    json jt = json::object();
    for (const auto &[ctx, row] : sorted) jt[ctx] = row;
    tables.push_back(std::move(jt));
  }
  return json{{"order", cfg_.order},
              {"alpha", cfg_.alpha},
              {"lambdas", lambdas_},
              {"vocabulary", outcomes_},
              {"counts", std::move(tables)}};
}

NGramLM NGramLM::from_json(const nlohmann::json &j) {
  NGramLM lm;
  lm.cfg_.order = j.at("order").get<int>();
  lm.cfg_.alpha = j.at("alpha").get<double>();
  lm.cfg_.lambdas = j.at("lambdas").get<std::vector<double>>();
  lm.cfg_.validate();
  lm.lambdas_ = lm.cfg_.lambdas;
  lm.outcomes_ = j.at("vocabulary").get<std::vector<std::string>>();
  lm.index_outcomes();
  const auto &tables = j.at("counts");
  if (tables.size() != static_cast<std::size_t>(lm.cfg_.order)) {
    throw Error(ErrorKind::InvalidConfig, "count tables do not match LM order");
  }
  lm.tables_.assign(tables.size(), {});
  for (std::size_t k = 0; k < tables.size(); ++k) {
    for (const auto &[ctx, row] : tables[k].items()) {
      auto &cc = lm.tables_[k][ctx];
      for (const auto &[tok, c] : row.items()) {
        const double v = c.get<double>();
        cc.counts[lm.outcome_index_.at(tok)] = v;
        cc.total += v;
      }
    }
  }
  return lm;
}

}  // namespace relist
