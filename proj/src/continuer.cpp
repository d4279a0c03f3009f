#include "relist/continuer.hpp"

#include <algorithm>

#include "relist/error.hpp"

namespace relist {

Delexicalized delexicalize(const Sentence &sentence, std::span<const std::string> leading,
                           std::span<const std::string> inventory) {
  Delexicalized out;
  out.names.assign(leading.begin(), leading.end());
  out.sentence.tokens.reserve(sentence.size());
  for (const auto &tok : sentence.tokens) {
    auto it = std::find(out.names.begin(), out.names.end(), tok);
    if (it != out.names.end()) {
      out.sentence.tokens.push_back(char_placeholder(static_cast<std::size_t>(it - out.names.begin()) + 1));
    } else if (std::find(inventory.begin(), inventory.end(), tok) != inventory.end()) {
      out.names.push_back(tok);
      out.sentence.tokens.push_back(char_placeholder(out.names.size()));
    } else {
      out.sentence.tokens.push_back(tok);
    }
  }
  return out;
}

Sentence relexicalize(const Sentence &sentence, std::span<const std::string> names) {
  Sentence out;
  out.tokens.reserve(sentence.size());
  for (const auto &tok : sentence.tokens) {
    const std::size_t k = placeholder_index(tok);
    out.tokens.push_back(k >= 1 && k <= names.size() ? names[k - 1] : tok);
  }
  return out;
}

std::vector<std::string> pair_slot_order(const Sentence &sentence, const CharacterPair &pair) {
  for (const auto &tok : sentence.tokens) {
    if (tok == pair.first()) return {pair.first(), pair.second()};
    if (tok == pair.second()) return {pair.second(), pair.first()};
  }
  return {pair.first(), pair.second()};
}

std::string serialize_conditioning(const Conditioning &cond, bool relationship_form) {
  std::string r;
  if (cond.relationships) {
    for (const auto &t : cond.relationships->triples()) {
      if (!r.empty()) r += " , ";
      r += to_string(t);
    }
  }
  std::string c;
  if (cond.context.prompt) c = cond.context.prompt->text();
  for (const auto &s : cond.context.previous) {
    if (!c.empty()) c += ' ';
    c += s.text();
  }
  if (!relationship_form) return r + " " + std::string(kSep) + " " + c;
  std::string z = "<null>";
  if (!cond.latent.is_null() && cond.relationships) z = to_string(cond.relationships->at(cond.latent));
  return r + " " + std::string(kAt) + " " + c + " " + std::string(kAt) + " " + z + " " + std::string(kSep);
}

std::string_view to_string(ContinuerKind kind) {
  switch (kind) {
    case ContinuerKind::Relationship: return "relationship";
    case ContinuerKind::Null: return "null";
    case ContinuerKind::Single: return "single";
    case ContinuerKind::Flat: return "flat";
  }
  return "null";
}

namespace {

ContinuerKind parse_kind(std::string_view s) {
  for (auto k : {ContinuerKind::Relationship, ContinuerKind::Null, ContinuerKind::Single, ContinuerKind::Flat}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown continuer kind '" + std::string(s) + "'");
}

bool uses_pair(ContinuerKind kind, const Conditioning &cond) {
  return (kind == ContinuerKind::Relationship || kind == ContinuerKind::Single) && !cond.latent.is_null() &&
         cond.relationships != nullptr;
}

}  // namespace

std::vector<std::string> ContinuerLM::encode_prefix(ContinuerKind kind, const Conditioning &cond) {
  switch (kind) {
    case ContinuerKind::Relationship:
      if (cond.latent.is_null() || !cond.relationships) {
        throw Error(ErrorKind::InvalidConfig, "relationship LM needs a non-null latent");
      }
      return {polarity_token(cond.relationships->at(cond.latent).polarity)};
    case ContinuerKind::Null:
      return {};
    case ContinuerKind::Single:
      if (uses_pair(kind, cond)) return {polarity_token(cond.relationships->at(cond.latent).polarity)};
      return {std::string(kNullTag)};
    case ContinuerKind::Flat: {
      // Only the last order-1 tokens reach an n-gram; the serialization ends
      // with a fixed separator so that tail is the same for every story.
      std::vector<std::string> prefix;
      if (cond.relationships) {
        for (const auto &t : cond.relationships->triples()) {
          for (auto &tok : Sentence::from_text(to_string(t)).tokens) prefix.push_back(std::move(tok));
        }
      }
      prefix.emplace_back(kSep);
      if (cond.context.prompt) {
        prefix.insert(prefix.end(), cond.context.prompt->tokens.begin(), cond.context.prompt->tokens.end());
      }
      prefix.emplace_back(kSep);
      return prefix;
    }
  }
  return {};
}

EncodedSentence ContinuerLM::encode(ContinuerKind kind, const Sentence &sentence, const Conditioning &cond) {
  EncodedSentence out;
  out.prefix = encode_prefix(kind, cond);
  if (uses_pair(kind, cond)) {
    const auto leading = pair_slot_order(sentence, cond.relationships->at(cond.latent).pair);
    out.body = delexicalize(sentence, leading, cond.characters);
  } else {
    out.body = delexicalize(sentence, {}, cond.characters);
  }
  return out;
}

ContinuerLM ContinuerLM::train(ContinuerKind kind, std::span<const ContinuerExample> examples, const LMConfig &cfg) {
  std::vector<WeightedSequence> data;
  data.reserve(examples.size());
  double mass = 0.0;
  for (const auto &ex : examples) {
    auto enc = encode(kind, ex.sentence, ex.cond);
    data.push_back(WeightedSequence{std::move(enc.prefix), std::move(enc.body.sentence.tokens), ex.weight});
    mass += ex.weight;
  }
  if (data.empty() || !(mass > 0.0)) {
    throw Error(ErrorKind::EmptyTrainingSet, std::string(to_string(kind)) + " LM has no weighted training sentences");
  }
  return ContinuerLM(kind, NGramLM::train(data, cfg));
}

double ContinuerLM::log_prob(const Sentence &sentence, const Conditioning &cond) const {
  const auto enc = encode(kind_, sentence, cond);
  return lm_.log_prob(enc.prefix, enc.body.sentence.tokens);
}

SampleResult ContinuerLM::sample(const Conditioning &cond, Rng &rng, std::size_t max_tokens) const {
  const auto prefix = encode_prefix(kind_, cond);
  return lm_.sample(prefix, rng, max_tokens);
}

nlohmann::json ContinuerLM::to_json() const {
  return nlohmann::json{{"kind", std::string(to_string(kind_))}, {"lm", lm_.to_json()}};
}

ContinuerLM ContinuerLM::from_json(const nlohmann::json &j) {
  return ContinuerLM(parse_kind(j.at("kind").get<std::string>()), NGramLM::from_json(j.at("lm")));
}

}  // namespace relist
