#include "relist/generator.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <thread>

#include "json_util.hpp"
#include "relist/annotator.hpp"
#include "relist/error.hpp"
#include "relist/rng.hpp"

namespace relist {

std::string_view to_string(GenerationMode mode) {
  switch (mode) {
    case GenerationMode::ReList: return "relist";
    case GenerationMode::RandSelect: return "randselect";
    case GenerationMode::SingleLM: return "singlelm";
    case GenerationMode::FlatBaseline: return "flat";
  }
  return "relist";
}

GenerationMode parse_generation_mode(std::string_view s) {
  for (auto m : {GenerationMode::ReList, GenerationMode::RandSelect, GenerationMode::SingleLM,
                 GenerationMode::FlatBaseline}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown generation mode '" + std::string(s) + "'");
}

std::string_view to_string(Termination t) { return t == Termination::EosStory ? "eos_story" : "max_sentences"; }

namespace {

constexpr int kEmptySentenceRetries = 8;

Termination parse_termination(std::string_view s) {
  if (s == "eos_story") return Termination::EosStory;
  if (s == "max_sentences") return Termination::MaxSentences;
  throw ParseError(0, "unknown termination '" + std::string(s) + "'");
}

const ContinuerLM &continuer_for(const ReListModel &model, GenerationMode mode, LatentValue z) {
  switch (mode) {
    case GenerationMode::SingleLM:
      if (!model.single_lm) throw Error(ErrorKind::InvalidConfig, "model has no single LM for the SingleLM mode");
      return *model.single_lm;
    case GenerationMode::FlatBaseline:
      if (!model.flat_lm) throw Error(ErrorKind::InvalidConfig, "model has no flat LM for the FlatBaseline mode");
      return *model.flat_lm;
    default:
      return z.is_null() ? model.null_lm : model.relationship_lm;
  }
}

bool has_end_of_story(const std::vector<std::string> &tokens) {
  return std::find(tokens.begin(), tokens.end(), kEosStory) != tokens.end();
}

// Names for <CHAR1>, <CHAR2>, ...: the latent pair (random orientation)
// first, then the remaining characters in random order.
std::vector<std::string> placeholder_names(const RelationshipSet &set, LatentValue z,
                                           std::span<const std::string> characters, Rng &rng) {
  std::vector<std::string> names;
  if (!z.is_null()) {
    const auto &pair = set.at(z).pair;
    if (rng.bernoulli(0.5)) {
      names = {pair.first(), pair.second()};
    } else {
      names = {pair.second(), pair.first()};
    }
  }
  std::vector<std::string> rest;
  for (const auto &c : characters) {
    if (std::find(names.begin(), names.end(), c) == names.end()) rest.push_back(c);
  }
  rng.shuffle(std::span<std::string>(rest));
  names.insert(names.end(), rest.begin(), rest.end());
  return names;
}

}  // namespace

GeneratedStory generate_mode_variants(const ReListModel &model, const GenerationRequest &request) {
  if (request.max_sentences < 1) throw Error(ErrorKind::InvalidConfig, "max_sentences must be >= 1");
  if (request.max_tokens < 1) throw Error(ErrorKind::InvalidConfig, "max_tokens must be >= 1");
  const RelationshipSet &set = request.relationships;
  std::vector<std::string> characters =
      request.characters.empty() ? set.characters() : request.characters;
  for (const auto &c : characters) {
    if (is_reserved_token(c) || c.empty()) {
      throw Error(ErrorKind::IncompatibleVocabulary, "character name '" + c + "' collides with a reserved token");
    }
  }
  for (const auto &name : set.characters()) {
    if (is_reserved_token(name)) {
      throw Error(ErrorKind::IncompatibleVocabulary, "character name '" + name + "' collides with a reserved token");
    }
    if (std::find(characters.begin(), characters.end(), name) == characters.end()) characters.push_back(name);
  }

  Rng rng(request.seed);
  GeneratedStory out;
  out.story.prompt = request.prompt;
  out.story.characters = characters;
  const std::size_t k = set.size();

  for (std::size_t i = 0; i < request.max_sentences; ++i) {
    const Context ctx = context_before(out.story, i);
    LatentValue z = LatentValue::null();
    switch (request.mode) {
      case GenerationMode::ReList:
      case GenerationMode::SingleLM:
        z = LatentValue::from_index(rng.categorical_log(model.selector.log_probs(SelectorInput{&set, ctx})));
        break;
      case GenerationMode::RandSelect:
        z = LatentValue::from_index(rng.below(k + 1));
        break;
      case GenerationMode::FlatBaseline:
        break;
    }
    const ContinuerLM &lm = continuer_for(model, request.mode, z);
    const Conditioning cond{&set, ctx, z, characters};

    SampleResult sampled;
    bool ended = false;
    for (int attempt = 0; attempt < kEmptySentenceRetries; ++attempt) {
      sampled = lm.sample(cond, rng, request.max_tokens);
      if (has_end_of_story(sampled.tokens)) {
        // A story keeps at least one sentence.
        if (i > 0) {
          ended = true;
          break;
        }
        sampled.tokens.clear();
        continue;
      }
      if (!sampled.tokens.empty()) break;
    }
    if (ended) {
      out.termination = Termination::EosStory;
      return out;
    }
    if (sampled.tokens.empty()) sampled.tokens = {"."};
    out.truncated_sentences += sampled.truncated;
    const auto names = placeholder_names(set, z, characters, rng);
    out.story.sentences.push_back(relexicalize(Sentence{std::move(sampled.tokens)}, names));
    out.trace.assignments.push_back(z);
  }
  out.termination = Termination::MaxSentences;
  return out;
}

GeneratedStory generate(const ReListModel &model, const GenerationRequest &request) {
  GenerationRequest r = request;
  r.mode = GenerationMode::ReList;
  return generate_mode_variants(model, r);
}

std::vector<GeneratedStory> generate_batch(const ReListModel &model, std::span<const GenerationRequest> requests,
                                           std::uint64_t batch_seed, std::size_t parallelism) {
  std::vector<std::optional<GeneratedStory>> results(requests.size());
  std::vector<std::string> errors(requests.size());
  auto run = [&](std::size_t i) {
    GenerationRequest r = requests[i];
    r.seed = derive_seed(batch_seed, i);
    try {
      results[i] = generate_mode_variants(model, r);
    } catch (const std::exception &e) {
      errors[i] = e.what();
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(parallelism, requests.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) run(i);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < requests.size(); i += jobs) run(i);
      });
    }
    for (auto &t : workers) t.join();
  }
  std::string message;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) message += "[" + std::to_string(i) + "] " + errors[i] + "; ";
  }
  if (!message.empty()) throw Error(ErrorKind::BatchError, message);
  std::vector<GeneratedStory> out;
  out.reserve(results.size());
  for (auto &r : results) out.push_back(std::move(*r));
  return out;
}

void write_generated(std::ostream &out, std::span<const GeneratedStory> stories,
                     std::span<const RelationshipSet> inputs, const SentimentLexicon &lexicon) {
  if (stories.size() != inputs.size()) throw Error(ErrorKind::AlignmentError, "one input set per story required");
  out << detail::json{{"format", kCorpusFormat}}.dump() << '\n';
  for (std::size_t i = 0; i < stories.size(); ++i) {
    const auto &g = stories[i];
    std::vector<AnalyzedSentence> analyzed;
    for (const auto &s : g.story.sentences) analyzed.push_back(analyze_sentence(s, g.story.characters, lexicon));
    auto j = detail::gold_story_to_json(GoldStory{g.story, inputs[i], g.trace, std::move(analyzed)});
    j["trace"] = detail::trace_to_json(g.trace);
    j["termination"] = std::string(to_string(g.termination));
    j["truncated_sentences"] = g.truncated_sentences;
    out << j.dump() << '\n';
  }
}

void save_generated(std::span<const GeneratedStory> stories, std::span<const RelationshipSet> inputs,
                    const SentimentLexicon &lexicon, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_generated(out, stories, inputs, lexicon);
}

std::vector<GeneratedRecord> load_generated(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<GeneratedRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = detail::json::parse(line);
      if (line_no == 1) {
        if (j.value("format", "") != kCorpusFormat) throw ParseError(line_no, "missing relist-corpus-v1 header");
        continue;
      }
      GoldStory g = detail::gold_story_from_json(j);
      GeneratedStory gen{std::move(g.story), detail::trace_from_json(j.at("trace")),
                         parse_termination(j.at("termination").get<std::string>()),
                         j.value("truncated_sentences", std::size_t{0})};
      out.push_back(GeneratedRecord{std::move(gen), std::move(g.gold_relationships)});
    } catch (const ParseError &e) {
      throw ParseError(line_no, e.reason());
    } catch (const std::exception &e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace relist
