#include "relist/em.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "relist/error.hpp"

namespace relist {

std::string_view to_string(EMode mode) {
  switch (mode) {
    case EMode::Sample: return "sample";
    case EMode::Hard: return "hard";
    case EMode::Soft: return "soft";
  }
  return "sample";
}

EMode parse_e_mode(std::string_view s) {
  if (s == "sample") return EMode::Sample;
  if (s == "hard") return EMode::Hard;
  if (s == "soft") return EMode::Soft;
  throw Error(ErrorKind::InvalidConfig, "unknown e_mode '" + std::string(s) + "'");
}

void EMConfig::validate() const {
  if (warmup > cycles) throw Error(ErrorKind::InvalidConfig, "warmup must not exceed the number of EM cycles");
  if (jobs == 0) throw Error(ErrorKind::InvalidConfig, "jobs must be >= 1");
  lm.validate();
}

nlohmann::json EMConfig::to_json() const {
  return nlohmann::json{{"cycles", cycles},
                        {"warmup", warmup},
                        {"e_mode", std::string(to_string(e_mode))},
                        {"seed", seed},
                        {"selector_steps", selector.steps},
                        {"selector_learning_rate", selector.learning_rate},
                        {"selector_l2", selector.l2},
                        {"selector_tolerance", selector.tolerance},
                        {"lm_order", lm.order},
                        {"lm_alpha", lm.alpha},
                        {"lm_lambdas", lm.resolved_lambdas()},
                        {"null_lm_all_sentences_at_init", null_lm_all_sentences_at_init},
                        {"null_lm_all_sentences_in_em", null_lm_all_sentences_in_em},
                        {"allow_empty_m_step", allow_empty_m_step}};
}

namespace {

EMConfig config_from_json(const nlohmann::json &j) {
  EMConfig c;
  c.cycles = j.at("cycles").get<std::size_t>();
  c.warmup = j.at("warmup").get<std::size_t>();
  c.e_mode = parse_e_mode(j.at("e_mode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.selector.steps = j.at("selector_steps").get<std::size_t>();
  c.selector.learning_rate = j.at("selector_learning_rate").get<double>();
  c.selector.l2 = j.at("selector_l2").get<double>();
  c.selector.tolerance = j.at("selector_tolerance").get<double>();
  c.lm.order = j.at("lm_order").get<int>();
  c.lm.alpha = j.at("lm_alpha").get<double>();
  c.lm.lambdas = j.at("lm_lambdas").get<std::vector<double>>();
  c.null_lm_all_sentences_at_init = j.at("null_lm_all_sentences_at_init").get<bool>();
  c.null_lm_all_sentences_in_em = j.at("null_lm_all_sentences_in_em").get<bool>();
  c.allow_empty_m_step = j.at("allow_empty_m_step").get<bool>();
  return c;
}

double log_sum_exp(std::span<const double> v) {
  double mx = -INFINITY;
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

Conditioning conditioning_for(const TrainingStory &ts, std::size_t i, LatentValue z) {
  return Conditioning{&ts.relationships, context_before(ts.story, i), z, ts.story.characters};
}

// Pseudo-sentence that teaches the Null LM where stories end.
const Sentence &end_of_story_sentence() {
  static const Sentence s{{std::string(kEosStory)}};
  return s;
}

// Unnormalized log joint log p_theta(x | z) + log p_phi(z) for every z.
std::vector<double> log_joint(const ReListModel &model, const Sentence &sentence, const Context &context,
                              const RelationshipSet &set, std::span<const std::string> characters) {
  auto lp = model.selector.log_probs(SelectorInput{&set, context});
  for (std::size_t j = 0; j < lp.size(); ++j) {
    const Conditioning cond{&set, context, LatentValue::from_index(j), characters};
    lp[j] += (j == 0 ? model.null_lm : model.relationship_lm).log_prob(sentence, cond);
  }
  return lp;
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn &&fn) {
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

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] > v[best]) best = j;
  }
  return best;
}

std::vector<SelectorExample> selector_examples(std::span<const TrainingStory> corpus, const Responsibilities &resp) {
  std::vector<SelectorExample> out;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto &ts = corpus[s];
    for (std::size_t i = 0; i < ts.story.num_sentences(); ++i) {
      out.push_back(SelectorExample{candidate_features(SelectorInput{&ts.relationships, context_before(ts.story, i)}),
                                    resp[s][i], 1.0});
    }
  }
  return out;
}

struct ContinuerData {
  std::vector<ContinuerExample> relationship;
  std::vector<ContinuerExample> null;
  double relationship_mass = 0.0;
  double null_mass = 0.0;
};

ContinuerData continuer_data(std::span<const TrainingStory> corpus, const Responsibilities &resp,
                             bool null_on_all_sentences) {
  ContinuerData d;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto &ts = corpus[s];
    for (std::size_t i = 0; i < ts.story.num_sentences(); ++i) {
      const auto &x = ts.story.sentences[i];
      const auto &w = resp[s][i];
      for (std::size_t j = 1; j < w.size(); ++j) {
        if (w[j] <= 0.0) continue;
        d.relationship.push_back({x, conditioning_for(ts, i, LatentValue::relationship(j)), w[j]});
        d.relationship_mass += w[j];
      }
      const double wn = null_on_all_sentences ? 1.0 : w[0];
      if (wn > 0.0) {
        d.null.push_back({x, conditioning_for(ts, i, LatentValue::null()), wn});
        d.null_mass += wn;
      }
    }
    d.null.push_back({end_of_story_sentence(), conditioning_for(ts, ts.story.num_sentences(), LatentValue::null()), 1.0});
  }
  return d;
}

}  // namespace

std::vector<TrainingStory> training_stories(std::span<const AnnotatedStory> annotated) {
  std::vector<TrainingStory> out;
  out.reserve(annotated.size());
  for (const auto &a : annotated) out.push_back({a.source.story, a.silver.relationships, a.silver.sentence_labels});
  return out;
}

nlohmann::json model_to_json(const ReListModel &model) {
  nlohmann::json j{{"format", kModelFormat},
                   {"config", model.config.to_json()},
                   {"selector", model.selector.to_json()},
                   {"relationship_lm", model.relationship_lm.to_json()},
                   {"null_lm", model.null_lm.to_json()}};
  if (model.single_lm) j["single_lm"] = model.single_lm->to_json();
  if (model.flat_lm) j["flat_lm"] = model.flat_lm->to_json();
  return j;
}

ReListModel model_from_json(const nlohmann::json &j) {
  if (j.at("format").get<std::string>() != kModelFormat) {
    throw Error(ErrorKind::InvalidConfig, "not a relist-model-v1 file");
  }
  ReListModel m{SelectorModel::from_json(j.at("selector")), ContinuerLM::from_json(j.at("relationship_lm")),
                ContinuerLM::from_json(j.at("null_lm")), std::nullopt, std::nullopt, config_from_json(j.at("config"))};
  if (j.contains("single_lm")) m.single_lm = ContinuerLM::from_json(j.at("single_lm"));
  if (j.contains("flat_lm")) m.flat_lm = ContinuerLM::from_json(j.at("flat_lm"));
  return m;
}

std::string theta_fingerprint(const ReListModel &model) {
  return nlohmann::json{{"relationship_lm", model.relationship_lm.to_json()}, {"null_lm", model.null_lm.to_json()}}
      .dump();
}

void save_model(const ReListModel &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << model_to_json(model).dump() << '\n';
}

ReListModel load_model(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(1, e.what());
  }
}

Responsibilities silver_responsibilities(std::span<const TrainingStory> corpus) {
  Responsibilities r(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto &ts = corpus[s];
    ts.labels.check(ts.story, ts.relationships);
    for (LatentValue z : ts.labels.assignments) {
      std::vector<double> w(ts.relationships.num_latent_values(), 0.0);
      w[z.index()] = 1.0;
      r[s].push_back(std::move(w));
    }
  }
  return r;
}

ReListModel initialize(std::span<const TrainingStory> corpus, const EMConfig &cfg) {
  cfg.validate();
  const auto resp = silver_responsibilities(corpus);
  auto data = continuer_data(corpus, resp, cfg.null_lm_all_sentences_at_init);
  if (data.relationship.empty()) {
    throw Error(ErrorKind::EmptyTrainingSet, "no sentence carries a relationship label; cannot train the Relationship LM");
  }
  auto rel = ContinuerLM::train(ContinuerKind::Relationship, data.relationship, cfg.lm);
  auto null = ContinuerLM::train(ContinuerKind::Null, data.null, cfg.lm);
  const auto examples = selector_examples(corpus, resp);
  auto sel = selector_train(SelectorModel{}, examples, cfg.selector).model;
  return ReListModel{std::move(sel), std::move(rel), std::move(null), std::nullopt, std::nullopt, cfg};
}

std::vector<double> posterior(const ReListModel &model, const Sentence &sentence, const Context &context,
                              const RelationshipSet &relationships, std::span<const std::string> characters) {
  auto lj = log_joint(model, sentence, context, relationships, characters);
  const double norm = log_sum_exp(lj);
  for (double &v : lj) v = std::exp(v - norm);
  return lj;
}

Responsibilities e_step(const ReListModel &model, std::span<const TrainingStory> corpus, EMode mode, Rng &rng,
                        std::size_t jobs) {
  Responsibilities post(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t s) {
    const auto &ts = corpus[s];
    for (std::size_t i = 0; i < ts.story.num_sentences(); ++i) {
      post[s].push_back(posterior(model, ts.story.sentences[i], context_before(ts.story, i), ts.relationships,
                                  ts.story.characters));
    }
  });
  if (mode == EMode::Soft) return post;
  // Draws happen sequentially in corpus order so one seed fixes every draw.
  for (auto &story : post) {
    for (auto &w : story) {
      const std::size_t z = mode == EMode::Hard ? argmax_lowest(w) : rng.categorical(w);
      std::fill(w.begin(), w.end(), 0.0);
      w[z] = 1.0;
    }
  }
  return post;
}

ReListModel m_step(const ReListModel &model, std::span<const TrainingStory> corpus, const Responsibilities &resp,
                   std::size_t cycle, const EMConfig &cfg) {
  if (resp.size() != corpus.size()) throw Error(ErrorKind::AlignmentError, "assignments do not cover the corpus");
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (resp[s].size() != corpus[s].story.num_sentences()) {
      throw Error(ErrorKind::AlignmentError, "missing assignments for story " + std::to_string(s));
    }
  }
  ReListModel next = model;
  const auto examples = selector_examples(corpus, resp);
  next.selector = selector_train(model.selector, examples, cfg.selector).model;
  if (cycle < cfg.warmup) return next;

  auto data = continuer_data(corpus, resp, cfg.null_lm_all_sentences_in_em);
  const auto where = " (EM cycle " + std::to_string(cycle) + ")";
  if (data.relationship_mass > 0.0) {
    next.relationship_lm = ContinuerLM::train(ContinuerKind::Relationship, data.relationship, cfg.lm);
  } else if (!cfg.allow_empty_m_step) {
    throw Error(ErrorKind::EmptyTrainingSet, "Relationship LM received no sentences" + where);
  }
  if (data.null_mass > 0.0) {
    next.null_lm = ContinuerLM::train(ContinuerKind::Null, data.null, cfg.lm);
  } else if (!cfg.allow_empty_m_step) {
    throw Error(ErrorKind::EmptyTrainingSet, "Null LM received no sentences" + where);
  }
  return next;
}

double corpus_log_likelihood(const ReListModel &model, std::span<const TrainingStory> corpus, std::size_t jobs) {
  std::vector<double> per_story(corpus.size(), 0.0);
  parallel_for(corpus.size(), jobs, [&](std::size_t s) {
    const auto &ts = corpus[s];
    double ll = 0.0;
    for (std::size_t i = 0; i < ts.story.num_sentences(); ++i) {
      ll += log_sum_exp(
          log_joint(model, ts.story.sentences[i], context_before(ts.story, i), ts.relationships, ts.story.characters));
    }
    per_story[s] = ll;
  });
  double total = 0.0;
  for (double v : per_story) total += v;
  return total;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json cycles = nlohmann::json::array();
  for (std::size_t c = 0; c < log_likelihood.size(); ++c) {
    nlohmann::json row{{"cycle", c == 0 ? std::string("init") : std::to_string(c - 1)},
                       {"log_likelihood", log_likelihood[c]}};
    if (c > 0) row["assignment_changes"] = assignment_changes[c - 1];
    cycles.push_back(std::move(row));
  }
  return nlohmann::json{{"format", "relist-train-report-v1"}, {"config", final_model.config.to_json()},
                        {"cycles", std::move(cycles)}};
}

TrainReport train(std::span<const TrainingStory> corpus, const EMConfig &cfg, const CheckpointFn &checkpoint) {
  cfg.validate();
  if (corpus.empty()) throw Error(ErrorKind::EmptyTrainingSet, "training corpus is empty");
  ReListModel model = initialize(corpus, cfg);
  TrainReport report{{corpus_log_likelihood(model, corpus, cfg.jobs)}, {}, model, model, {}};
  Responsibilities previous = silver_responsibilities(corpus);
  Rng rng(cfg.seed);
  for (std::size_t cycle = 0; cycle < cfg.cycles; ++cycle) {
    Responsibilities resp = e_step(model, corpus, cfg.e_mode, rng, cfg.jobs);
    std::size_t changes = 0;
    for (std::size_t s = 0; s < resp.size(); ++s) {
      for (std::size_t i = 0; i < resp[s].size(); ++i) {
        changes += argmax_lowest(resp[s][i]) != argmax_lowest(previous[s][i]);
      }
    }
    try {
      model = m_step(model, corpus, resp, cycle, cfg);
    } catch (const Error &e) {
      throw Error(e.kind(), "EM cycle " + std::to_string(cycle) + ": " + e.what());
    }
    report.assignment_changes.push_back(changes);
    report.log_likelihood.push_back(corpus_log_likelihood(model, corpus, cfg.jobs));
    if (checkpoint) checkpoint(cycle, model);
    previous = std::move(resp);
  }
  report.final_model = std::move(model);
  report.final_assignments = std::move(previous);
  return report;
}

ContinuerLM train_single_lm(std::span<const TrainingStory> corpus, const Responsibilities &resp, const LMConfig &cfg) {
  std::vector<ContinuerExample> data;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto &ts = corpus[s];
    for (std::size_t i = 0; i < ts.story.num_sentences(); ++i) {
      const auto &w = resp[s][i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j] > 0.0) data.push_back({ts.story.sentences[i], conditioning_for(ts, i, LatentValue::from_index(j)), w[j]});
      }
    }
    data.push_back({end_of_story_sentence(), conditioning_for(ts, ts.story.num_sentences(), LatentValue::null()), 1.0});
  }
  return ContinuerLM::train(ContinuerKind::Single, data, cfg);
}

ContinuerLM train_flat_lm(std::span<const TrainingStory> corpus, const LMConfig &cfg) {
  std::vector<ContinuerExample> data;
  for (const auto &ts : corpus) {
    for (std::size_t i = 0; i < ts.story.num_sentences(); ++i) {
      data.push_back({ts.story.sentences[i], conditioning_for(ts, i, LatentValue::null()), 1.0});
    }
    data.push_back({end_of_story_sentence(), conditioning_for(ts, ts.story.num_sentences(), LatentValue::null()), 1.0});
  }
  return ContinuerLM::train(ContinuerKind::Flat, data, cfg);
}

}  // namespace relist
