#pragma once

// EM training of the relationship selector (phi) and the two continuer LMs
// (theta). Latent values are per-sentence relationship assignments.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relist/annotator.hpp"
#include "relist/continuer.hpp"
#include "relist/rng.hpp"
#include "relist/selector.hpp"
#include "relist/types.hpp"

namespace relist {

enum class EMode { Sample, Hard, Soft };

std::string_view to_string(EMode mode);
EMode parse_e_mode(std::string_view s);

struct EMConfig {
  std::size_t cycles = 3;
  std::size_t warmup = 1;
  EMode e_mode = EMode::Sample;
  std::uint64_t seed = 1;
  SelectorTrainConfig selector;
  LMConfig lm;
  // Initialization trains the Null LM on every sentence; EM refits use only
  // null-assigned sentences unless the second flag is set.
  bool null_lm_all_sentences_at_init = true;
  bool null_lm_all_sentences_in_em = false;
  // Keep the previous component when an M-step leaves it without data.
  bool allow_empty_m_step = true;
  std::size_t jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

// One story as seen by the trainer: text, the (silver) relationship set, and
// the silver sentence labels used for initialization.
struct TrainingStory {
  Story story;
  RelationshipSet relationships;
  LatentTrace labels;
};

std::vector<TrainingStory> training_stories(std::span<const AnnotatedStory> annotated);

struct ReListModel {
  SelectorModel selector;
  ContinuerLM relationship_lm;
  ContinuerLM null_lm;
  // Ablation continuers, present when trained.
  std::optional<ContinuerLM> single_lm;
  std::optional<ContinuerLM> flat_lm;
  EMConfig config;
};

inline constexpr std::string_view kModelFormat = "relist-model-v1";

nlohmann::json model_to_json(const ReListModel &model);
ReListModel model_from_json(const nlohmann::json &j);
// Deterministic serialization of the continuer parameters only.
std::string theta_fingerprint(const ReListModel &model);
void save_model(const ReListModel &model, const std::filesystem::path &path);
ReListModel load_model(const std::filesystem::path &path);

// Per story, per sentence: weights over {null, r^1..r^K}. One-hot for the
// Sample and Hard modes.
using Responsibilities = std::vector<std::vector<std::vector<double>>>;

Responsibilities silver_responsibilities(std::span<const TrainingStory> corpus);

ReListModel initialize(std::span<const TrainingStory> corpus, const EMConfig &cfg);

// Posterior over {null, r^1..r^K} for sentence x_i given the context.
std::vector<double> posterior(const ReListModel &model, const Sentence &sentence, const Context &context,
                              const RelationshipSet &relationships, std::span<const std::string> characters);

Responsibilities e_step(const ReListModel &model, std::span<const TrainingStory> corpus, EMode mode, Rng &rng,
                        std::size_t jobs = 1);

// Selector refit every cycle; continuers refit from scratch when
// cycle >= warmup.
ReListModel m_step(const ReListModel &model, std::span<const TrainingStory> corpus, const Responsibilities &resp,
                   std::size_t cycle, const EMConfig &cfg);

double corpus_log_likelihood(const ReListModel &model, std::span<const TrainingStory> corpus, std::size_t jobs = 1);

struct TrainReport {
  // Entry 0 is the initialized model; entry c+1 follows cycle c.
  std::vector<double> log_likelihood;
  // Sentences whose (argmax) assignment changed in each cycle; cycle 0 is
  // compared with the silver labels.
  std::vector<std::size_t> assignment_changes;
  ReListModel initial;
  ReListModel final_model;
  Responsibilities final_assignments;

  nlohmann::json to_json() const;
};

using CheckpointFn = std::function<void(std::size_t cycle, const ReListModel &)>;

TrainReport train(std::span<const TrainingStory> corpus, const EMConfig &cfg, const CheckpointFn &checkpoint = {});

// Ablation continuers: a single LM over all latents and a flat LM that
// ignores them. Trained from the given assignments.
ContinuerLM train_single_lm(std::span<const TrainingStory> corpus, const Responsibilities &resp, const LMConfig &cfg);
ContinuerLM train_flat_lm(std::span<const TrainingStory> corpus, const LMConfig &cfg);

}  // namespace relist
