#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <variant>

#include "relist/error.hpp"
#include "relist/pipeline.hpp"

namespace relist {

namespace {

struct Value {
  std::variant<std::string, bool, double, std::vector<double>> v;
  std::string raw;
  std::size_t line = 0;
};

[[noreturn]] void config_error(std::size_t line, const std::string &msg) {
  throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing # comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

double parse_number(std::string_view s, std::size_t line) {
  s = trim(s);
  const std::string text(s);
  char *end = nullptr;
  const double d = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) config_error(line, "expected a number, got '" + text + "'");
  return d;
}

Value parse_value(std::string_view s, std::size_t line) {
  Value out;
  out.raw = std::string(s);
  out.line = line;
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    out.v = std::string(s.substr(1, s.size() - 2));
  } else if (s == "true" || s == "false") {
    out.v = s == "true";
  } else if (s.size() >= 2 && s.front() == '[' && s.back() == ']') {
    std::vector<double> items;
    auto body = trim(s.substr(1, s.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      items.push_back(parse_number(body.substr(0, comma), line));
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    out.v = std::move(items);
  } else {
    out.v = parse_number(s, line);
  }
  return out;
}

std::map<std::string, Value> parse_entries(std::string_view text) {
  std::map<std::string, Value> entries;
  std::string table;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') config_error(line_no, "unterminated table header");
      table = std::string(trim(s.substr(1, s.size() - 2)));
      if (table.empty()) config_error(line_no, "empty table name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) config_error(line_no, "expected key = value");
    const auto key = trim(s.substr(0, eq));
    if (key.empty()) config_error(line_no, "empty key");
    const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
    if (entries.count(full)) config_error(line_no, "duplicate key '" + full + "'");
    entries.emplace(full, parse_value(trim(s.substr(eq + 1)), line_no));
  }
  return entries;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Value> entries) : entries_(std::move(entries)) {}

  void number(const std::string &key, double &out) {
    if (const auto *v = take(key)) out = as_number(key, *v);
  }

  template <typename Int>
  void integer(const std::string &key, Int &out) {
    const auto *v = take(key);
    if (!v) return;
    Int parsed{};
    const auto text = trim(v->raw);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      config_error(v->line, "'" + key + "' must be a non-negative integer");
    }
    out = parsed;
  }

  void boolean(const std::string &key, bool &out) {
    const auto *v = take(key);
    if (!v) return;
    if (!std::holds_alternative<bool>(v->v)) config_error(v->line, "'" + key + "' must be true or false");
    out = std::get<bool>(v->v);
  }

  void string(const std::string &key, std::string &out) {
    const auto *v = take(key);
    if (!v) return;
    if (!std::holds_alternative<std::string>(v->v)) config_error(v->line, "'" + key + "' must be a string");
    out = std::get<std::string>(v->v);
  }

  void array(const std::string &key, std::vector<double> &out, std::size_t expected = 0) {
    const auto *v = take(key);
    if (!v) return;
    if (!std::holds_alternative<std::vector<double>>(v->v)) config_error(v->line, "'" + key + "' must be an array");
    out = std::get<std::vector<double>>(v->v);
    if (expected && out.size() != expected) {
      config_error(v->line, "'" + key + "' must have " + std::to_string(expected) + " elements");
    }
  }

  void range(const std::string &key, IntRange &out) {
    std::vector<double> v;
    array(key, v, 2);
    if (v.empty()) return;
    out.min = static_cast<int>(v[0]);
    out.max = static_cast<int>(v[1]);
    if (out.min != v[0] || out.max != v[1]) throw Error(ErrorKind::InvalidConfig, "'" + key + "' must hold integers");
  }

  void finish() const {
    if (!entries_.empty()) {
      const auto &[key, v] = *entries_.begin();
      config_error(v.line, "unknown key '" + key + "'");
    }
  }

 private:
  const Value *take(const std::string &key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    taken_ = it->second;
    entries_.erase(it);
    return &taken_;
  }

  static double as_number(const std::string &key, const Value &v) {
    if (!std::holds_alternative<double>(v.v)) config_error(v.line, "'" + key + "' must be a number");
    return std::get<double>(v.v);
  }

  std::map<std::string, Value> entries_;
  Value taken_;
};

}  // namespace

void ExperimentConfig::validate() const {
  synth.validate();
  em.validate();
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "split_fraction must lie in (0, 1)");
  }
  if (generation.max_sentences < 1 || generation.max_tokens < 1 || generation.samples_per_input < 1) {
    throw Error(ErrorKind::InvalidConfig, "generation limits must be >= 1");
  }
  if (eval.n_max < 1) throw Error(ErrorKind::InvalidConfig, "eval.n_max must be >= 1");
  if (jobs < 1) throw Error(ErrorKind::InvalidConfig, "jobs must be >= 1");
  if (output_dir.empty()) throw Error(ErrorKind::InvalidConfig, "output_dir must not be empty");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  Reader r(parse_entries(text));
  r.integer("seed", cfg.seed);
  r.string("lexicon", cfg.lexicon_path);
  r.number("split_fraction", cfg.split_fraction);
  std::string out_dir = cfg.output_dir.string();
  r.string("output_dir", out_dir);
  cfg.output_dir = out_dir;
  r.integer("jobs", cfg.jobs);

  r.integer("synth.num_stories", cfg.synth.num_stories);
  r.range("synth.characters", cfg.synth.characters_per_story);
  r.range("synth.sentences", cfg.synth.sentences_per_story);
  r.range("synth.relationships", cfg.synth.relationships_per_story);
  std::vector<double> mix;
  r.array("synth.polarity_mix", mix, kNumPolarities);
  for (std::size_t i = 0; i < mix.size(); ++i) cfg.synth.polarity_mix[i] = mix[i];
  r.number("synth.null_sentence_rate", cfg.synth.null_sentence_rate);

  r.integer("em.cycles", cfg.em.cycles);
  r.integer("em.warmup", cfg.em.warmup);
  std::string e_mode(to_string(cfg.em.e_mode));
  r.string("em.e_mode", e_mode);
  cfg.em.e_mode = parse_e_mode(e_mode);
  r.boolean("em.null_lm_all_sentences_at_init", cfg.em.null_lm_all_sentences_at_init);
  r.boolean("em.null_lm_all_sentences_in_em", cfg.em.null_lm_all_sentences_in_em);
  r.boolean("em.allow_empty_m_step", cfg.em.allow_empty_m_step);

  r.integer("selector.steps", cfg.em.selector.steps);
  r.number("selector.learning_rate", cfg.em.selector.learning_rate);
  r.number("selector.l2", cfg.em.selector.l2);
  r.number("selector.tolerance", cfg.em.selector.tolerance);

  r.integer("lm.order", cfg.em.lm.order);
  r.number("lm.alpha", cfg.em.lm.alpha);
  r.array("lm.lambdas", cfg.em.lm.lambdas);

  r.integer("generation.max_sentences", cfg.generation.max_sentences);
  r.integer("generation.max_tokens", cfg.generation.max_tokens);
  r.integer("generation.samples_per_input", cfg.generation.samples_per_input);

  r.integer("eval.top_k", cfg.eval.top_k);
  r.integer("eval.n_max", cfg.eval.n_max);
  r.boolean("eval.pooled_distinct", cfg.eval.pooled_distinct);
  r.integer("eval.pcls_steps", cfg.eval.pcls.steps);
  r.number("eval.pcls_learning_rate", cfg.eval.pcls.learning_rate);
  r.number("eval.pcls_l2", cfg.eval.pcls.l2);
  r.finish();

  cfg.eval.polarity_mix = cfg.synth.polarity_mix;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void apply_environment(ExperimentConfig &cfg) {
  const char *env = std::getenv("RELIST_SEED");
  if (!env || !*env) return;
  const std::string_view s(env);
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::InvalidConfig, "RELIST_SEED must be an unsigned integer");
  }
  cfg.seed = seed;
}

}  // namespace relist
