#include "relist/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "relist/error.hpp"

namespace relist {

namespace detail {
extern const std::string_view kDefaultLexiconText;
}

Polarity valence_class(double v) {
  if (v > 0.0) return Polarity::Positive;
  if (v < 0.0) return Polarity::Negative;
  return Polarity::Neutral;
}

void SentimentLexicon::add(std::string token, double valence, bool is_verb) {
  if (!std::isfinite(valence)) throw Error(ErrorKind::InvalidConfig, "non-finite valence for '" + token + "'");
  if (token.empty()) throw Error(ErrorKind::InvalidConfig, "empty lexicon token");
  auto [it, inserted] = valences_.insert_or_assign(token, valence);
  (void)it;
  if (inserted) order_.push_back(token);
  if (is_verb) {
    verbs_[token] = true;
    auto &cls = verbs_by_class_[static_cast<std::size_t>(valence_class(valence))];
    if (std::find(cls.begin(), cls.end(), token) == cls.end()) cls.push_back(token);
  }
}

SentimentLexicon SentimentLexicon::parse(std::istream &in) {
  SentimentLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2 || fields.size() > 3) throw ParseError(line_no, "expected token<TAB>valence[<TAB>verb]");
    if (fields[0].empty() || fields[0].find(' ') != std::string::npos) throw ParseError(line_no, "bad token");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception &) {
      throw ParseError(line_no, "bad valence '" + fields[1] + "'");
    }
    if (!std::isfinite(v)) throw ParseError(line_no, "non-finite valence");
    bool verb = false;
    if (fields.size() == 3) {
      if (fields[2] != "verb") throw ParseError(line_no, "unknown tag '" + fields[2] + "'");
      verb = true;
    }
    lex.add(fields[0], v, verb);
  }
  return lex;
}

SentimentLexicon SentimentLexicon::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open lexicon " + path.string());
  return parse(in);
}

double SentimentLexicon::valence(std::string_view token) const {
  auto it = valences_.find(token);
  return it == valences_.end() ? 0.0 : it->second;
}

bool SentimentLexicon::contains(std::string_view token) const { return valences_.find(token) != valences_.end(); }

bool SentimentLexicon::is_verb(std::string_view token) const { return verbs_.find(token) != verbs_.end(); }

std::string SentimentLexicon::serialize() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto &tok : order_) {
    out << tok << '\t' << valences_.find(tok)->second;
    if (is_verb(tok)) out << "\tverb";
    out << '\n';
  }
  return out.str();
}

std::string_view default_lexicon_text() { return detail::kDefaultLexiconText; }

const SentimentLexicon &default_lexicon() {
  static const SentimentLexicon lex = [] {
    std::istringstream in{std::string(default_lexicon_text())};
    return SentimentLexicon::parse(in);
  }();
  return lex;
}

}  // namespace relist
