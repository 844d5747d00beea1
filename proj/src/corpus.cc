#include "bagtag/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bagtag/errors.h"
#include "bagtag/random.h"

namespace bagtag {

LabelSet::LabelSet(const std::vector<std::string>& names, std::string_view outside) {
  for (const auto& name : names) intern(name);
  set_outside(outside);
}

LabelId LabelSet::intern(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<LabelId>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

std::optional<LabelId> LabelSet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelId LabelSet::at(std::string_view name) const {
  auto id = find(name);
  if (!id) throw ConfigError("unknown label '" + std::string(name) + "'");
  return *id;
}

void LabelSet::set_outside(std::string_view name) { outside_ = intern(name); }

bool Sentence::labeled() const {
  return std::all_of(tokens.begin(), tokens.end(),
                     [](const Token& t) { return t.gold.has_value(); });
}

std::vector<LabelId> Sentence::gold_labels() const {
  std::vector<LabelId> labels;
  labels.reserve(tokens.size());
  for (const auto& token : tokens) {
    if (!token.gold) throw std::invalid_argument("sentence " + id + " is not labeled");
    labels.push_back(*token.gold);
  }
  return labels;
}

std::size_t Corpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

namespace {

Field field_from_name(std::string_view name) {
  if (name == "surface" || name == "word") return Field::kSurface;
  if (name == "lemma") return Field::kLemma;
  if (name == "pos") return Field::kPos;
  if (name == "ne" || name == "ne_tag") return Field::kNeTag;
  if (name == "gold" || name == "label") return Field::kGold;
  if (name == "_" || name == "ignore") return Field::kIgnore;
  throw ConfigError("unknown column field '" + std::string(name) + "'");
}

std::string_view field_name(Field field) {
  switch (field) {
    case Field::kSurface: return "surface";
    case Field::kLemma: return "lemma";
    case Field::kPos: return "pos";
    case Field::kNeTag: return "ne";
    case Field::kGold: return "gold";
    case Field::kIgnore: return "_";
  }
  return "_";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    cols.push_back(line.substr(i, j - i));
    i = j;
  }
  return cols;
}

}  // namespace

ColumnMap ColumnMap::parse(std::string_view spec, std::string_view outside) {
  ColumnMap map;
  map.columns.clear();
  map.outside = std::string(outside);
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto comma = spec.find(',', start);
    if (comma == std::string_view::npos) comma = spec.size();
    auto name = trim(spec.substr(start, comma - start));
    if (name.empty()) throw ConfigError("empty column name in '" + std::string(spec) + "'");
    map.columns.push_back(field_from_name(name));
    start = comma + 1;
  }
  if (!map.has(Field::kSurface)) throw ConfigError("column map needs a surface column");
  return map;
}

std::string ColumnMap::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += field_name(columns[i]);
  }
  return out;
}

bool ColumnMap::has(Field field) const {
  return std::find(columns.begin(), columns.end(), field) != columns.end();
}

Corpus parse_conll(std::string_view text, const ColumnMap& columns, const LabelSet& base) {
  Corpus corpus;
  corpus.labels = base;
  std::size_t expected_columns = 0;
  std::size_t line_no = 0;
  Sentence current;

  auto flush = [&] {
    if (current.tokens.empty()) return;
    current.id = "s" + std::to_string(corpus.sentences.size());
    corpus.sentences.push_back(std::move(current));
    current = Sentence{};
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.starts_with("-DOCSTART-")) continue;
    auto cols = split_columns(line);
    if (expected_columns == 0) {
      expected_columns = cols.size();
      if (expected_columns < columns.columns.size()) {
        throw ParseError(line_no, "expected at least " +
                                      std::to_string(columns.columns.size()) +
                                      " columns, found " + std::to_string(cols.size()));
      }
    } else if (cols.size() != expected_columns) {
      throw ParseError(line_no, "expected " + std::to_string(expected_columns) +
                                    " columns, found " + std::to_string(cols.size()));
    }
    Token token;
    for (std::size_t c = 0; c < columns.columns.size(); ++c) {
      std::string value(cols[c]);
      switch (columns.columns[c]) {
        case Field::kSurface: token.surface = std::move(value); break;
        case Field::kLemma:
          if (value != "_") token.lemma = std::move(value);
          break;
        case Field::kPos:
          if (value != "_") token.pos = std::move(value);
          break;
        case Field::kNeTag:
          if (value != "_") token.ne_tag = std::move(value);
          break;
        case Field::kGold: token.gold = corpus.labels.intern(value); break;
        case Field::kIgnore: break;
      }
    }
    current.tokens.push_back(std::move(token));
  }
  flush();
  corpus.labels.set_outside(columns.outside);
  return corpus;
}

Corpus read_conll_file(const std::string& path, const ColumnMap& columns, const LabelSet& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_conll(buffer.str(), columns, base);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path);
  }
}

std::string write_conll(const Corpus& corpus, const ColumnMap& columns,
                        const std::vector<std::vector<LabelId>>* predicted) {
  if (predicted && predicted->size() != corpus.size()) {
    throw std::invalid_argument("prediction count does not match corpus size");
  }
  std::string out;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& sentence = corpus.sentences[s];
    if (predicted && (*predicted)[s].size() != sentence.size()) {
      throw std::invalid_argument("prediction length mismatch in sentence " + sentence.id);
    }
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      const auto& token = sentence.tokens[i];
      bool first = true;
      auto emit = [&](std::string_view value) {
        if (!first) out += '\t';
        out += value;
        first = false;
      };
      for (Field field : columns.columns) {
        switch (field) {
          case Field::kSurface: emit(token.surface); break;
          case Field::kLemma: emit(token.lemma.value_or("_")); break;
          case Field::kPos: emit(token.pos.value_or("_")); break;
          case Field::kNeTag: emit(token.ne_tag.value_or("_")); break;
          case Field::kGold:
            emit(token.gold ? corpus.labels.name(*token.gold) : columns.outside);
            break;
          case Field::kIgnore: emit("_"); break;
        }
      }
      if (predicted) emit(corpus.labels.name((*predicted)[s][i]));
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0,1)");
  }
  if (corpus.empty()) throw ConfigError("cannot split an empty corpus");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(corpus.size())));
  std::vector<bool> is_test(corpus.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  std::pair<Corpus, Corpus> parts;
  parts.first.labels = corpus.labels;
  parts.second.labels = corpus.labels;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (is_test[i] ? parts.second : parts.first).sentences.push_back(corpus.sentences[i]);
  }
  return parts;
}

Sentence strip_gold(const Sentence& sentence) {
  Sentence copy = sentence;
  for (auto& token : copy.tokens) token.gold.reset();
  return copy;
}

std::vector<Span> extract_spans(std::span<const LabelId> labels, LabelId outside) {
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] == outside) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < labels.size() && labels[j + 1] == labels[i]) ++j;
    spans.push_back({i, j, labels[i]});
    i = j + 1;
  }
  return spans;
}

double Prf::precision() const {
  return predicted ? static_cast<double>(correct) / static_cast<double>(predicted) : 0.0;
}

double Prf::recall() const {
  return gold ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
}

double Prf::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

const Prf* EvalReport::find(std::string_view type) const {
  for (const auto& [name, prf] : per_type) {
    if (name == type) return &prf;
  }
  return nullptr;
}

std::string EvalReport::to_text() const {
  std::size_t width = 5;
  for (const auto& [name, prf] : per_type) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "type" << std::right
      << std::setw(8) << "gold" << std::setw(8) << "pred" << std::setw(8) << "corr"
      << std::setw(10) << "P" << std::setw(10) << "R" << std::setw(10) << "F1" << '\n';
  auto row = [&](const std::string& name, const Prf& prf) {
    out << std::left << std::setw(static_cast<int>(width)) << name << std::right
        << std::setw(8) << prf.gold << std::setw(8) << prf.predicted << std::setw(8)
        << prf.correct << std::fixed << std::setprecision(4) << std::setw(10)
        << prf.precision() << std::setw(10) << prf.recall() << std::setw(10) << prf.f1()
        << '\n';
  };
  for (const auto& [name, prf] : per_type) row(name, prf);
  row("micro", micro);
  return out.str();
}

std::string EvalReport::to_records() const {
  std::ostringstream out;
  out << std::setprecision(17);
  auto emit = [&](const std::string& prefix, const Prf& prf) {
    out << prefix << ".gold=" << prf.gold << '\n'
        << prefix << ".predicted=" << prf.predicted << '\n'
        << prefix << ".correct=" << prf.correct << '\n'
        << prefix << ".precision=" << prf.precision() << '\n'
        << prefix << ".recall=" << prf.recall() << '\n'
        << prefix << ".f1=" << prf.f1() << '\n';
  };
  emit("micro", micro);
  for (const auto& [name, prf] : per_type) emit("type." + name, prf);
  return out.str();
}

EvalReport evaluate(const Corpus& gold, const std::vector<std::vector<LabelId>>& predicted) {
  if (predicted.size() != gold.size()) {
    throw EvaluationError("expected " + std::to_string(gold.size()) +
                          " predicted sentences, got " + std::to_string(predicted.size()));
  }
  const LabelId outside = gold.labels.outside();
  std::vector<Prf> by_label(gold.labels.size());
  EvalReport report;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& sentence = gold.sentences[s];
    if (predicted[s].size() != sentence.size()) {
      throw EvaluationError("sentence " + sentence.id + ": gold has " +
                            std::to_string(sentence.size()) + " tokens, prediction has " +
                            std::to_string(predicted[s].size()));
    }
    std::vector<LabelId> gold_labels;
    try {
      gold_labels = sentence.gold_labels();
    } catch (const std::invalid_argument&) {
      throw EvaluationError("sentence " + sentence.id + " has no gold labels");
    }
    const auto gold_spans = extract_spans(gold_labels, outside);
    const auto pred_spans = extract_spans(predicted[s], outside);
    for (const auto& span : gold_spans) ++by_label.at(span.label).gold;
    for (const auto& span : pred_spans) ++by_label.at(span.label).predicted;
    // Both lists are sorted and disjoint, so a merge finds exact matches.
    std::size_t g = 0, p = 0;
    while (g < gold_spans.size() && p < pred_spans.size()) {
      if (gold_spans[g] == pred_spans[p]) {
        ++by_label[gold_spans[g].label].correct;
        ++g;
        ++p;
      } else if (gold_spans[g] < pred_spans[p]) {
        ++g;
      } else {
        ++p;
      }
    }
  }
  for (LabelId l = 0; l < static_cast<LabelId>(gold.labels.size()); ++l) {
    if (l == outside) continue;
    report.per_type.emplace_back(gold.labels.name(l), by_label[l]);
    report.micro.gold += by_label[l].gold;
    report.micro.predicted += by_label[l].predicted;
    report.micro.correct += by_label[l].correct;
  }
  return report;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace bagtag
