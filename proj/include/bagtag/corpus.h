#ifndef BAGTAG_CORPUS_H_
#define BAGTAG_CORPUS_H_

// Column-format corpora, the flat tag set, phrase extraction and
// phrase-level precision/recall/F1.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bagtag {

using LabelId = std::int32_t;

// The spatiotemporal tag inventory. Datasets may use any other open set.
inline constexpr std::string_view kSpatiotemporalTags[] = {
    "L", "D", "G", "T", "O-org", "P", "ST", "B", "W", "UL", "US", "UB", "E"};
inline constexpr std::string_view kDefaultOutside = "O";

// Dense, insertion-ordered label inventory with one designated OUTSIDE label.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(const std::vector<std::string>& names, std::string_view outside);

  // Returns the index of `name`, appending it if unseen.
  LabelId intern(std::string_view name);
  std::optional<LabelId> find(std::string_view name) const;
  // Like find() but throws ConfigError for unknown names.
  LabelId at(std::string_view name) const;

  const std::string& name(LabelId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  // Interns `name` and designates it OUTSIDE.
  void set_outside(std::string_view name);
  LabelId outside() const { return outside_; }
  bool has_outside() const { return outside_ >= 0; }

  bool operator==(const LabelSet& other) const {
    return names_ == other.names_ && outside_ == other.outside_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, LabelId> index_;
  LabelId outside_ = -1;
};

struct Token {
  std::string surface;
  std::optional<std::string> lemma;
  std::optional<std::string> pos;
  // Stacked entity prediction from a first-stage model.
  std::optional<std::string> ne_tag;
  std::optional<LabelId> gold;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  // True when every token carries a gold label.
  bool labeled() const;
  // Gold labels of every token; throws std::invalid_argument if any is missing.
  std::vector<LabelId> gold_labels() const;

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Sentence> sentences;
  LabelSet labels;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  std::size_t num_tokens() const;

  bool operator==(const Corpus&) const = default;
};

enum class Field { kSurface, kLemma, kPos, kNeTag, kGold, kIgnore };

// Maps column positions to token fields.
struct ColumnMap {
  std::vector<Field> columns = {Field::kSurface, Field::kPos, Field::kGold};
  std::string outside = std::string(kDefaultOutside);

  // Parses "surface,pos,gold" style specs. Field names: surface|word,
  // lemma, pos, ne|ne_tag, gold|label, _|ignore.
  static ColumnMap parse(std::string_view spec,
                         std::string_view outside = kDefaultOutside);
  std::string to_string() const;
  bool has(Field field) const;
};

// Parses CoNLL-style column text. Blank lines separate sentences, columns
// are separated by tabs or spaces, and lines starting with -DOCSTART- are
// skipped. A "_" in a lemma, pos or ne column means the field is absent.
// Labels not present in `base` are appended in first-appearance
// order; the OUTSIDE label named by `columns` is appended last if never seen.
Corpus parse_conll(std::string_view text, const ColumnMap& columns,
                   const LabelSet& base = {});

Corpus read_conll_file(const std::string& path, const ColumnMap& columns,
                       const LabelSet& base = {});

// Writes the columns of `columns` in order, one token per line. When
// `predicted` is given, its label names are appended as a final column.
std::string write_conll(const Corpus& corpus, const ColumnMap& columns,
                        const std::vector<std::vector<LabelId>>* predicted = nullptr);

// Deterministic shuffle-and-cut. The test part gets
// round(test_fraction * |corpus|) sentences; both parts keep corpus order.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double test_fraction,
                                std::uint64_t seed);

// Returns a copy of `sentence` with every gold label removed.
Sentence strip_gold(const Sentence& sentence);

struct Span {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // inclusive
  LabelId label = 0;

  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

// Each maximal run of one non-OUTSIDE label is a phrase. Adjacent phrases
// with the same tag are therefore merged.
std::vector<Span> extract_spans(std::span<const LabelId> labels, LabelId outside);

struct Prf {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;

  double precision() const;
  double recall() const;
  double f1() const;
};

struct EvalReport {
  // One entry per non-OUTSIDE label, in label-set order.
  std::vector<std::pair<std::string, Prf>> per_type;
  Prf micro;

  const Prf* find(std::string_view type) const;
  // Aligned human-readable table.
  std::string to_text() const;
  // One "key=value" record per line, e.g. "micro.f1=0.5".
  std::string to_records() const;
};

// Exact-match phrase scoring. Throws EvaluationError naming the sentence id
// when counts or lengths disagree.
EvalReport evaluate(const Corpus& gold,
                    const std::vector<std::vector<LabelId>>& predicted);

std::string to_lower(std::string_view text);

}  // namespace bagtag

#endif  // BAGTAG_CORPUS_H_
