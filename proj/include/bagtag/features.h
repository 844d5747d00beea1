#ifndef BAGTAG_FEATURES_H_
#define BAGTAG_FEATURES_H_

// Word-level and windowed feature templates, and interning of feature
// values into dense ids.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bagtag/corpus.h"

namespace bagtag {

enum class TemplateKind {
  // Word-level templates, evaluated on the current token only.
  kWord,
  kLemma,
  kPos,
  kSuffix,
  kWordSuffix,
  kPrefixSuffix,
  kPosSuffix,
  // Global templates, evaluated on every cell of the [-2,2] window.
  kLemmaWindow,
  kWordWindow,
  kPosWindow,
  kSuffixWindow,
  kNeTagWindow,
  kPosBigram,
  kSuffixBigram,
  kWordBigram,
};

std::string_view template_kind_name(TemplateKind kind);
std::optional<TemplateKind> template_kind_from_name(std::string_view name);

enum class Profile { kChunk, kNlpba, kOntoNotes, kEst };

std::optional<Profile> profile_from_name(std::string_view name);

struct FeatureConfig {
  std::vector<TemplateKind> kinds;
  std::vector<int> suffix_lengths = {2, 3};
  std::vector<int> prefix_lengths = {2, 3};
  int window = 2;

  // The template columns used for chunking, NLPBA, OntoNotes and EST.
  static FeatureConfig for_profile(Profile profile);

  bool uses(TemplateKind kind) const;
  bool needs_pos() const;

  // Compact text form, "kinds=word,lemma;suffix=2,3;prefix=2,3;window=2".
  std::string to_string() const;
  static FeatureConfig parse(std::string_view text);

  bool operator==(const FeatureConfig&) const = default;
};

// One instantiated template: a kind, plus the window offset (left cell for
// bigrams) and affix length where applicable.
struct FeatureTemplate {
  std::uint32_t id = 0;
  TemplateKind kind = TemplateKind::kWord;
  int offset = 0;
  int length = 0;
  int prefix_length = 0;
  std::string name;

  bool global() const;
};

std::vector<FeatureTemplate> expand_templates(const FeatureConfig& config);

// Throws ConfigError when a template needs a token field the corpus lacks.
// Stacked entity tags are optional and never fail validation.
void validate_features(const FeatureConfig& config, const Corpus& corpus);

// Packs template id (high 32 bits) and value index (low 32 bits). Value
// indices are dense across the whole interner.
using FeatureId = std::uint64_t;

inline FeatureId make_feature_id(std::uint32_t template_id, std::uint32_t value) {
  return (static_cast<FeatureId>(template_id) << 32) | value;
}
inline std::uint32_t feature_template(FeatureId id) {
  return static_cast<std::uint32_t>(id >> 32);
}
inline std::uint32_t feature_value(FeatureId id) {
  return static_cast<std::uint32_t>(id & 0xffffffffu);
}

struct RawFeature {
  std::uint32_t template_id = 0;
  std::string value;

  bool operator==(const RawFeature&) const = default;
};

class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureConfig config);

  const FeatureConfig& config() const { return config_; }
  const std::vector<FeatureTemplate>& templates() const { return templates_; }

  // Appends the (template, value) pairs active at `position`. Window cells
  // outside the sentence yield per-offset boundary symbols; stacked entity
  // cells yield nothing unless the token carries an ne_tag.
  void extract(const Sentence& sentence, std::size_t position,
               std::vector<RawFeature>& out) const;

 private:
  FeatureConfig config_;
  std::vector<FeatureTemplate> templates_;
};

struct InternStats {
  std::size_t templates = 0;  // K
  std::size_t values = 0;     // F
};

class FeatureInterner {
 public:
  explicit FeatureInterner(std::size_t num_templates = 0);

  std::optional<FeatureId> lookup(std::uint32_t template_id, std::string_view value) const;
  // Returns the id of (template, value), allocating one if new and not frozen.
  std::optional<FeatureId> intern(std::uint32_t template_id, std::string_view value);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  InternStats stats() const { return {maps_.size(), values_.size()}; }

  // Value string for a dense value index.
  const std::string& value_string(std::uint32_t value) const { return values_.at(value).second; }
  std::uint32_t value_template(std::uint32_t value) const { return values_.at(value).first; }

 private:
  std::vector<std::unordered_map<std::string, std::uint32_t>> maps_;
  std::vector<std::pair<std::uint32_t, std::string>> values_;
  bool frozen_ = false;
};

using SentenceFeatures = std::vector<std::vector<FeatureId>>;

// Extractor plus interner: the feature space of one model.
class FeatureSpace {
 public:
  explicit FeatureSpace(FeatureConfig config);

  const FeatureConfig& config() const { return extractor_.config(); }
  const FeatureExtractor& extractor() const { return extractor_; }
  const FeatureInterner& interner() const { return interner_; }

  // Interns unseen values unless frozen.
  std::vector<FeatureId> extract(const Sentence& sentence, std::size_t position);
  // Never allocates; unknown values are dropped.
  std::vector<FeatureId> lookup(const Sentence& sentence, std::size_t position) const;

  SentenceFeatures featurize(const Sentence& sentence);
  SentenceFeatures lookup_all(const Sentence& sentence) const;

  // Interns a value read back from a model file.
  FeatureId intern_named(std::string_view template_name, std::string_view value);

  void freeze() { interner_.freeze(); }
  bool frozen() const { return interner_.frozen(); }
  InternStats stats() const { return interner_.stats(); }

  // "template-name" and "value" of an id.
  const std::string& template_name(FeatureId id) const;
  const std::string& value(FeatureId id) const;
  // One line per value: "template-name TAB value TAB id".
  std::string dump() const;

 private:
  FeatureExtractor extractor_;
  FeatureInterner interner_;
  std::unordered_map<std::string, std::uint32_t> template_by_name_;
};

// UTF-8 aware affixes; strings shorter than `n` code points are returned whole.
std::string utf8_suffix(std::string_view word, int n);
std::string utf8_prefix(std::string_view word, int n);

}  // namespace bagtag

#endif  // BAGTAG_FEATURES_H_
