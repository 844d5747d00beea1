#include "bagtag/features.h"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "bagtag/errors.h"

namespace bagtag {

namespace {

struct KindInfo {
  TemplateKind kind;
  std::string_view name;
};

constexpr KindInfo kKinds[] = {
    {TemplateKind::kWord, "word"},
    {TemplateKind::kLemma, "lemma"},
    {TemplateKind::kPos, "pos"},
    {TemplateKind::kSuffix, "suffix"},
    {TemplateKind::kWordSuffix, "word+suffix"},
    {TemplateKind::kPrefixSuffix, "prefix+suffix"},
    {TemplateKind::kPosSuffix, "pos+suffix"},
    {TemplateKind::kLemmaWindow, "lemma-window"},
    {TemplateKind::kWordWindow, "word-window"},
    {TemplateKind::kPosWindow, "pos-window"},
    {TemplateKind::kSuffixWindow, "suffix-window"},
    {TemplateKind::kNeTagWindow, "ne-window"},
    {TemplateKind::kPosBigram, "pos-bigram"},
    {TemplateKind::kSuffixBigram, "suffix-bigram"},
    {TemplateKind::kWordBigram, "word-bigram"},
};

std::string offset_string(int offset) {
  if (offset > 0) return "+" + std::to_string(offset);
  return std::to_string(offset);
}

std::string boundary(int offset) {
  return offset < 0 ? "<BOS" + std::to_string(offset) + ">"
                    : "<EOS+" + std::to_string(offset) + ">";
}

std::vector<int> parse_ints(std::string_view text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    int v = 0;
    auto part = text.substr(start, comma - start);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || v <= 0) {
      throw ConfigError("bad integer list '" + std::string(text) + "'");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

bool needs_pos_kind(TemplateKind kind) {
  return kind == TemplateKind::kPos || kind == TemplateKind::kPosSuffix ||
         kind == TemplateKind::kPosWindow || kind == TemplateKind::kPosBigram;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace

std::string_view template_kind_name(TemplateKind kind) {
  for (const auto& info : kKinds) {
    if (info.kind == kind) return info.name;
  }
  return "?";
}

std::optional<TemplateKind> template_kind_from_name(std::string_view name) {
  for (const auto& info : kKinds) {
    if (info.name == name) return info.kind;
  }
  return std::nullopt;
}

std::optional<Profile> profile_from_name(std::string_view name) {
  if (name == "chunk") return Profile::kChunk;
  if (name == "nlpba") return Profile::kNlpba;
  if (name == "ontonotes") return Profile::kOntoNotes;
  if (name == "est") return Profile::kEst;
  return std::nullopt;
}

FeatureConfig FeatureConfig::for_profile(Profile profile) {
  using K = TemplateKind;
  FeatureConfig config;
  switch (profile) {
    case Profile::kChunk:
      config.kinds = {K::kWord,       K::kLemma,         K::kPos,         K::kSuffix,
                      K::kWordSuffix, K::kPrefixSuffix,  K::kPosSuffix,   K::kLemmaWindow,
                      K::kPosWindow,  K::kSuffixWindow};
      break;
    case Profile::kNlpba:
      config.kinds = {K::kWord,        K::kLemma,       K::kSuffix,        K::kWordSuffix,
                      K::kLemmaWindow, K::kWordWindow,  K::kSuffixWindow,  K::kSuffixBigram,
                      K::kWordBigram};
      break;
    case Profile::kOntoNotes:
      config.kinds = {K::kWord,        K::kLemma,     K::kPos,         K::kSuffix,
                      K::kWordSuffix,  K::kPrefixSuffix, K::kPosSuffix, K::kLemmaWindow,
                      K::kPosBigram,   K::kWordBigram};
      break;
    case Profile::kEst:
      config.kinds = {K::kWord,       K::kLemma,       K::kSuffix,       K::kWordSuffix,
                      K::kLemmaWindow, K::kWordWindow, K::kSuffixWindow, K::kNeTagWindow,
                      K::kWordBigram};
      break;
  }
  return config;
}

bool FeatureConfig::uses(TemplateKind kind) const {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

bool FeatureConfig::needs_pos() const {
  return std::any_of(kinds.begin(), kinds.end(), needs_pos_kind);
}

std::string FeatureConfig::to_string() const {
  std::string out = "kinds=";
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i) out += ',';
    out += template_kind_name(kinds[i]);
  }
  out += ";suffix=" + join_ints(suffix_lengths);
  out += ";prefix=" + join_ints(prefix_lengths);
  out += ";window=" + std::to_string(window);
  return out;
}

FeatureConfig FeatureConfig::parse(std::string_view text) {
  FeatureConfig config;
  std::size_t start = 0;
  while (start < text.size()) {
    auto semi = text.find(';', start);
    if (semi == std::string_view::npos) semi = text.size();
    auto part = text.substr(start, semi - start);
    start = semi + 1;
    auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("bad feature config '" + std::string(text) + "'");
    }
    auto key = part.substr(0, eq);
    auto value = part.substr(eq + 1);
    if (key == "kinds") {
      config.kinds.clear();
      std::size_t s = 0;
      while (s < value.size()) {
        auto comma = value.find(',', s);
        if (comma == std::string_view::npos) comma = value.size();
        auto name = value.substr(s, comma - s);
        auto kind = template_kind_from_name(name);
        if (!kind) throw ConfigError("unknown feature template '" + std::string(name) + "'");
        config.kinds.push_back(*kind);
        s = comma + 1;
      }
    } else if (key == "suffix") {
      config.suffix_lengths = parse_ints(value);
    } else if (key == "prefix") {
      config.prefix_lengths = parse_ints(value);
    } else if (key == "window") {
      auto ints = parse_ints(value);
      if (ints.size() != 1) throw ConfigError("window takes one value");
      config.window = ints[0];
    } else {
      throw ConfigError("unknown feature config key '" + std::string(key) + "'");
    }
  }
  return config;
}

bool FeatureTemplate::global() const {
  switch (kind) {
    case TemplateKind::kWord:
    case TemplateKind::kLemma:
    case TemplateKind::kPos:
    case TemplateKind::kSuffix:
    case TemplateKind::kWordSuffix:
    case TemplateKind::kPrefixSuffix:
    case TemplateKind::kPosSuffix:
      return false;
    default:
      return true;
  }
}

std::vector<FeatureTemplate> expand_templates(const FeatureConfig& config) {
  std::vector<FeatureTemplate> out;
  auto add = [&](TemplateKind kind, int offset, int length, int prefix, std::string name) {
    FeatureTemplate t;
    t.id = static_cast<std::uint32_t>(out.size());
    t.kind = kind;
    t.offset = offset;
    t.length = length;
    t.prefix_length = prefix;
    t.name = std::move(name);
    out.push_back(std::move(t));
  };
  const int w = config.window;
  for (TemplateKind kind : config.kinds) {
    switch (kind) {
      case TemplateKind::kWord: add(kind, 0, 0, 0, "word"); break;
      case TemplateKind::kLemma: add(kind, 0, 0, 0, "lemma"); break;
      case TemplateKind::kPos: add(kind, 0, 0, 0, "pos"); break;
      case TemplateKind::kSuffix:
        for (int n : config.suffix_lengths) add(kind, 0, n, 0, "suffix" + std::to_string(n));
        break;
      case TemplateKind::kWordSuffix:
        for (int n : config.suffix_lengths) {
          add(kind, 0, n, 0, "word+suffix" + std::to_string(n));
        }
        break;
      case TemplateKind::kPrefixSuffix:
        for (int p : config.prefix_lengths) {
          for (int n : config.suffix_lengths) {
            add(kind, 0, n, p, "prefix" + std::to_string(p) + "+suffix" + std::to_string(n));
          }
        }
        break;
      case TemplateKind::kPosSuffix:
        for (int n : config.suffix_lengths) {
          add(kind, 0, n, 0, "pos+suffix" + std::to_string(n));
        }
        break;
      case TemplateKind::kLemmaWindow:
        for (int o = -w; o <= w; ++o) add(kind, o, 0, 0, "lemma[" + offset_string(o) + "]");
        break;
      case TemplateKind::kWordWindow:
        for (int o = -w; o <= w; ++o) add(kind, o, 0, 0, "word[" + offset_string(o) + "]");
        break;
      case TemplateKind::kPosWindow:
        for (int o = -w; o <= w; ++o) add(kind, o, 0, 0, "pos[" + offset_string(o) + "]");
        break;
      case TemplateKind::kSuffixWindow:
        for (int n : config.suffix_lengths) {
          for (int o = -w; o <= w; ++o) {
            add(kind, o, n, 0, "suffix" + std::to_string(n) + "[" + offset_string(o) + "]");
          }
        }
        break;
      case TemplateKind::kNeTagWindow:
        for (int o = -w; o <= w; ++o) add(kind, o, 0, 0, "ne[" + offset_string(o) + "]");
        break;
      case TemplateKind::kPosBigram:
        for (int o = -w; o < w; ++o) {
          add(kind, o, 0, 0,
              "pos[" + offset_string(o) + "," + offset_string(o + 1) + "]");
        }
        break;
      case TemplateKind::kSuffixBigram:
        for (int n : config.suffix_lengths) {
          for (int o = -w; o < w; ++o) {
            add(kind, o, n, 0,
                "suffix" + std::to_string(n) + "[" + offset_string(o) + "," +
                    offset_string(o + 1) + "]");
          }
        }
        break;
      case TemplateKind::kWordBigram:
        for (int o = -w; o < w; ++o) {
          add(kind, o, 0, 0,
              "word[" + offset_string(o) + "," + offset_string(o + 1) + "]");
        }
        break;
    }
  }
  return out;
}

void validate_features(const FeatureConfig& config, const Corpus& corpus) {
  if (config.kinds.empty()) throw ConfigError("feature config enables no templates");
  if (config.window < 0) throw ConfigError("window must be non-negative");
  if (!config.needs_pos()) return;
  for (const auto& sentence : corpus.sentences) {
    for (const auto& token : sentence.tokens) {
      if (!token.pos) {
        throw ConfigError("feature templates need part-of-speech tags but sentence " +
                          sentence.id + " has none");
      }
    }
  }
}

std::string utf8_suffix(std::string_view word, int n) {
  const std::size_t len = utf8_length(word);
  if (len <= static_cast<std::size_t>(n)) return std::string(word);
  std::size_t skip = len - static_cast<std::size_t>(n);
  std::size_t i = 0;
  while (i < word.size()) {
    if ((static_cast<unsigned char>(word[i]) & 0xC0) != 0x80) {
      if (skip == 0) break;
      --skip;
    }
    ++i;
  }
  return std::string(word.substr(i));
}

std::string utf8_prefix(std::string_view word, int n) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < word.size()) {
    if ((static_cast<unsigned char>(word[i]) & 0xC0) != 0x80) {
      if (count == static_cast<std::size_t>(n)) break;
      ++count;
    }
    ++i;
  }
  return std::string(word.substr(0, i));
}

FeatureExtractor::FeatureExtractor(FeatureConfig config)
    : config_(std::move(config)), templates_(expand_templates(config_)) {}

void FeatureExtractor::extract(const Sentence& sentence, std::size_t position,
                               std::vector<RawFeature>& out) const {
  const auto& tokens = sentence.tokens;
  const auto n = static_cast<long>(tokens.size());
  const auto here = static_cast<long>(position);
  auto inside = [&](int offset) {
    const long i = here + offset;
    return i >= 0 && i < n;
  };
  auto at = [&](int offset) -> const Token& {
    return tokens[static_cast<std::size_t>(here + offset)];
  };
  auto lemma_of = [](const Token& t) { return to_lower(t.lemma ? *t.lemma : t.surface); };
  auto pos_of = [](const Token& t) -> std::string { return t.pos.value_or("_"); };

  const Token& current = tokens.at(position);
  for (const auto& t : templates_) {
    std::string value;
    switch (t.kind) {
      case TemplateKind::kWord: value = current.surface; break;
      case TemplateKind::kLemma: value = lemma_of(current); break;
      case TemplateKind::kPos: value = pos_of(current); break;
      case TemplateKind::kSuffix: value = utf8_suffix(current.surface, t.length); break;
      case TemplateKind::kWordSuffix:
        value = current.surface + "|" + utf8_suffix(current.surface, t.length);
        break;
      case TemplateKind::kPrefixSuffix:
        value = utf8_prefix(current.surface, t.prefix_length) + "|" +
                utf8_suffix(current.surface, t.length);
        break;
      case TemplateKind::kPosSuffix:
        value = pos_of(current) + "|" + utf8_suffix(current.surface, t.length);
        break;
      case TemplateKind::kLemmaWindow:
        value = inside(t.offset) ? lemma_of(at(t.offset)) : boundary(t.offset);
        break;
      case TemplateKind::kWordWindow:
        value = inside(t.offset) ? at(t.offset).surface : boundary(t.offset);
        break;
      case TemplateKind::kPosWindow:
        value = inside(t.offset) ? pos_of(at(t.offset)) : boundary(t.offset);
        break;
      case TemplateKind::kSuffixWindow:
        value = inside(t.offset) ? utf8_suffix(at(t.offset).surface, t.length)
                                 : boundary(t.offset);
        break;
      case TemplateKind::kNeTagWindow:
        if (!inside(t.offset) || !at(t.offset).ne_tag) continue;
        value = *at(t.offset).ne_tag;
        break;
      case TemplateKind::kPosBigram:
      case TemplateKind::kSuffixBigram:
      case TemplateKind::kWordBigram: {
        auto cell = [&](int offset) -> std::string {
          if (!inside(offset)) return boundary(offset);
          const Token& tok = at(offset);
          if (t.kind == TemplateKind::kPosBigram) return pos_of(tok);
          if (t.kind == TemplateKind::kSuffixBigram) return utf8_suffix(tok.surface, t.length);
          return tok.surface;
        };
        value = cell(t.offset) + "|" + cell(t.offset + 1);
        break;
      }
    }
    out.push_back({t.id, std::move(value)});
  }
}

FeatureInterner::FeatureInterner(std::size_t num_templates) : maps_(num_templates) {}

std::optional<FeatureId> FeatureInterner::lookup(std::uint32_t template_id,
                                                 std::string_view value) const {
  const auto& map = maps_.at(template_id);
  auto it = map.find(std::string(value));
  if (it == map.end()) return std::nullopt;
  return make_feature_id(template_id, it->second);
}

std::optional<FeatureId> FeatureInterner::intern(std::uint32_t template_id,
                                                 std::string_view value) {
  auto& map = maps_.at(template_id);
  auto it = map.find(std::string(value));
  if (it != map.end()) return make_feature_id(template_id, it->second);
  if (frozen_) return std::nullopt;
  const auto index = static_cast<std::uint32_t>(values_.size());
  map.emplace(std::string(value), index);
  values_.emplace_back(template_id, std::string(value));
  return make_feature_id(template_id, index);
}

FeatureSpace::FeatureSpace(FeatureConfig config)
    : extractor_(std::move(config)), interner_(extractor_.templates().size()) {
  for (const auto& t : extractor_.templates()) template_by_name_.emplace(t.name, t.id);
}

std::vector<FeatureId> FeatureSpace::extract(const Sentence& sentence, std::size_t position) {
  std::vector<RawFeature> raw;
  extractor_.extract(sentence, position, raw);
  std::vector<FeatureId> ids;
  ids.reserve(raw.size());
  for (const auto& f : raw) {
    if (auto id = interner_.intern(f.template_id, f.value)) ids.push_back(*id);
  }
  return ids;
}

std::vector<FeatureId> FeatureSpace::lookup(const Sentence& sentence,
                                            std::size_t position) const {
  std::vector<RawFeature> raw;
  extractor_.extract(sentence, position, raw);
  std::vector<FeatureId> ids;
  ids.reserve(raw.size());
  for (const auto& f : raw) {
    if (auto id = interner_.lookup(f.template_id, f.value)) ids.push_back(*id);
  }
  return ids;
}

SentenceFeatures FeatureSpace::featurize(const Sentence& sentence) {
  SentenceFeatures out(sentence.size());
  for (std::size_t p = 0; p < sentence.size(); ++p) out[p] = extract(sentence, p);
  return out;
}

SentenceFeatures FeatureSpace::lookup_all(const Sentence& sentence) const {
  SentenceFeatures out(sentence.size());
  for (std::size_t p = 0; p < sentence.size(); ++p) out[p] = lookup(sentence, p);
  return out;
}

FeatureId FeatureSpace::intern_named(std::string_view template_name, std::string_view value) {
  auto it = template_by_name_.find(std::string(template_name));
  if (it == template_by_name_.end()) {
    throw FormatError("unknown feature template '" + std::string(template_name) + "'");
  }
  auto id = interner_.intern(it->second, value);
  if (!id) throw FormatError("feature space is frozen");
  return *id;
}

const std::string& FeatureSpace::template_name(FeatureId id) const {
  return extractor_.templates().at(feature_template(id)).name;
}

const std::string& FeatureSpace::value(FeatureId id) const {
  return interner_.value_string(feature_value(id));
}

std::string FeatureSpace::dump() const {
  std::ostringstream out;
  const auto n = interner_.stats().values;
  for (std::uint32_t v = 0; v < n; ++v) {
    const auto t = interner_.value_template(v);
    out << extractor_.templates()[t].name << '\t' << interner_.value_string(v) << '\t'
        << make_feature_id(t, v) << '\n';
  }
  return out.str();
}

}  // namespace bagtag
