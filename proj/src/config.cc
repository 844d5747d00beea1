#include "bagtag/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <sstream>

#include "bagtag/errors.h"
#include "bagtag/model_io.h"

namespace bagtag {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = trim(text.substr(start, comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_integer(std::string_view key, std::string_view text) {
  T v{};
  const auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_real(std::string_view key, std::string_view text) {
  try {
    return parse_double(trim(text));
  } catch (const FormatError&) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + std::string(text) + "'");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(parse_integer<int>(key, item));
  return out;
}

}  // namespace

ColumnMap DataConfig::column_map() const { return ColumnMap::parse(columns, outside); }

LabelSet DataConfig::base_labels() const {
  if (labels.empty()) return {};
  return LabelSet(labels, outside);
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  const auto k = std::string(key);
  // data
  if (k == "data.train") {
    data.train = value;
  } else if (k == "data.test") {
    data.test = value;
  } else if (k == "data.pool") {
    data.pool = value;
  } else if (k == "data.columns") {
    data.columns = value;
  } else if (k == "data.outside") {
    data.outside = value;
  } else if (k == "data.test_fraction") {
    data.test_fraction = parse_real(k, value);
  } else if (k == "data.split_seed") {
    data.split_seed = parse_integer<std::uint64_t>(k, value);
  } else if (k == "data.labels") {
    data.labels = split_list(value);
    // features
  } else if (k == "features.profile") {
    auto p = profile_from_name(value);
    if (!p) throw ConfigError(k + ": unknown profile '" + value + "'");
    profile = *p;
    const auto kept = features;
    features = FeatureConfig::for_profile(*p);
    features.suffix_lengths = kept.suffix_lengths;
    features.prefix_lengths = kept.prefix_lengths;
    features.window = kept.window;
  } else if (k == "features.templates") {
    features.kinds.clear();
    for (const auto& name : split_list(value)) {
      auto kind = template_kind_from_name(name);
      if (!kind) throw ConfigError(k + ": unknown template '" + name + "'");
      features.kinds.push_back(*kind);
    }
  } else if (k == "features.suffix") {
    features.suffix_lengths = parse_int_list(k, value);
  } else if (k == "features.prefix") {
    features.prefix_lengths = parse_int_list(k, value);
  } else if (k == "features.window") {
    features.window = parse_integer<int>(k, value);
    // trainer
  } else if (k == "trainer.max_epochs") {
    trainer.max_epochs = parse_integer<int>(k, value);
  } else if (k == "trainer.error_threshold") {
    trainer.error_threshold = parse_real(k, value);
  } else if (k == "trainer.shuffle_seed") {
    trainer.shuffle_seed = parse_integer<std::uint64_t>(k, value);
  } else if (k == "trainer.markov_order") {
    trainer.markov_order = parse_integer<int>(k, value);
    // ensemble
  } else if (k == "ensemble.k") {
    ensemble.k = parse_integer<std::size_t>(k, value);
  } else if (k == "ensemble.sample_rate") {
    ensemble.sample_rate = parse_real(k, value);
  } else if (k == "ensemble.seed") {
    ensemble.seed = parse_integer<std::uint64_t>(k, value);
  } else if (k == "ensemble.decoder") {
    auto d = decoder_from_name(value);
    if (!d) throw ConfigError(k + ": expected vt or bp, got '" + value + "'");
    ensemble.decoder = *d;
  } else if (k == "ensemble.nbest") {
    ensemble.nbest = parse_integer<std::size_t>(k, value);
    // active
  } else if (k == "active.initial") {
    active.initial = parse_integer<std::size_t>(k, value);
  } else if (k == "active.batch") {
    active.batch = parse_integer<std::size_t>(k, value);
  } else if (k == "active.rounds") {
    active.rounds = parse_integer<std::size_t>(k, value);
  } else if (k == "active.reweight") {
    if (value == "rw") {
      active.reweight = true;
    } else if (value == "nrw") {
      active.reweight = false;
    } else {
      active.reweight = parse_bool(k, value);
    }
  } else if (k == "active.reweight_mode") {
    auto m = reweight_mode_from_name(value);
    if (!m) throw ConfigError(k + ": expected decay or literal, got '" + value + "'");
    active.reweight_mode = *m;
  } else if (k == "active.selection") {
    auto s = selection_from_name(value);
    if (!s) throw ConfigError(k + ": expected utl or rnd, got '" + value + "'");
    active.selection = *s;
  } else if (k == "active.grid") {
    active.grid = parse_bool(k, value);
  } else if (k == "active.seeds") {
    active.seeds.clear();
    for (const auto& item : split_list(value)) {
      active.seeds.push_back(parse_integer<std::uint64_t>(k, item));
    }
  } else if (k == "active.timing") {
    active.timing = parse_bool(k, value);
    // output
  } else if (k == "output.model") {
    output.model = value;
  } else if (k == "output.stats") {
    output.stats = value;
  } else if (k == "output.tagged") {
    output.tagged = value;
  } else if (k == "output.curve_dir") {
    output.curve_dir = value;
    // serve
  } else if (k == "serve.host") {
    serve.host = value;
  } else if (k == "serve.port") {
    serve.port = parse_integer<int>(k, value);
  } else if (k == "serve.state") {
    serve.state = value;
  } else if (k == "serve.audit") {
    serve.audit = value;
    // pipeline
  } else if (k == "pipeline.enabled") {
    pipeline.enabled = parse_bool(k, value);
  } else if (k == "pipeline.drop") {
    pipeline.drop = split_list(value);
  } else {
    throw ConfigError("unknown configuration key '" + k + "'");
  }
}

void RunConfig::validate() const {
  trainer.validate();
  if (features.kinds.empty()) throw ConfigError("features.templates: no templates selected");
  for (int len : features.suffix_lengths) {
    if (len < 1) throw ConfigError("features.suffix: lengths must be positive");
  }
  for (int len : features.prefix_lengths) {
    if (len < 1) throw ConfigError("features.prefix: lengths must be positive");
  }
  if (features.window < 0) throw ConfigError("features.window must be non-negative");
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction must be in (0, 1)");
  }
  if (ensemble.k < 1) throw ConfigError("ensemble.k must be at least 1");
  if (!(ensemble.sample_rate > 0.0 && ensemble.sample_rate <= 1.0)) {
    throw ConfigError("ensemble.sample_rate must be in (0, 1]");
  }
  if (ensemble.nbest < 1) throw ConfigError("ensemble.nbest must be at least 1");
  if (active.initial < 1) throw ConfigError("active.initial must be at least 1");
  if (active.batch < 1) throw ConfigError("active.batch must be at least 1");
  if (active.seeds.empty()) throw ConfigError("active.seeds must list at least one seed");
  if (serve.port < 0 || serve.port > 65535) throw ConfigError("serve.port out of range");
  if (pipeline.enabled && !features.uses(TemplateKind::kNeTagWindow)) {
    throw ConfigError("pipeline.enabled needs the ne-window template in the feature profile");
  }
  data.column_map();
}

ALConfig RunConfig::al_config(std::uint64_t seed) const {
  ALConfig c;
  c.initial = active.initial;
  c.batch = active.batch;
  c.rounds = active.rounds;
  c.sample_rate = ensemble.sample_rate;
  c.nbest = ensemble.nbest;
  c.ensemble_size = ensemble.k;
  c.decoder = ensemble.decoder;
  c.reweight = active.reweight;
  c.selection = active.selection;
  c.reweight_mode = active.reweight_mode;
  c.seed = seed;
  c.trainer = trainer;
  c.features = features;
  return c;
}

RunConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config;
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [section, body] : tree) {
    static const std::vector<std::string> known = {"data",   "features", "trainer", "ensemble",
                                                   "active", "output",   "serve",   "pipeline"};
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' is outside any section");
    }
    if (std::find(known.begin(), known.end(), section) == known.end()) {
      throw ConfigError("unknown configuration section '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      entries.emplace_back(section + "." + key, value.data());
    }
  }
  // A profile resets the template list, so it is applied before explicit templates.
  for (const auto& [key, value] : entries) {
    if (key == "features.profile") config.set(key, value);
  }
  for (const auto& [key, value] : entries) {
    if (key != "features.profile") config.set(key, value);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  try {
    return parse_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + item + "' is not of the form section.key=value");
    }
    config.set(trim(std::string_view(item).substr(0, eq)),
               std::string_view(item).substr(eq + 1));
  }
  config.validate();
}

}  // namespace bagtag
