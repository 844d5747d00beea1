#include "bagtag/model_io.h"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "bagtag/errors.h"

namespace bagtag {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

long parse_long(std::string_view text) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("bad integer '" + std::string(text) + "'");
  }
  return v;
}

void check_header(std::string_view line, std::string_view magic, int supported) {
  auto fields = split_tabs(line);
  if (fields.size() != 2 || fields[0] != magic) {
    throw FormatError("not a " + std::string(magic) + " file");
  }
  const long version = parse_long(fields[1]);
  if (version > supported) {
    throw FormatError(std::string(magic) + " version " + std::to_string(version) +
                      " is newer than the supported version " + std::to_string(supported));
  }
  if (version < 1) throw FormatError("bad " + std::string(magic) + " version");
}

std::string label_or_start(const LabelSet& labels, LabelId id) {
  if (id == static_cast<LabelId>(labels.size())) return std::string(kStartSymbol);
  return labels.name(id);
}

LabelId parse_label(const LabelSet& labels, std::string_view name, bool allow_start) {
  if (allow_start && name == kStartSymbol) return static_cast<LabelId>(labels.size());
  auto id = labels.find(name);
  if (!id) throw FormatError("unknown label '" + std::string(name) + "' in model");
  return *id;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("bad number '" + std::string(text) + "'");
  }
  return v;
}

std::string write_model(const FhmmModel& model) {
  const auto& labels = model.labels();
  const auto& weights = model.weights();
  const auto& space = model.features();
  std::ostringstream out;
  out << "bagtag-fhmm\t" << kModelFormatVersion << '\n';
  out << "markov_order\t" << weights.markov_order() << '\n';
  out << "labels";
  for (const auto& name : labels.names()) out << '\t' << name;
  out << '\n';
  out << "outside\t" << labels.name(labels.outside()) << '\n';
  out << "features\t" << model.feature_config().to_string() << '\n';

  const auto num_values = std::min(weights.num_values(), space.stats().values);
  for (std::uint32_t v = 0; v < num_values; ++v) {
    const auto t = space.interner().value_template(v);
    const FeatureId id = make_feature_id(t, v);
    for (LabelId l = 0; l < static_cast<LabelId>(labels.size()); ++l) {
      const double w = weights.emission(v, l);
      if (w == 0.0) continue;
      out << space.template_name(id) << '=' << space.value(id) << '\t' << labels.name(l) << '\t'
          << format_double(w) << '\n';
    }
  }
  const auto n = static_cast<LabelId>(labels.size());
  const LabelId start = weights.start();
  for (LabelId older = 0; older <= (weights.markov_order() == 2 ? start : 0); ++older) {
    for (LabelId prev = 0; prev <= start; ++prev) {
      for (LabelId cur = 0; cur < n; ++cur) {
        const double w = weights.transition(older, prev, cur);
        if (w == 0.0) continue;
        out << "TRANS\t";
        if (weights.markov_order() == 2) out << label_or_start(labels, older) << '\t';
        out << label_or_start(labels, prev) << '\t' << labels.name(cur) << '\t'
            << format_double(w) << '\n';
      }
    }
  }
  return out.str();
}

FhmmModel read_model(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.size() < 5) throw FormatError("truncated model file");
  check_header(lines[0], "bagtag-fhmm", kModelFormatVersion);

  auto field = [&](std::size_t i, std::string_view key) {
    auto f = split_tabs(lines[i]);
    if (f.empty() || f[0] != key) {
      throw FormatError("expected '" + std::string(key) + "' on model line " +
                        std::to_string(i + 1));
    }
    return f;
  };
  const auto order_fields = field(1, "markov_order");
  if (order_fields.size() != 2) throw FormatError("bad markov_order line");
  const int order = static_cast<int>(parse_long(order_fields[1]));
  if (order != 1 && order != 2) throw FormatError("markov_order must be 1 or 2");
  const auto label_fields = field(2, "labels");
  std::vector<std::string> names(label_fields.begin() + 1, label_fields.end());
  if (names.empty()) throw FormatError("model has no labels");
  const auto outside_fields = field(3, "outside");
  if (outside_fields.size() != 2) throw FormatError("bad outside line");
  LabelSet labels(names, outside_fields[1]);
  if (labels.size() != names.size()) throw FormatError("outside label not among labels");
  const auto feature_fields = field(4, "features");
  if (feature_fields.size() != 2) throw FormatError("bad features line");
  FeatureConfig fconfig;
  try {
    fconfig = FeatureConfig::parse(feature_fields[1]);
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }

  FeatureSpace space(fconfig);
  WeightTable weights(labels.size(), order);
  for (std::size_t i = 5; i < lines.size(); ++i) {
    auto f = split_tabs(lines[i]);
    if (f[0] == "TRANS") {
      const std::size_t expect = order == 2 ? 5 : 4;
      if (f.size() != expect) throw FormatError("bad TRANS line " + std::to_string(i + 1));
      const LabelId older = order == 2 ? parse_label(labels, f[1], true) : weights.start();
      const LabelId prev = parse_label(labels, f[expect - 3], true);
      const LabelId cur = parse_label(labels, f[expect - 2], false);
      weights.transition_ref(older, prev, cur) = parse_double(f[expect - 1]);
      continue;
    }
    if (f.size() != 3) throw FormatError("bad weight line " + std::to_string(i + 1));
    const auto eq = f[0].find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("bad feature on line " + std::to_string(i + 1));
    }
    const FeatureId id = space.intern_named(f[0].substr(0, eq), f[0].substr(eq + 1));
    weights.emission_ref(feature_value(id), parse_label(labels, f[1], false)) =
        parse_double(f[2]);
  }
  weights.resize_values(space.stats().values);
  return FhmmModel(std::move(labels), std::move(space), std::move(weights));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write to '" + path + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const FhmmModel& model, const std::string& path) {
  write_file(path, write_model(model));
}

FhmmModel load_model(const std::string& path) {
  try {
    return read_model(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_ensemble(const EnsembleModel& ensemble, const std::string& path) {
  ensemble.check();
  const std::filesystem::path manifest(path);
  std::ostringstream out;
  out << "bagtag-ensemble\t" << kEnsembleFormatVersion << '\n';
  out << "k\t" << ensemble.size() << '\n';
  out << "sample_rate\t" << format_double(ensemble.sample_rate) << '\n';
  out << "seed\t" << ensemble.seed << '\n';
  out << "decoder\t" << decoder_name(ensemble.decoder) << '\n';
  out << "nbest\t" << ensemble.nbest << '\n';
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const std::string name = manifest.filename().string() + ".m" + std::to_string(m) + ".fhmm";
    save_model(ensemble.members[m], (manifest.parent_path() / name).string());
    out << "member\t" << name << '\n';
  }
  write_file(path, out.str());
}

EnsembleModel load_ensemble(const std::string& path) {
  const auto text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw FormatError(path + ": empty ensemble manifest");
  check_header(lines[0], "bagtag-ensemble", kEnsembleFormatVersion);
  EnsembleModel ensemble;
  std::size_t k = 0;
  const auto dir = std::filesystem::path(path).parent_path();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split_tabs(lines[i]);
    if (f.size() != 2) throw FormatError(path + ": bad manifest line " + std::to_string(i + 1));
    if (f[0] == "k") {
      k = static_cast<std::size_t>(parse_long(f[1]));
    } else if (f[0] == "sample_rate") {
      ensemble.sample_rate = parse_double(f[1]);
    } else if (f[0] == "seed") {
      ensemble.seed = std::stoull(std::string(f[1]));
    } else if (f[0] == "decoder") {
      auto d = decoder_from_name(f[1]);
      if (!d) throw FormatError(path + ": unknown decoder '" + std::string(f[1]) + "'");
      ensemble.decoder = *d;
    } else if (f[0] == "nbest") {
      ensemble.nbest = static_cast<std::size_t>(parse_long(f[1]));
    } else if (f[0] == "member") {
      ensemble.members.push_back(load_model((dir / std::string(f[1])).string()));
    } else {
      throw FormatError(path + ": unknown manifest key '" + std::string(f[0]) + "'");
    }
  }
  if (ensemble.members.size() != k || k == 0) {
    throw FormatError(path + ": manifest lists " + std::to_string(ensemble.members.size()) +
                      " members but k = " + std::to_string(k));
  }
  ensemble.check();
  return ensemble;
}

EnsembleModel load_any(const std::string& path) {
  const auto text = read_file(path);
  if (text.starts_with("bagtag-ensemble")) return load_ensemble(path);
  EnsembleModel ensemble;
  ensemble.members.push_back(load_model(path));
  ensemble.sample_rate = 1.0;
  ensemble.decoder = Decoder::kViterbi;
  return ensemble;
}

}  // namespace bagtag
