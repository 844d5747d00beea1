#include "bagtag/pipeline.h"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "bagtag/errors.h"
#include "bagtag/model_io.h"

namespace bagtag {

ModelSpec ModelSpec::from(const RunConfig& config) {
  ModelSpec spec;
  spec.trainer = config.trainer;
  spec.features = config.features;
  spec.k = config.ensemble.k;
  spec.sample_rate = config.ensemble.sample_rate;
  spec.seed = config.ensemble.seed;
  spec.decoder = config.ensemble.decoder;
  spec.nbest = config.ensemble.nbest;
  return spec;
}

TrainedEnsemble train_ensemble(const Corpus& corpus, const ModelSpec& spec) {
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  TrainedEnsemble out;
  if (spec.k <= 1) {
    std::vector<std::size_t> all(corpus.size());
    std::iota(all.begin(), all.end(), 0);
    auto result = train(corpus, all, spec.trainer, spec.features);
    out.ensemble.members.push_back(std::move(result.model));
    out.member_stats.push_back(std::move(result.stats));
    out.ensemble.sample_rate = 1.0;
  } else {
    const SampleWeights weights(corpus.size(), spec.sample_rate);
    const auto draws = bag_draws(weights, spec.k, spec.seed);
    for (const auto& draw : draws) {
      auto result = train(corpus, draw, spec.trainer, spec.features);
      out.ensemble.members.push_back(std::move(result.model));
      out.member_stats.push_back(std::move(result.stats));
    }
    out.ensemble.sample_rate = spec.sample_rate;
  }
  out.ensemble.seed = spec.seed;
  out.ensemble.decoder = spec.decoder;
  out.ensemble.nbest = spec.nbest;
  return out;
}

std::string stats_csv(const std::vector<TrainingStats>& stats) {
  std::ostringstream out;
  out << "member,epoch,token_error_rate,updates\n";
  for (std::size_t m = 0; m < stats.size(); ++m) {
    for (const auto& e : stats[m].epochs) {
      out << m << ',' << e.epoch << ',' << format_double(e.token_error_rate) << ',' << e.updates
          << '\n';
    }
  }
  return out.str();
}

Corpus remap_to_outside(const Corpus& corpus, const std::vector<std::string>& drop) {
  const auto& old = corpus.labels;
  if (!old.has_outside()) throw ConfigError("corpus has no OUTSIDE label");
  const std::string outside = old.name(old.outside());
  std::vector<std::string> kept;
  for (const auto& name : old.names()) {
    if (name == outside || std::find(drop.begin(), drop.end(), name) == drop.end()) {
      kept.push_back(name);
    }
  }
  Corpus out;
  out.labels = LabelSet(kept, outside);
  const LabelId new_outside = out.labels.outside();
  out.sentences = corpus.sentences;
  for (auto& s : out.sentences) {
    for (auto& t : s.tokens) {
      if (!t.gold) continue;
      auto id = out.labels.find(old.name(*t.gold));
      t.gold = id ? *id : new_outside;
    }
  }
  return out;
}

FeatureConfig stage1_features(const FeatureConfig& features) {
  FeatureConfig out = features;
  std::erase(out.kinds, TemplateKind::kNeTagWindow);
  return out;
}

void fill_ne_tags(const EnsembleModel& stage1, Corpus& corpus) {
  const auto& labels = stage1.labels();
  for (auto& s : corpus.sentences) {
    for (auto& t : s.tokens) t.ne_tag.reset();
    if (s.size() == 0) continue;
    const auto predicted = decode(stage1, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (predicted[i] != labels.outside()) s.tokens[i].ne_tag = labels.name(predicted[i]);
    }
  }
}

std::vector<std::vector<LabelId>> Tagger::tag(const Corpus& corpus) const {
  std::vector<std::vector<LabelId>> out;
  out.reserve(corpus.size());
  if (!stage1) {
    for (const auto& s : corpus.sentences) out.push_back(decode(stage2, s));
    return out;
  }
  Corpus staged = corpus;
  fill_ne_tags(*stage1, staged);
  for (const auto& s : staged.sentences) out.push_back(decode(stage2, s));
  return out;
}

Tagger train_pipeline(const Corpus& corpus, const ModelSpec& spec,
                      const std::vector<std::string>& drop, std::vector<TrainingStats>* stats) {
  if (!spec.features.uses(TemplateKind::kNeTagWindow)) {
    throw ConfigError("the two-stage pipeline needs the ne-window feature template");
  }
  ModelSpec first = spec;
  first.features = stage1_features(spec.features);
  auto stage1 = train_ensemble(remap_to_outside(corpus, drop), first);

  Corpus staged = corpus;
  fill_ne_tags(stage1.ensemble, staged);
  auto stage2 = train_ensemble(staged, spec);
  if (stats) {
    *stats = stage1.member_stats;
    stats->insert(stats->end(), stage2.member_stats.begin(), stage2.member_stats.end());
  }
  Tagger tagger;
  tagger.stage1 = std::move(stage1.ensemble);
  tagger.stage2 = std::move(stage2.ensemble);
  tagger.drop = drop;
  return tagger;
}

void save_tagger(const Tagger& tagger, const std::string& path) {
  if (!tagger.stage1) {
    if (tagger.stage2.size() == 1 && tagger.stage2.decoder == Decoder::kViterbi) {
      save_model(tagger.stage2.members.front(), path);
    } else {
      save_ensemble(tagger.stage2, path);
    }
    return;
  }
  const std::filesystem::path manifest(path);
  const std::string base = manifest.filename().string();
  save_ensemble(*tagger.stage1, (manifest.parent_path() / (base + ".stage1")).string());
  save_ensemble(tagger.stage2, (manifest.parent_path() / (base + ".stage2")).string());
  std::ostringstream out;
  out << "bagtag-pipeline\t1\n";
  out << "drop\t";
  for (std::size_t i = 0; i < tagger.drop.size(); ++i) out << (i ? "," : "") << tagger.drop[i];
  out << '\n';
  out << "stage1\t" << base << ".stage1\n";
  out << "stage2\t" << base << ".stage2\n";
  write_file(path, out.str());
}

Tagger load_tagger(const std::string& path) {
  const auto text = read_file(path);
  Tagger tagger;
  if (!text.starts_with("bagtag-pipeline")) {
    tagger.stage2 = load_any(path);
    return tagger;
  }
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "bagtag-pipeline\t1") {
    throw FormatError(path + ": unsupported pipeline version line '" + line + "'");
  }
  const auto dir = std::filesystem::path(path).parent_path();
  bool have_stage2 = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path + ": bad line '" + line + "'");
    const auto key = line.substr(0, tab);
    const auto value = line.substr(tab + 1);
    if (key == "drop") {
      tagger.drop.clear();
      std::istringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        if (!item.empty()) tagger.drop.push_back(item);
      }
    } else if (key == "stage1") {
      tagger.stage1 = load_any((dir / value).string());
    } else if (key == "stage2") {
      tagger.stage2 = load_any((dir / value).string());
      have_stage2 = true;
    } else {
      throw FormatError(path + ": unknown pipeline key '" + key + "'");
    }
  }
  if (!tagger.stage1 || !have_stage2) throw FormatError(path + ": pipeline lacks a stage");
  return tagger;
}

}  // namespace bagtag
