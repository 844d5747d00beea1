#ifndef BAGTAG_CONFIG_H_
#define BAGTAG_CONFIG_H_

// Run configuration: an INI file with sections, overridable per key from
// the command line ("section.key=value"). configs/README.md lists every key.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bagtag/active.h"
#include "bagtag/corpus.h"
#include "bagtag/ensemble.h"
#include "bagtag/features.h"
#include "bagtag/perceptron.h"

namespace bagtag {

struct DataConfig {
  std::string train;
  std::string test;
  std::string pool;
  std::string columns = "surface,pos,gold";
  std::string outside = std::string(kDefaultOutside);
  // When no test file is given, this fraction of the training data is held out.
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  // Label inventory declared up front, in this order; labels found in the
  // data are appended after it.
  std::vector<std::string> labels;

  ColumnMap column_map() const;
  // `labels` plus OUTSIDE, or an empty set when `labels` is empty.
  LabelSet base_labels() const;
};

struct EnsembleConfig {
  std::size_t k = 1;
  double sample_rate = 0.8;
  std::uint64_t seed = 0;
  Decoder decoder = Decoder::kBeliefPropagation;
  std::size_t nbest = 3;
};

struct ActiveConfig {
  std::size_t initial = 5;
  std::size_t batch = 1;
  std::size_t rounds = 10;
  bool reweight = true;
  ReweightMode reweight_mode = ReweightMode::kDecay;
  Selection selection = Selection::kUtility;
  bool grid = false;            // al-simulate runs all 8 flag combinations
  std::vector<std::uint64_t> seeds = {0};
  bool timing = false;          // write measured seconds into curve CSVs
};

struct OutputConfig {
  std::string model = "model.fhmm";
  std::string stats;            // training stats CSV
  std::string tagged;           // empty = standard output
  std::string curve_dir = "curves";
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string state = "session.json";
  std::string audit = "session.audit.jsonl";
};

struct PipelineConfig {
  bool enabled = false;
  // Labels remapped to OUTSIDE for the stage-1 model.
  std::vector<std::string> drop = {"G", "T"};
};

struct RunConfig {
  DataConfig data;
  Profile profile = Profile::kEst;
  FeatureConfig features = FeatureConfig::for_profile(Profile::kEst);
  TrainerConfig trainer;
  EnsembleConfig ensemble;
  ActiveConfig active;
  OutputConfig output;
  ServeConfig serve;
  PipelineConfig pipeline;

  // Applies "section.key=value"; throws ConfigError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  // The active-learning configuration for one flag combination and seed.
  ALConfig al_config(std::uint64_t seed) const;
};

// Parses INI text. Unknown sections or keys are errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
// Applies overrides of the form "section.key=value".
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

}  // namespace bagtag

#endif  // BAGTAG_CONFIG_H_
