#ifndef BAGTAG_PERCEPTRON_H_
#define BAGTAG_PERCEPTRON_H_

// Structured perceptron training of an FHMM with parameter averaging.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bagtag/corpus.h"
#include "bagtag/features.h"
#include "bagtag/fhmm.h"

namespace bagtag {

struct TrainerConfig {
  int max_epochs = 100;
  double error_threshold = 1e-10;
  std::uint64_t shuffle_seed = 0;
  int markov_order = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double token_error_rate = 0.0;
  std::size_t updates = 0;  // examples whose prediction differed from gold
};

struct TrainingStats {
  std::vector<EpochStats> epochs;
  std::size_t updates = 0;
  std::size_t snapshots = 0;

  int epochs_run() const { return static_cast<int>(epochs.size()); }
  // "epoch,token_error_rate,updates" rows.
  std::string to_csv() const;
};

struct TrainingResult {
  FhmmModel model;  // averaged weights
  FhmmModel raw;    // weights after the last update
  TrainingStats stats;
};

// Observation hook for tests: called after every example with the raw
// weights, i.e. at every point where the averaged sum takes a snapshot.
using SnapshotObserver = std::function<void(const WeightTable& raw)>;

// Trains on `corpus` (or the listed sentence indices of it; indices may
// repeat). Every sentence used must be fully labeled. The returned label
// set is the corpus label set.
TrainingResult train(const Corpus& corpus, const TrainerConfig& tconfig,
                     const FeatureConfig& fconfig);
TrainingResult train(const Corpus& corpus, std::span<const std::size_t> subset,
                     const TrainerConfig& tconfig, const FeatureConfig& fconfig,
                     const SnapshotObserver& observer = {});

// The final raw weights, without averaging.
FhmmModel train_unaveraged(const Corpus& corpus, const TrainerConfig& tconfig,
                           const FeatureConfig& fconfig);

}  // namespace bagtag

#endif  // BAGTAG_PERCEPTRON_H_
