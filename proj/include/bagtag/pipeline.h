#ifndef BAGTAG_PIPELINE_H_
#define BAGTAG_PIPELINE_H_

// Training and tagging entry points shared by the CLI, the service and the
// Python module, including the two-stage pipeline in which a stage-1 entity
// model (trained without G and T) supplies the stacked ne_tag column.

#include <optional>
#include <string>
#include <vector>

#include "bagtag/config.h"
#include "bagtag/corpus.h"
#include "bagtag/ensemble.h"
#include "bagtag/perceptron.h"

namespace bagtag {

struct ModelSpec {
  TrainerConfig trainer;
  FeatureConfig features;
  std::size_t k = 1;
  double sample_rate = 0.8;
  std::uint64_t seed = 0;
  Decoder decoder = Decoder::kBeliefPropagation;
  std::size_t nbest = 3;

  static ModelSpec from(const RunConfig& config);
};

struct TrainedEnsemble {
  EnsembleModel ensemble;
  std::vector<TrainingStats> member_stats;
};

// k = 1 trains one model on every sentence; k > 1 bags with every weight at r.
TrainedEnsemble train_ensemble(const Corpus& corpus, const ModelSpec& spec);

// "member,epoch,token_error_rate,updates" rows.
std::string stats_csv(const std::vector<TrainingStats>& stats);

// Copy of `corpus` whose `drop` labels are mapped to OUTSIDE and removed
// from the label set.
Corpus remap_to_outside(const Corpus& corpus, const std::vector<std::string>& drop);

// Stage-1 features: `features` without the ne-window template.
FeatureConfig stage1_features(const FeatureConfig& features);

// Sets ne_tag to the stage-1 prediction on tokens predicted non-OUTSIDE and
// clears it elsewhere.
void fill_ne_tags(const EnsembleModel& stage1, Corpus& corpus);

// A stage-2 tagger with an optional stage-1 entity model in front of it.
struct Tagger {
  std::optional<EnsembleModel> stage1;
  EnsembleModel stage2;
  std::vector<std::string> drop;

  const LabelSet& labels() const { return stage2.labels(); }
  // Runs stage 1 on a copy of the corpus when present, then decodes.
  std::vector<std::vector<LabelId>> tag(const Corpus& corpus) const;
};

// Trains stage 1 on the remapped corpus, fills ne_tag on the training data
// from stage-1 predictions, then trains stage 2 on the full tag set. Throws
// ConfigError when the features lack the ne-window template.
Tagger train_pipeline(const Corpus& corpus, const ModelSpec& spec,
                      const std::vector<std::string>& drop,
                      std::vector<TrainingStats>* stats = nullptr);

// Pipeline manifest: "bagtag-pipeline 1", "drop G,T", "stage1 <file>",
// "stage2 <file>"; stage files are ensemble manifests next to it.
void save_tagger(const Tagger& tagger, const std::string& path);
// Reads a pipeline manifest, an ensemble manifest or a single model file.
Tagger load_tagger(const std::string& path);

}  // namespace bagtag

#endif  // BAGTAG_PIPELINE_H_
