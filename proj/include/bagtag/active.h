#ifndef BAGTAG_ACTIVE_H_
#define BAGTAG_ACTIVE_H_

// Query-by-bagging active learning: Sequence Vote Entropy utility,
// sentence re-weighting, a random-selection baseline, and the round loop.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bagtag/corpus.h"
#include "bagtag/ensemble.h"
#include "bagtag/features.h"
#include "bagtag/perceptron.h"
#include "bagtag/random.h"

namespace bagtag {

enum class Selection { kUtility, kRandom };
// kDecay subtracts the current step 2(1-r)/(t-1) from every existing weight
// each round. kLiteral evaluates max(1 - alpha (t-1), r) directly.
enum class ReweightMode { kDecay, kLiteral };

std::string_view selection_name(Selection selection);  // "utl" / "rnd"
std::optional<Selection> selection_from_name(std::string_view name);
std::optional<ReweightMode> reweight_mode_from_name(std::string_view name);

struct ALConfig {
  std::size_t initial = 5;        // I
  std::size_t batch = 1;          // K
  std::size_t rounds = 10;        // t_max
  double sample_rate = 0.8;       // r
  std::size_t nbest = 3;          // n
  std::size_t ensemble_size = 5;  // k
  Decoder decoder = Decoder::kBeliefPropagation;
  bool reweight = true;
  Selection selection = Selection::kUtility;
  ReweightMode reweight_mode = ReweightMode::kDecay;
  std::uint64_t seed = 0;
  TrainerConfig trainer;
  FeatureConfig features = FeatureConfig::for_profile(Profile::kEst);

  void validate() const;
  // e.g. "bp-rw-utl"
  std::string flags() const;
};

struct Pool {
  Corpus labeled;           // T
  SampleWeights weights;    // aligned with T
  Corpus unlabeled;         // U, gold removed
};

// Entropy of the ensemble-averaged, pool-normalized probabilities of the
// pooled n-best sequences. Zero when the pool is a single sequence.
double sve_utility(const EnsembleModel& ensemble, const Sentence& sentence, std::size_t n);

// Uniform in [0, 1); the sentence is not inspected.
double random_utility(Rng& rng, const Sentence& sentence);

// The step alpha_t = 2(1-r)/(t-1), with alpha_1 = 0.
double decay_step(std::size_t t, double r);

// Weights for round t: existing weights decay (floored at r) and
// `newly_labeled` entries are appended at 1.
SampleWeights reweight(std::span<const double> weights, std::size_t newly_labeled,
                       std::size_t t, double r, ReweightMode mode = ReweightMode::kDecay);

struct CurveRow {
  std::size_t round = 0;
  std::size_t labeled_count = 0;
  Decoder decoder = Decoder::kBeliefPropagation;
  bool reweight = true;
  Selection selection = Selection::kUtility;
  double micro_f1 = 0.0;
  std::vector<double> type_f1;
  double seconds = 0.0;
};

struct LearningCurve {
  std::vector<std::string> types;
  std::vector<CurveRow> rows;

  // "round,labeled_count,decoder,reweight,selection,micro_f1,f1_<type>...,seconds".
  // Without `timing` the seconds column is written as 0 so that reruns are
  // byte-identical.
  std::string to_csv(bool timing = false) const;
};

// Source of gold labels. Returning nullopt means the sentence was refused.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::optional<std::vector<LabelId>> label(const Sentence& sentence) = 0;
};

// Reveals hidden gold labels by sentence id.
class SimulatedOracle : public Oracle {
 public:
  explicit SimulatedOracle(const Corpus& gold);
  std::optional<std::vector<LabelId>> label(const Sentence& sentence) override;
  std::size_t queries() const { return queries_; }

 private:
  std::unordered_map<std::string, std::vector<LabelId>> gold_;
  std::size_t queries_ = 0;
};

struct LabeledExample {
  std::string id;
  std::vector<LabelId> labels;
};

// Holds the pool, the current ensemble and the learning curve, and advances
// one round per commit. Round 0 labels the first I examples of U in corpus
// order; every later round labels the top K of U by utility.
class ActiveLearner {
 public:
  enum class Phase { kSeeding, kActive, kDone };

  // `unlabeled` must not carry gold labels; `test` may be empty.
  ActiveLearner(Corpus unlabeled, ALConfig config, Corpus test);

  const ALConfig& config() const { return config_; }
  const Pool& pool() const { return pool_; }
  const LabelSet& labels() const { return pool_.unlabeled.labels; }
  const LearningCurve& curve() const { return curve_; }
  const std::optional<EnsembleModel>& ensemble() const { return ensemble_; }
  Phase phase() const;
  // Number of completed rounds; the round-0 seed commit counts as one.
  std::size_t rounds_completed() const { return rounds_completed_; }

  // Ids of the examples to label next, in labeling order. Empty when done.
  std::vector<std::string> next_batch() const;
  // Utility of every unlabeled example under the current ensemble.
  const std::vector<double>& utilities() const;
  const Sentence* find_unlabeled(std::string_view id) const;

  // Moves the examples to T, re-weights, retrains, evaluates on the test set
  // and appends a curve row. Throws std::invalid_argument, leaving the state
  // untouched, if an id is not unlabeled or a label sequence has the wrong length.
  void commit(const std::vector<LabeledExample>& labeled);

  enum class Step { kAdvanced, kSuspended, kFinished };
  // Labels the next batch through `oracle` and commits it. If the oracle
  // refuses any sentence nothing is committed and kSuspended is returned.
  Step step(Oracle& oracle);

  // Restores a learner from persisted state by replaying committed batches.
  void replay(const std::vector<std::vector<LabeledExample>>& batches);
  const std::vector<std::vector<LabeledExample>>& history() const { return history_; }

 private:
  ALConfig config_;
  Pool pool_;
  Corpus test_;
  std::optional<EnsembleModel> ensemble_;
  LearningCurve curve_;
  std::size_t rounds_completed_ = 0;
  std::vector<std::vector<LabeledExample>> history_;
  mutable std::optional<std::vector<double>> utilities_;
};

// Runs the loop to completion with `oracle`. Stops early, returning the
// curve so far, if the oracle refuses a sentence.
LearningCurve run_active_learning(Corpus unlabeled, const ALConfig& config, Oracle& oracle,
                                  const Corpus& test);

// Decodes every test sentence with the ensemble's decoder and scores it.
EvalReport evaluate_ensemble(const EnsembleModel& ensemble, const Corpus& test);

}  // namespace bagtag

#endif  // BAGTAG_ACTIVE_H_
