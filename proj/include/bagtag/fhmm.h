#ifndef BAGTAG_FHMM_H_
#define BAGTAG_FHMM_H_

// Featurized HMM: a chain model whose sequence score is the sum of
// per-token feature weights and label-transition weights. Exact Viterbi,
// n-best and forward-backward decoding over that score.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bagtag/corpus.h"
#include "bagtag/features.h"

namespace bagtag {

// Emission weights indexed by (feature value, label) and transition weights
// indexed by label history. The pseudo-label `start()` pads histories
// before the first token. Entries that were never written read as 0.
class WeightTable {
 public:
  WeightTable() = default;
  WeightTable(std::size_t num_labels, int markov_order, std::size_t num_values = 0);

  std::size_t num_labels() const { return num_labels_; }
  int markov_order() const { return order_; }
  std::size_t num_values() const { return num_labels_ ? emissions_.size() / num_labels_ : 0; }
  LabelId start() const { return static_cast<LabelId>(num_labels_); }

  void resize_values(std::size_t num_values);

  double emission(std::uint32_t value, LabelId label) const {
    const std::size_t i = static_cast<std::size_t>(value) * num_labels_ + label;
    return i < emissions_.size() ? emissions_[i] : 0.0;
  }
  double& emission_ref(std::uint32_t value, LabelId label);

  // `older` is ignored for first-order tables.
  std::size_t transition_index(LabelId older, LabelId prev, LabelId cur) const;
  double transition(LabelId older, LabelId prev, LabelId cur) const {
    return transitions_[transition_index(older, prev, cur)];
  }
  double& transition_ref(LabelId older, LabelId prev, LabelId cur) {
    return transitions_[transition_index(older, prev, cur)];
  }
  // First-order convenience.
  double transition(LabelId prev, LabelId cur) const { return transition(start(), prev, cur); }

  std::span<const double> emissions() const { return emissions_; }
  std::span<const double> transitions() const { return transitions_; }
  std::span<double> mutable_emissions() { return emissions_; }
  std::span<double> mutable_transitions() { return transitions_; }

  bool operator==(const WeightTable&) const = default;

 private:
  std::size_t num_labels_ = 0;
  int order_ = 1;
  std::vector<double> emissions_;
  std::vector<double> transitions_;
};

// The transition weight that applies at `position` for `labels`.
double transition_at(const WeightTable& weights, std::span<const LabelId> labels,
                     std::size_t position);

// Memoized per-position emission scores plus a view of the transition table.
class Lattice {
 public:
  Lattice(const WeightTable& weights, const SentenceFeatures& features);

  std::size_t length() const { return length_; }
  std::size_t num_labels() const { return num_labels_; }
  int markov_order() const { return weights_->markov_order(); }
  const WeightTable& weights() const { return *weights_; }

  double emission(std::size_t position, LabelId label) const {
    return emissions_[position * num_labels_ + label];
  }
  double score(std::span<const LabelId> labels) const;

 private:
  const WeightTable* weights_;
  std::size_t length_;
  std::size_t num_labels_;
  std::vector<double> emissions_;
};

struct Decoded {
  std::vector<LabelId> labels;
  double score = 0.0;
};

struct ScoredSequence {
  std::vector<LabelId> labels;
  double score = 0.0;
};

// Descending score, ties broken toward the lexicographically smaller sequence.
using NBestList = std::vector<ScoredSequence>;

struct Marginals {
  std::size_t length = 0;
  std::size_t num_labels = 0;
  std::vector<double> probs;  // row-major [position][label]
  double log_partition = 0.0;

  double at(std::size_t position, LabelId label) const {
    return probs[position * num_labels + label];
  }
};

// Highest-scoring sequence; among exact ties the lexicographically smallest.
Decoded viterbi(const Lattice& lattice);
// Exact top-n; shorter when fewer than n sequences exist. n must be >= 1.
NBestList viterbi_nbest(const Lattice& lattice, std::size_t n);
// Token posteriors of exp(score)/Z, computed in log space.
Marginals forward_backward(const Lattice& lattice);
double log_partition(const Lattice& lattice);

class FhmmModel {
 public:
  FhmmModel(LabelSet labels, FeatureSpace features, WeightTable weights);

  const LabelSet& labels() const { return labels_; }
  const FeatureSpace& features() const { return features_; }
  const FeatureConfig& feature_config() const { return features_.config(); }
  const WeightTable& weights() const { return weights_; }
  int markov_order() const { return weights_.markov_order(); }

  // Feature ids known to the model; unseen values are dropped.
  SentenceFeatures featurize(const Sentence& sentence) const {
    return features_.lookup_all(sentence);
  }
  Lattice lattice(const Sentence& sentence) const;

 private:
  LabelSet labels_;
  FeatureSpace features_;
  WeightTable weights_;
};

double score_sequence(const FhmmModel& model, const Sentence& sentence,
                      std::span<const LabelId> labels);
Decoded viterbi(const FhmmModel& model, const Sentence& sentence);
NBestList viterbi_nbest(const FhmmModel& model, const Sentence& sentence, std::size_t n);
Marginals forward_backward(const FhmmModel& model, const Sentence& sentence);
// exp(score - log Z): the sequence's mass under the normalized distribution.
double sequence_probability(const FhmmModel& model, const Sentence& sentence,
                            std::span<const LabelId> labels);

double log_sum_exp(std::span<const double> values);

}  // namespace bagtag

#endif  // BAGTAG_FHMM_H_
