#ifndef BAGTAG_TESTS_SUPPORT_H_
#define BAGTAG_TESTS_SUPPORT_H_

// Test-only helpers: random models, exhaustive-enumeration oracles that share
// no code with the dynamic programs under test, and the planted-FHMM corpus
// generator.

#include <cstdint>
#include <string>
#include <vector>

#include "bagtag/corpus.h"
#include "bagtag/ensemble.h"
#include "bagtag/fhmm.h"
#include "bagtag/random.h"

namespace bagtag::testing {

using Sequence = std::vector<LabelId>;

LabelSet make_labels(std::size_t n);  // "L0".."L{n-1}", L0 outside

// Word-feature model over the vocabulary "w0".."w{vocab-1}" with every
// emission and transition weight uniform in [-scale, scale].
FhmmModel random_model(Rng& rng, std::size_t num_labels, int order, std::size_t vocab,
                       double scale = 5.0);
Sentence random_sentence(Rng& rng, std::size_t length, std::size_t vocab);

// Every |labels|^length sequence in lexicographic order.
std::vector<Sequence> all_sequences(std::size_t length, std::size_t num_labels);

// Score by direct summation over the model's weight table.
double naive_score(const FhmmModel& model, const Sentence& sentence, const Sequence& labels);

struct Enumeration {
  std::vector<Sequence> sequences;  // lexicographic
  std::vector<double> scores;

  std::size_t argmax() const;  // first (lexicographically smallest) maximum
  // Top n, score descending, ties in lexicographic order.
  std::vector<std::size_t> nbest(std::size_t n) const;
  double log_partition() const;
  // Row-major [position][label].
  std::vector<double> marginals(std::size_t num_labels) const;
};

Enumeration enumerate(const FhmmModel& model, const Sentence& sentence);

// Independent reimplementations of the ensemble equations.
Sequence oracle_bvs(const EnsembleModel& ensemble, const Sentence& sentence, std::size_t n);
Sequence oracle_bps(const EnsembleModel& ensemble, const Sentence& sentence);
double oracle_sve(const EnsembleModel& ensemble, const Sentence& sentence, std::size_t n);

// Sentences whose labels are the Viterbi output of a hidden model over
// label-specific and shared ambiguous words. Sentences where the best
// sequence beats the runner-up by less than `margin` are rejected, so the
// corpus is separable with that margin.
struct PlantedConfig {
  std::vector<std::string> labels = {"O", "G", "T", "L"};
  std::size_t words_per_label = 12;
  std::size_t shared_words = 8;
  std::size_t min_length = 5;
  std::size_t max_length = 10;
  double margin = 3.0;
};

class PlantedFhmm {
 public:
  PlantedFhmm(std::uint64_t seed, PlantedConfig config = {});

  const FhmmModel& model() const { return model_; }
  const LabelSet& labels() const { return model_.labels(); }
  // `count` sentences with ids "<prefix><i>".
  Corpus sample(std::size_t count, Rng& rng, const std::string& prefix = "s") const;

 private:
  std::string draw_word(Rng& rng, LabelId label) const;

  PlantedConfig config_;
  FhmmModel model_;
  std::vector<std::vector<double>> chain_;  // label transition probabilities
};

// Uniform-weight ensemble of identical or random members sharing a label set.
EnsembleModel random_ensemble(Rng& rng, std::size_t members, std::size_t num_labels,
                              std::size_t vocab, double scale = 3.0);

}  // namespace bagtag::testing

#endif  // BAGTAG_TESTS_SUPPORT_H_
