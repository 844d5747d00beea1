#ifndef BAGTAG_ENSEMBLE_H_
#define BAGTAG_ENSEMBLE_H_

// Bagged FHMM ensembles and their two decoders: Best Viterbi Sequence
// (vote over pooled n-best sequences) and Best BP Sequence (vote over
// per-token posteriors).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bagtag/corpus.h"
#include "bagtag/features.h"
#include "bagtag/fhmm.h"
#include "bagtag/perceptron.h"

namespace bagtag {

enum class Decoder { kViterbi, kBeliefPropagation };

std::string_view decoder_name(Decoder decoder);  // "vt" / "bp"
std::optional<Decoder> decoder_from_name(std::string_view name);

struct EnsembleModel {
  std::vector<FhmmModel> members;
  double sample_rate = 0.8;
  std::uint64_t seed = 0;
  Decoder decoder = Decoder::kBeliefPropagation;
  std::size_t nbest = 1;

  std::size_t size() const { return members.size(); }
  const LabelSet& labels() const { return members.front().labels(); }
  // Throws std::invalid_argument unless the members agree on labels and features.
  void check() const;
};

// Per-example inclusion probabilities, each within [r, 1].
using SampleWeights = std::vector<double>;

// Per-member lists of included example indices: example i enters member m
// with probability weights[i], drawn independently. A member with an empty
// draw gets one uniformly chosen example instead.
std::vector<std::vector<std::size_t>> bag_draws(std::span<const double> weights, std::size_t k,
                                                std::uint64_t seed);

// Trains k members on their bag_draws subsets. All members share the
// trainer configuration, including its shuffle seed.
EnsembleModel bag_train(const Corpus& labeled, std::span<const double> weights, std::size_t k,
                        const TrainerConfig& tconfig, const FeatureConfig& fconfig,
                        std::uint64_t seed, double sample_rate = 0.8);

// Unique sequences from every member's n-best list, in member order then rank.
std::vector<std::vector<LabelId>> pool_nbest(std::span<const Lattice> lattices, std::size_t n);

// Probability of each pooled sequence under each member, normalized over
// the pool: result[m][j].
std::vector<std::vector<double>> pooled_probabilities(
    std::span<const Lattice> lattices, const std::vector<std::vector<LabelId>>& pool);

std::vector<Lattice> member_lattices(const EnsembleModel& ensemble, const Sentence& sentence);

std::vector<LabelId> decode_bvs(const EnsembleModel& ensemble, const Sentence& sentence,
                                std::size_t n);

// Sum of member marginals, row-major [position][label].
std::vector<double> bps_aggregate(const EnsembleModel& ensemble, const Sentence& sentence);
std::vector<LabelId> decode_bps(const EnsembleModel& ensemble, const Sentence& sentence);

// Decodes with the ensemble's configured decoder and n-best size.
std::vector<LabelId> decode(const EnsembleModel& ensemble, const Sentence& sentence);

}  // namespace bagtag

#endif  // BAGTAG_ENSEMBLE_H_
