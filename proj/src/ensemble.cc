#include "bagtag/ensemble.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "bagtag/errors.h"
#include "bagtag/random.h"

namespace bagtag {

std::string_view decoder_name(Decoder decoder) {
  return decoder == Decoder::kViterbi ? "vt" : "bp";
}

std::optional<Decoder> decoder_from_name(std::string_view name) {
  if (name == "vt" || name == "viterbi") return Decoder::kViterbi;
  if (name == "bp") return Decoder::kBeliefPropagation;
  return std::nullopt;
}

void EnsembleModel::check() const {
  if (members.empty()) throw std::invalid_argument("ensemble has no members");
  for (const auto& m : members) {
    if (!(m.labels() == members.front().labels()) ||
        !(m.feature_config() == members.front().feature_config())) {
      throw std::invalid_argument("ensemble members disagree on labels or features");
    }
  }
}

std::vector<std::vector<std::size_t>> bag_draws(std::span<const double> weights, std::size_t k,
                                                std::uint64_t seed) {
  if (weights.empty()) throw ConfigError("cannot bag an empty labeled set");
  std::vector<std::vector<std::size_t>> draws(k);
  for (std::size_t m = 0; m < k; ++m) {
    Rng rng(derive_seed(seed, m));
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (rng.bernoulli(weights[i])) draws[m].push_back(i);
    }
    if (draws[m].empty()) draws[m].push_back(static_cast<std::size_t>(rng.below(weights.size())));
  }
  return draws;
}

EnsembleModel bag_train(const Corpus& labeled, std::span<const double> weights, std::size_t k,
                        const TrainerConfig& tconfig, const FeatureConfig& fconfig,
                        std::uint64_t seed, double sample_rate) {
  if (labeled.empty()) throw ConfigError("cannot bag an empty labeled set");
  if (k < 1) throw ConfigError("ensemble size must be at least 1");
  if (weights.size() != labeled.size()) {
    throw std::invalid_argument("sample weights are not aligned with the labeled set");
  }
  const auto draws = bag_draws(weights, k, seed);
  EnsembleModel ensemble;
  ensemble.sample_rate = sample_rate;
  ensemble.seed = seed;
  ensemble.members.reserve(k);
  for (const auto& draw : draws) {
    ensemble.members.push_back(train(labeled, draw, tconfig, fconfig).model);
  }
  return ensemble;
}

std::vector<Lattice> member_lattices(const EnsembleModel& ensemble, const Sentence& sentence) {
  std::vector<Lattice> out;
  out.reserve(ensemble.size());
  for (const auto& m : ensemble.members) out.push_back(m.lattice(sentence));
  return out;
}

std::vector<std::vector<LabelId>> pool_nbest(std::span<const Lattice> lattices, std::size_t n) {
  std::vector<std::vector<LabelId>> pool;
  std::map<std::vector<LabelId>, std::size_t> seen;
  for (const auto& lattice : lattices) {
    for (auto& entry : viterbi_nbest(lattice, n)) {
      if (seen.emplace(entry.labels, pool.size()).second) pool.push_back(std::move(entry.labels));
    }
  }
  return pool;
}

std::vector<std::vector<double>> pooled_probabilities(
    std::span<const Lattice> lattices, const std::vector<std::vector<LabelId>>& pool) {
  std::vector<std::vector<double>> out;
  out.reserve(lattices.size());
  std::vector<double> scores(pool.size());
  for (const auto& lattice : lattices) {
    for (std::size_t j = 0; j < pool.size(); ++j) scores[j] = lattice.score(pool[j]);
    const double z = log_sum_exp(scores);
    std::vector<double> probs(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) probs[j] = std::exp(scores[j] - z);
    out.push_back(std::move(probs));
  }
  return out;
}

std::vector<LabelId> decode_bvs(const EnsembleModel& ensemble, const Sentence& sentence,
                                std::size_t n) {
  if (n < 1) throw std::invalid_argument("n-best size must be at least 1");
  const auto lattices = member_lattices(ensemble, sentence);
  const auto pool = pool_nbest(lattices, n);
  const auto probs = pooled_probabilities(lattices, pool);
  std::size_t best = 0;
  double best_total = -1.0;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    double total = 0.0;
    for (const auto& member : probs) total += member[j];
    if (total > best_total || (total == best_total && pool[j] < pool[best])) {
      best = j;
      best_total = total;
    }
  }
  return pool[best];
}

std::vector<double> bps_aggregate(const EnsembleModel& ensemble, const Sentence& sentence) {
  const std::size_t labels = ensemble.labels().size();
  std::vector<double> total(sentence.size() * labels, 0.0);
  for (const auto& member : ensemble.members) {
    const auto marginals = forward_backward(member, sentence);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += marginals.probs[i];
  }
  return total;
}

std::vector<LabelId> decode_bps(const EnsembleModel& ensemble, const Sentence& sentence) {
  const std::size_t labels = ensemble.labels().size();
  const auto total = bps_aggregate(ensemble, sentence);
  std::vector<LabelId> out(sentence.size(), 0);
  for (std::size_t p = 0; p < sentence.size(); ++p) {
    const double* row = total.data() + p * labels;
    // max_element keeps the first maximum, i.e. the lowest label index.
    out[p] = static_cast<LabelId>(std::max_element(row, row + labels) - row);
  }
  return out;
}

std::vector<LabelId> decode(const EnsembleModel& ensemble, const Sentence& sentence) {
  return ensemble.decoder == Decoder::kViterbi ? decode_bvs(ensemble, sentence, ensemble.nbest)
                                               : decode_bps(ensemble, sentence);
}

}  // namespace bagtag
