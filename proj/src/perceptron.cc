#include "bagtag/perceptron.h"

#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bagtag/errors.h"
#include "bagtag/random.h"

namespace bagtag {

void TrainerConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (!(error_threshold >= 0.0)) throw ConfigError("error_threshold must be non-negative");
  if (markov_order != 1 && markov_order != 2) throw ConfigError("markov_order must be 1 or 2");
}

std::string TrainingStats::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,token_error_rate,updates\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.token_error_rate << ',' << e.updates << '\n';
  }
  return out.str();
}

namespace {

// Running sum of every per-example snapshot of a weight vector, maintained
// lazily: an entry's contribution is settled only when it changes.
class LazySum {
 public:
  explicit LazySum(std::size_t size) : sum_(size, 0.0), stamp_(size, 0) {}

  // Adds `delta` to weights[i] when `snapshots` snapshots have been taken.
  void update(std::span<double> weights, std::size_t i, double delta, std::uint64_t snapshots) {
    sum_[i] += weights[i] * static_cast<double>(snapshots - stamp_[i]);
    stamp_[i] = snapshots;
    weights[i] += delta;
  }

  std::vector<double> average(std::span<const double> weights, std::uint64_t snapshots) const {
    std::vector<double> out(weights.size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double total = sum_[i] + weights[i] * static_cast<double>(snapshots - stamp_[i]);
      out[i] = snapshots ? total / static_cast<double>(snapshots) : 0.0;
    }
    return out;
  }

 private:
  std::vector<double> sum_;
  std::vector<std::uint64_t> stamp_;
};

}  // namespace

TrainingResult train(const Corpus& corpus, std::span<const std::size_t> subset,
                     const TrainerConfig& tconfig, const FeatureConfig& fconfig,
                     const SnapshotObserver& observer) {
  tconfig.validate();
  if (corpus.empty() || subset.empty()) throw ConfigError("cannot train on an empty corpus");
  if (corpus.labels.empty()) throw ConfigError("corpus has no labels");
  validate_features(fconfig, corpus);

  const std::size_t num_labels = corpus.labels.size();
  FeatureSpace space(fconfig);
  std::vector<SentenceFeatures> features;
  std::vector<std::vector<LabelId>> gold;
  features.reserve(subset.size());
  gold.reserve(subset.size());
  std::size_t total_tokens = 0;
  for (std::size_t index : subset) {
    const Sentence& sentence = corpus.sentences.at(index);
    gold.push_back(sentence.gold_labels());
    features.push_back(space.featurize(sentence));
    total_tokens += sentence.size();
  }

  WeightTable raw(num_labels, tconfig.markov_order, space.stats().values);
  LazySum emission_sum(raw.emissions().size());
  LazySum transition_sum(raw.transitions().size());
  const LabelId start = raw.start();

  auto history = [&](const std::vector<LabelId>& labels, std::size_t p) {
    const LabelId prev = p >= 1 ? labels[p - 1] : start;
    const LabelId older = p >= 2 ? labels[p - 2] : start;
    return raw.transition_index(older, prev, labels[p]);
  };

  TrainingStats stats;
  std::vector<std::size_t> order(subset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(tconfig.shuffle_seed);
  std::uint64_t snapshots = 0;

  for (int epoch = 1; epoch <= tconfig.max_epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t token_errors = 0;
    std::size_t updates = 0;
    for (std::size_t i : order) {
      const auto& y = gold[i];
      const auto z = viterbi(Lattice(raw, features[i])).labels;
      bool mistaken = false;
      auto emissions = raw.mutable_emissions();
      auto transitions = raw.mutable_transitions();
      for (std::size_t p = 0; p < y.size(); ++p) {
        if (z[p] != y[p]) {
          mistaken = true;
          ++token_errors;
          for (FeatureId f : features[i][p]) {
            const std::size_t base = static_cast<std::size_t>(feature_value(f)) * num_labels;
            emission_sum.update(emissions, base + static_cast<std::size_t>(z[p]), -1.0, snapshots);
            emission_sum.update(emissions, base + static_cast<std::size_t>(y[p]), +1.0, snapshots);
          }
        }
        const std::size_t zt = history(z, p);
        const std::size_t yt = history(y, p);
        if (zt != yt) {
          transition_sum.update(transitions, zt, -1.0, snapshots);
          transition_sum.update(transitions, yt, +1.0, snapshots);
        }
      }
      if (mistaken) ++updates;
      ++snapshots;
      if (observer) observer(raw);
    }
    const double rate = static_cast<double>(token_errors) / static_cast<double>(total_tokens);
    stats.epochs.push_back({epoch, rate, updates});
    stats.updates += updates;
    if (rate <= tconfig.error_threshold) break;
  }
  stats.snapshots = snapshots;

  WeightTable averaged(num_labels, tconfig.markov_order, space.stats().values);
  {
    const auto e = emission_sum.average(raw.emissions(), snapshots);
    const auto t = transition_sum.average(raw.transitions(), snapshots);
    std::copy(e.begin(), e.end(), averaged.mutable_emissions().begin());
    std::copy(t.begin(), t.end(), averaged.mutable_transitions().begin());
  }
  return TrainingResult{FhmmModel(corpus.labels, space, std::move(averaged)),
                        FhmmModel(corpus.labels, space, std::move(raw)), std::move(stats)};
}

TrainingResult train(const Corpus& corpus, const TrainerConfig& tconfig,
                     const FeatureConfig& fconfig) {
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), 0);
  return train(corpus, all, tconfig, fconfig);
}

FhmmModel train_unaveraged(const Corpus& corpus, const TrainerConfig& tconfig,
                           const FeatureConfig& fconfig) {
  return train(corpus, tconfig, fconfig).raw;
}

}  // namespace bagtag
