#include "support.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

namespace bagtag::testing {

LabelSet make_labels(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("L" + std::to_string(i));
  return LabelSet(names, "L0");
}

namespace {

double uniform_in(Rng& rng, double scale) { return (2.0 * rng.uniform() - 1.0) * scale; }

FeatureConfig word_only() {
  FeatureConfig config;
  config.kinds = {TemplateKind::kWord};
  return config;
}

FhmmModel build_model(LabelSet labels, const std::vector<std::string>& vocab, int order,
                      const std::function<double(std::size_t, LabelId)>& emission,
                      const std::function<double(std::size_t)>& transition) {
  FeatureSpace space(word_only());
  for (const auto& w : vocab) space.intern_named("word", w);
  WeightTable weights(labels.size(), order, vocab.size());
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    for (LabelId l = 0; l < static_cast<LabelId>(labels.size()); ++l) {
      weights.emission_ref(static_cast<std::uint32_t>(v), l) = emission(v, l);
    }
  }
  auto trans = weights.mutable_transitions();
  for (std::size_t i = 0; i < trans.size(); ++i) trans[i] = transition(i);
  return FhmmModel(std::move(labels), std::move(space), std::move(weights));
}

}  // namespace

FhmmModel random_model(Rng& rng, std::size_t num_labels, int order, std::size_t vocab,
                       double scale) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < vocab; ++i) words.push_back("w" + std::to_string(i));
  return build_model(
      make_labels(num_labels), words, order,
      [&](std::size_t, LabelId) { return uniform_in(rng, scale); },
      [&](std::size_t) { return uniform_in(rng, scale); });
}

Sentence random_sentence(Rng& rng, std::size_t length, std::size_t vocab) {
  Sentence s;
  s.id = "r";
  for (std::size_t i = 0; i < length; ++i) {
    Token t;
    t.surface = "w" + std::to_string(rng.below(vocab));
    s.tokens.push_back(std::move(t));
  }
  return s;
}

std::vector<Sequence> all_sequences(std::size_t length, std::size_t num_labels) {
  std::vector<Sequence> out;
  Sequence current(length, 0);
  while (true) {
    out.push_back(current);
    std::size_t i = length;
    while (i > 0) {
      --i;
      if (++current[i] < static_cast<LabelId>(num_labels)) break;
      current[i] = 0;
      if (i == 0) return out;
    }
    if (length == 0) return out;
  }
}

double naive_score(const FhmmModel& model, const Sentence& sentence, const Sequence& labels) {
  const auto& w = model.weights();
  const std::size_t n = w.num_labels();
  const auto start = n;
  const auto emissions = w.emissions();
  const auto transitions = w.transitions();
  const auto features = model.featurize(sentence);
  double total = 0.0;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const auto cur = static_cast<std::size_t>(labels[p]);
    for (FeatureId f : features[p]) {
      const std::size_t i = feature_value(f) * n + cur;
      if (i < emissions.size()) total += emissions[i];
    }
    const std::size_t prev = p >= 1 ? static_cast<std::size_t>(labels[p - 1]) : start;
    const std::size_t older = p >= 2 ? static_cast<std::size_t>(labels[p - 2]) : start;
    const std::size_t key = w.markov_order() == 1 ? prev : older * (n + 1) + prev;
    total += transitions[key * n + cur];
  }
  return total;
}

std::size_t Enumeration::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> Enumeration::nbest(std::size_t n) const {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(n, order.size()));
  return order;
}

double Enumeration::log_partition() const {
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  return m + std::log(sum);
}

std::vector<double> Enumeration::marginals(std::size_t num_labels) const {
  const std::size_t length = sequences.empty() ? 0 : sequences.front().size();
  std::vector<double> out(length * num_labels, 0.0);
  const double z = log_partition();
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const double p = std::exp(scores[i] - z);
    for (std::size_t pos = 0; pos < length; ++pos) {
      out[pos * num_labels + static_cast<std::size_t>(sequences[i][pos])] += p;
    }
  }
  return out;
}

Enumeration enumerate(const FhmmModel& model, const Sentence& sentence) {
  Enumeration e;
  e.sequences = all_sequences(sentence.size(), model.labels().size());
  e.scores.reserve(e.sequences.size());
  for (const auto& seq : e.sequences) e.scores.push_back(naive_score(model, sentence, seq));
  return e;
}

namespace {

struct PooledProbabilities {
  std::vector<Sequence> pool;
  std::vector<std::vector<double>> member;  // [m][j], normalized over the pool
};

PooledProbabilities pooled(const EnsembleModel& ensemble, const Sentence& sentence,
                           std::size_t n) {
  PooledProbabilities out;
  std::map<Sequence, bool> seen;
  for (const auto& m : ensemble.members) {
    const auto e = enumerate(m, sentence);
    for (auto i : e.nbest(n)) {
      if (seen.emplace(e.sequences[i], true).second) out.pool.push_back(e.sequences[i]);
    }
  }
  for (const auto& m : ensemble.members) {
    std::vector<double> scores;
    for (const auto& seq : out.pool) scores.push_back(naive_score(m, sentence, seq));
    const double top = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& s : scores) {
      s = std::exp(s - top);
      sum += s;
    }
    for (double& s : scores) s /= sum;
    out.member.push_back(std::move(scores));
  }
  return out;
}

}  // namespace

Sequence oracle_bvs(const EnsembleModel& ensemble, const Sentence& sentence, std::size_t n) {
  const auto p = pooled(ensemble, sentence, n);
  std::size_t best = 0;
  double best_total = -1.0;
  for (std::size_t j = 0; j < p.pool.size(); ++j) {
    double total = 0.0;
    for (const auto& m : p.member) total += m[j];
    if (total > best_total || (total == best_total && p.pool[j] < p.pool[best])) {
      best = j;
      best_total = total;
    }
  }
  return p.pool[best];
}

Sequence oracle_bps(const EnsembleModel& ensemble, const Sentence& sentence) {
  const std::size_t labels = ensemble.labels().size();
  std::vector<double> total(sentence.size() * labels, 0.0);
  for (const auto& m : ensemble.members) {
    const auto marg = enumerate(m, sentence).marginals(labels);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += marg[i];
  }
  Sequence out(sentence.size(), 0);
  for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
    for (std::size_t l = 1; l < labels; ++l) {
      if (total[pos * labels + l] > total[pos * labels + static_cast<std::size_t>(out[pos])]) {
        out[pos] = static_cast<LabelId>(l);
      }
    }
  }
  return out;
}

double oracle_sve(const EnsembleModel& ensemble, const Sentence& sentence, std::size_t n) {
  const auto p = pooled(ensemble, sentence, n);
  if (p.pool.size() == 1) return 0.0;
  std::vector<double> avg(p.pool.size(), 0.0);
  for (const auto& m : p.member) {
    for (std::size_t j = 0; j < avg.size(); ++j) avg[j] += m[j] / static_cast<double>(p.member.size());
  }
  const double sum = std::accumulate(avg.begin(), avg.end(), 0.0);
  double h = 0.0;
  for (double a : avg) {
    const double q = a / sum;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

namespace {

std::vector<std::string> planted_vocab(const PlantedConfig& config) {
  std::vector<std::string> words;
  for (const auto& label : config.labels) {
    for (std::size_t i = 0; i < config.words_per_label; ++i) {
      words.push_back(to_lower(label) + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < config.shared_words; ++i) words.push_back("x" + std::to_string(i));
  return words;
}

FhmmModel planted_model(Rng& rng, const PlantedConfig& config) {
  const auto vocab = planted_vocab(config);
  const std::size_t own = config.labels.size() * config.words_per_label;
  return build_model(
      LabelSet(config.labels, config.labels.front()), vocab, 1,
      [&](std::size_t v, LabelId l) {
        if (v < own) {
          return v / config.words_per_label == static_cast<std::size_t>(l)
                     ? 4.0 + uniform_in(rng, 0.5)
                     : uniform_in(rng, 0.5);
        }
        return uniform_in(rng, 1.5);
      },
      [&](std::size_t) { return uniform_in(rng, 1.0); });
}

}  // namespace

PlantedFhmm::PlantedFhmm(std::uint64_t seed, PlantedConfig config)
    : config_(std::move(config)),
      model_([&] {
        Rng rng(derive_seed(seed, 0x706c616e74));
        return planted_model(rng, config_);
      }()) {
  const std::size_t n = config_.labels.size();
  // Row n is the start distribution; label 0 is OUTSIDE.
  chain_.assign(n + 1, std::vector<double>(n, 0.0));
  for (std::size_t from = 0; from <= n; ++from) {
    const bool outside = from == 0 || from == n;
    for (std::size_t to = 0; to < n; ++to) {
      if (outside) {
        chain_[from][to] = to == 0 ? 0.6 : 0.4 / static_cast<double>(n - 1);
      } else if (to == from) {
        chain_[from][to] = 0.5;
      } else if (to == 0) {
        chain_[from][to] = 0.35;
      } else {
        chain_[from][to] = 0.15 / static_cast<double>(n - 2);
      }
    }
  }
}

std::string PlantedFhmm::draw_word(Rng& rng, LabelId label) const {
  if (config_.shared_words > 0 && rng.uniform() < 0.25) {
    return "x" + std::to_string(rng.below(config_.shared_words));
  }
  return to_lower(config_.labels[static_cast<std::size_t>(label)]) +
         std::to_string(rng.below(config_.words_per_label));
}

Corpus PlantedFhmm::sample(std::size_t count, Rng& rng, const std::string& prefix) const {
  Corpus corpus;
  corpus.labels = model_.labels();
  const std::size_t n = config_.labels.size();
  while (corpus.size() < count) {
    const std::size_t length =
        config_.min_length + rng.below(config_.max_length - config_.min_length + 1);
    Sentence s;
    s.id = prefix + std::to_string(corpus.size());
    std::size_t state = n;
    for (std::size_t i = 0; i < length; ++i) {
      double u = rng.uniform();
      std::size_t next = n - 1;
      for (std::size_t l = 0; l < n; ++l) {
        if (u < chain_[state][l]) {
          next = l;
          break;
        }
        u -= chain_[state][l];
      }
      Token t;
      t.surface = draw_word(rng, static_cast<LabelId>(next));
      s.tokens.push_back(std::move(t));
      state = next;
    }
    const auto best = viterbi_nbest(model_, s, 2);
    if (best.size() == 2 && best[0].score - best[1].score < config_.margin) continue;
    for (std::size_t i = 0; i < s.size(); ++i) s.tokens[i].gold = best[0].labels[i];
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

EnsembleModel random_ensemble(Rng& rng, std::size_t members, std::size_t num_labels,
                              std::size_t vocab, double scale) {
  EnsembleModel e;
  for (std::size_t m = 0; m < members; ++m) {
    e.members.push_back(random_model(rng, num_labels, 1, vocab, scale));
  }
  return e;
}

}  // namespace bagtag::testing
