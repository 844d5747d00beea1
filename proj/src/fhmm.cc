#include "bagtag/fhmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bagtag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// State space of the decoding chain. First order: one state per label.
// Second order: one state per (previous label, label) pair, where the
// previous label is the start symbol only at position 0.
class Chain {
 public:
  explicit Chain(const Lattice& lattice)
      : lattice_(lattice),
        weights_(lattice.weights()),
        labels_(static_cast<LabelId>(lattice.num_labels())),
        order_(lattice.markov_order()) {}

  std::size_t num_states() const {
    const auto l = static_cast<std::size_t>(labels_);
    return order_ == 1 ? l : (l + 1) * l;
  }
  LabelId labels() const { return labels_; }
  LabelId label(std::size_t state) const {
    return static_cast<LabelId>(state % static_cast<std::size_t>(labels_));
  }

  // Valid states at `position` form the half-open range [first, last).
  std::size_t first_state(std::size_t position) const {
    if (order_ == 1) return 0;
    const auto l = static_cast<std::size_t>(labels_);
    return position == 0 ? l * l : 0;
  }
  std::size_t last_state(std::size_t position) const {
    if (order_ == 1) return static_cast<std::size_t>(labels_);
    const auto l = static_cast<std::size_t>(labels_);
    return position == 0 ? l * l + l : l * l;
  }

  std::size_t initial_state(LabelId c) const {
    return first_state(0) + static_cast<std::size_t>(c);
  }
  double initial_score(LabelId c) const {
    const LabelId s = weights_.start();
    return weights_.transition(s, s, c) + lattice_.emission(0, c);
  }

  std::size_t successor(std::size_t state, LabelId c) const {
    if (order_ == 1) return static_cast<std::size_t>(c);
    return static_cast<std::size_t>(label(state)) * static_cast<std::size_t>(labels_) +
           static_cast<std::size_t>(c);
  }
  // Score of moving from `state` at position-1 to label c at `position`.
  double step_score(std::size_t state, LabelId c, std::size_t position) const {
    double t;
    if (order_ == 1) {
      t = weights_.transition(weights_.start(), label(state), c);
    } else {
      const auto older =
          static_cast<LabelId>(state / static_cast<std::size_t>(labels_));
      t = weights_.transition(older, label(state), c);
    }
    return t + lattice_.emission(position, c);
  }

  // Calls fn(pred) for every valid state at position-1 that leads into `state`.
  template <typename Fn>
  void for_each_predecessor(std::size_t position, std::size_t state, Fn&& fn) const {
    if (order_ == 1) {
      for (std::size_t s = 0; s < static_cast<std::size_t>(labels_); ++s) fn(s);
      return;
    }
    const auto l = static_cast<std::size_t>(labels_);
    const std::size_t b = state / l;  // label at position-1
    if (position == 1) {
      fn(l * l + b);
    } else {
      for (std::size_t a = 0; a < l; ++a) fn(a * l + b);
    }
  }

 private:
  const Lattice& lattice_;
  const WeightTable& weights_;
  LabelId labels_;
  int order_;
};

}  // namespace

WeightTable::WeightTable(std::size_t num_labels, int markov_order, std::size_t num_values)
    : num_labels_(num_labels), order_(markov_order) {
  if (markov_order != 1 && markov_order != 2) {
    throw std::invalid_argument("markov_order must be 1 or 2");
  }
  emissions_.assign(num_values * num_labels, 0.0);
  const std::size_t h = num_labels + 1;
  transitions_.assign((order_ == 1 ? h : h * h) * num_labels, 0.0);
}

void WeightTable::resize_values(std::size_t num_values) {
  if (num_values * num_labels_ > emissions_.size()) {
    emissions_.resize(num_values * num_labels_, 0.0);
  }
}

double& WeightTable::emission_ref(std::uint32_t value, LabelId label) {
  if (value >= num_values()) resize_values(static_cast<std::size_t>(value) + 1);
  return emissions_[static_cast<std::size_t>(value) * num_labels_ + label];
}

std::size_t WeightTable::transition_index(LabelId older, LabelId prev, LabelId cur) const {
  const std::size_t h = num_labels_ + 1;
  const std::size_t base = order_ == 1 ? static_cast<std::size_t>(prev)
                                       : static_cast<std::size_t>(older) * h +
                                             static_cast<std::size_t>(prev);
  return base * num_labels_ + static_cast<std::size_t>(cur);
}

double transition_at(const WeightTable& weights, std::span<const LabelId> labels,
                     std::size_t position) {
  const LabelId start = weights.start();
  const LabelId prev = position >= 1 ? labels[position - 1] : start;
  const LabelId older = position >= 2 ? labels[position - 2] : start;
  return weights.transition(older, prev, labels[position]);
}

Lattice::Lattice(const WeightTable& weights, const SentenceFeatures& features)
    : weights_(&weights), length_(features.size()), num_labels_(weights.num_labels()) {
  emissions_.assign(length_ * num_labels_, 0.0);
  for (std::size_t p = 0; p < length_; ++p) {
    double* row = emissions_.data() + p * num_labels_;
    for (FeatureId f : features[p]) {
      const std::uint32_t v = feature_value(f);
      if (v >= weights.num_values()) continue;
      for (std::size_t l = 0; l < num_labels_; ++l) {
        row[l] += weights.emission(v, static_cast<LabelId>(l));
      }
    }
  }
}

double Lattice::score(std::span<const LabelId> labels) const {
  if (labels.size() != length_) {
    throw std::invalid_argument("label sequence length does not match sentence length");
  }
  double total = 0.0;
  for (std::size_t p = 0; p < length_; ++p) {
    total += emission(p, labels[p]) + transition_at(*weights_, labels, p);
  }
  return total;
}

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

Decoded viterbi(const Lattice& lattice) {
  const std::size_t n = lattice.length();
  if (n == 0) return {};
  const Chain chain(lattice);
  const LabelId labels = chain.labels();
  const std::size_t states = chain.num_states();
  // best[p][s]: best score of positions p+1.. given state s at p. Decoding
  // then runs left to right, taking the smallest label that attains the
  // optimum, which yields the lexicographically smallest argmax.
  std::vector<double> best(n * states, kNegInf);
  for (std::size_t s = chain.first_state(n - 1); s < chain.last_state(n - 1); ++s) {
    best[(n - 1) * states + s] = 0.0;
  }
  auto value = [&](std::size_t p, std::size_t s, LabelId c) {
    return chain.step_score(s, c, p + 1) + best[(p + 1) * states + chain.successor(s, c)];
  };
  for (std::size_t p = n - 1; p-- > 0;) {
    for (std::size_t s = chain.first_state(p); s < chain.last_state(p); ++s) {
      double m = kNegInf;
      for (LabelId c = 0; c < labels; ++c) m = std::max(m, value(p, s, c));
      best[p * states + s] = m;
    }
  }

  Decoded out;
  out.labels.reserve(n);
  double top = kNegInf;
  for (LabelId c = 0; c < labels; ++c) {
    top = std::max(top, chain.initial_score(c) + best[chain.initial_state(c)]);
  }
  LabelId first = 0;
  for (LabelId c = 0; c < labels; ++c) {
    if (chain.initial_score(c) + best[chain.initial_state(c)] == top) {
      first = c;
      break;
    }
  }
  out.labels.push_back(first);
  std::size_t state = chain.initial_state(first);
  for (std::size_t p = 0; p + 1 < n; ++p) {
    const double target = best[p * states + state];
    LabelId pick = 0;
    for (LabelId c = 0; c < labels; ++c) {
      if (value(p, state, c) == target) {
        pick = c;
        break;
      }
    }
    out.labels.push_back(pick);
    state = chain.successor(state, pick);
  }
  out.score = lattice.score(out.labels);
  return out;
}

NBestList viterbi_nbest(const Lattice& lattice, std::size_t n_best) {
  if (n_best < 1) throw std::invalid_argument("n-best size must be at least 1");
  const std::size_t n = lattice.length();
  if (n == 0) return {};
  const Chain chain(lattice);
  const LabelId labels = chain.labels();
  const std::size_t states = chain.num_states();

  // Suffix entries: the top completions of positions p+1.. from a state,
  // identified by the next label and the rank within the successor's list.
  struct Entry {
    double score;
    LabelId next;  // -1 at the last position
    std::size_t rank;
  };
  auto before = [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.next != b.next) return a.next < b.next;
    return a.rank < b.rank;
  };
  std::vector<std::vector<Entry>> lists(n * states);
  for (std::size_t s = chain.first_state(n - 1); s < chain.last_state(n - 1); ++s) {
    lists[(n - 1) * states + s] = {{0.0, -1, 0}};
  }
  std::vector<Entry> candidates;
  for (std::size_t p = n - 1; p-- > 0;) {
    for (std::size_t s = chain.first_state(p); s < chain.last_state(p); ++s) {
      candidates.clear();
      for (LabelId c = 0; c < labels; ++c) {
        const double step = chain.step_score(s, c, p + 1);
        const auto& next = lists[(p + 1) * states + chain.successor(s, c)];
        for (std::size_t r = 0; r < next.size(); ++r) {
          candidates.push_back({step + next[r].score, c, r});
        }
      }
      const std::size_t keep = std::min(n_best, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep),
                        candidates.end(), before);
      lists[p * states + s].assign(candidates.begin(), candidates.begin() + static_cast<long>(keep));
    }
  }

  candidates.clear();
  for (LabelId c = 0; c < labels; ++c) {
    const auto& next = lists[chain.initial_state(c)];
    const double step = chain.initial_score(c);
    for (std::size_t r = 0; r < next.size(); ++r) {
      candidates.push_back({step + next[r].score, c, r});
    }
  }
  const std::size_t keep = std::min(n_best, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep),
                    candidates.end(), before);

  NBestList out;
  out.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    ScoredSequence seq;
    seq.score = candidates[k].score;
    seq.labels.reserve(n);
    LabelId c = candidates[k].next;
    std::size_t rank = candidates[k].rank;
    std::size_t state = chain.initial_state(c);
    seq.labels.push_back(c);
    for (std::size_t p = 0; p + 1 < n; ++p) {
      const Entry& e = lists[p * states + state][rank];
      seq.labels.push_back(e.next);
      state = chain.successor(state, e.next);
      rank = e.rank;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

namespace {

struct ForwardBackward {
  std::vector<double> alpha;
  std::vector<double> beta;
  double log_z = 0.0;
};

ForwardBackward run_forward_backward(const Lattice& lattice, bool need_beta) {
  const std::size_t n = lattice.length();
  const Chain chain(lattice);
  const LabelId labels = chain.labels();
  const std::size_t states = chain.num_states();
  ForwardBackward fb;
  fb.alpha.assign(n * states, kNegInf);
  std::vector<double> terms;
  terms.reserve(states);

  for (LabelId c = 0; c < labels; ++c) fb.alpha[chain.initial_state(c)] = chain.initial_score(c);
  for (std::size_t p = 1; p < n; ++p) {
    for (std::size_t t = chain.first_state(p); t < chain.last_state(p); ++t) {
      const LabelId c = chain.label(t);
      terms.clear();
      chain.for_each_predecessor(p, t, [&](std::size_t s) {
        terms.push_back(fb.alpha[(p - 1) * states + s] + chain.step_score(s, c, p));
      });
      fb.alpha[p * states + t] = log_sum_exp(terms);
    }
  }
  terms.clear();
  for (std::size_t s = chain.first_state(n - 1); s < chain.last_state(n - 1); ++s) {
    terms.push_back(fb.alpha[(n - 1) * states + s]);
  }
  fb.log_z = log_sum_exp(terms);
  if (!need_beta) return fb;

  fb.beta.assign(n * states, kNegInf);
  for (std::size_t s = chain.first_state(n - 1); s < chain.last_state(n - 1); ++s) {
    fb.beta[(n - 1) * states + s] = 0.0;
  }
  for (std::size_t p = n - 1; p-- > 0;) {
    for (std::size_t s = chain.first_state(p); s < chain.last_state(p); ++s) {
      terms.clear();
      for (LabelId c = 0; c < labels; ++c) {
        terms.push_back(chain.step_score(s, c, p + 1) +
                        fb.beta[(p + 1) * states + chain.successor(s, c)]);
      }
      fb.beta[p * states + s] = log_sum_exp(terms);
    }
  }
  return fb;
}

}  // namespace

Marginals forward_backward(const Lattice& lattice) {
  Marginals out;
  out.length = lattice.length();
  out.num_labels = lattice.num_labels();
  if (out.length == 0) return out;
  const auto fb = run_forward_backward(lattice, true);
  const Chain chain(lattice);
  const std::size_t states = chain.num_states();
  out.log_partition = fb.log_z;
  out.probs.assign(out.length * out.num_labels, 0.0);
  for (std::size_t p = 0; p < out.length; ++p) {
    double* row = out.probs.data() + p * out.num_labels;
    for (std::size_t s = chain.first_state(p); s < chain.last_state(p); ++s) {
      const double lp = fb.alpha[p * states + s] + fb.beta[p * states + s] - fb.log_z;
      row[chain.label(s)] += std::exp(lp);
    }
    // Renormalize away rounding so each row sums to 1.
    double sum = 0.0;
    for (std::size_t l = 0; l < out.num_labels; ++l) sum += row[l];
    for (std::size_t l = 0; l < out.num_labels; ++l) row[l] /= sum;
  }
  return out;
}

double log_partition(const Lattice& lattice) {
  if (lattice.length() == 0) return 0.0;
  return run_forward_backward(lattice, false).log_z;
}

FhmmModel::FhmmModel(LabelSet labels, FeatureSpace features, WeightTable weights)
    : labels_(std::move(labels)), features_(std::move(features)), weights_(std::move(weights)) {
  if (weights_.num_labels() != labels_.size()) {
    throw std::invalid_argument("weight table and label set disagree on label count");
  }
  features_.freeze();
}

Lattice FhmmModel::lattice(const Sentence& sentence) const {
  return Lattice(weights_, featurize(sentence));
}

double score_sequence(const FhmmModel& model, const Sentence& sentence,
                      std::span<const LabelId> labels) {
  if (labels.size() != sentence.size()) {
    throw std::invalid_argument("label sequence length does not match sentence length");
  }
  return model.lattice(sentence).score(labels);
}

Decoded viterbi(const FhmmModel& model, const Sentence& sentence) {
  return viterbi(model.lattice(sentence));
}

NBestList viterbi_nbest(const FhmmModel& model, const Sentence& sentence, std::size_t n) {
  return viterbi_nbest(model.lattice(sentence), n);
}

Marginals forward_backward(const FhmmModel& model, const Sentence& sentence) {
  return forward_backward(model.lattice(sentence));
}

double sequence_probability(const FhmmModel& model, const Sentence& sentence,
                            std::span<const LabelId> labels) {
  if (labels.size() != sentence.size()) {
    throw std::invalid_argument("label sequence length does not match sentence length");
  }
  const auto lattice = model.lattice(sentence);
  return std::exp(lattice.score(labels) - log_partition(lattice));
}

}  // namespace bagtag
