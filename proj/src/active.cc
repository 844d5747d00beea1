#include "bagtag/active.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "bagtag/errors.h"
#include "bagtag/model_io.h"

namespace bagtag {

namespace {

// Stream tag that keeps random-selection draws apart from the bagging seeds.
constexpr std::uint64_t kRandomStream = 0x726e64;

}  // namespace

std::string_view selection_name(Selection selection) {
  return selection == Selection::kUtility ? "utl" : "rnd";
}

std::optional<Selection> selection_from_name(std::string_view name) {
  if (name == "utl" || name == "utility" || name == "sve") return Selection::kUtility;
  if (name == "rnd" || name == "random") return Selection::kRandom;
  return std::nullopt;
}

std::optional<ReweightMode> reweight_mode_from_name(std::string_view name) {
  if (name == "decay") return ReweightMode::kDecay;
  if (name == "literal") return ReweightMode::kLiteral;
  return std::nullopt;
}

void ALConfig::validate() const {
  if (initial < 1) throw ConfigError("initial batch size I must be at least 1");
  if (batch < 1) throw ConfigError("batch size K must be at least 1");
  if (ensemble_size < 1) throw ConfigError("ensemble size k must be at least 1");
  if (nbest < 1) throw ConfigError("n-best size must be at least 1");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw ConfigError("sample rate r must be in (0, 1]");
  }
  trainer.validate();
  if (features.kinds.empty()) throw ConfigError("no feature templates selected");
}

std::string ALConfig::flags() const {
  std::string out(decoder_name(decoder));
  out += reweight ? "-rw-" : "-nrw-";
  out += selection_name(selection);
  return out;
}

double sve_utility(const EnsembleModel& ensemble, const Sentence& sentence, std::size_t n) {
  if (n < 1) throw std::invalid_argument("n-best size must be at least 1");
  if (sentence.size() == 0) return 0.0;
  const auto lattices = member_lattices(ensemble, sentence);
  const auto pool = pool_nbest(lattices, n);
  if (pool.size() < 2) return 0.0;
  const auto probs = pooled_probabilities(lattices, pool);
  std::vector<double> avg(pool.size(), 0.0);
  for (const auto& member : probs) {
    for (std::size_t j = 0; j < pool.size(); ++j) avg[j] += member[j];
  }
  const double total = std::accumulate(avg.begin(), avg.end(), 0.0);
  double entropy = 0.0;
  for (double p : avg) {
    const double q = p / total;
    if (q > 0.0) entropy -= q * std::log(q);
  }
  return std::clamp(entropy, 0.0, std::log(static_cast<double>(pool.size())));
}

double random_utility(Rng& rng, const Sentence&) { return rng.uniform(); }

double decay_step(std::size_t t, double r) {
  if (t <= 1) return 0.0;
  return 2.0 * (1.0 - r) / static_cast<double>(t - 1);
}

SampleWeights reweight(std::span<const double> weights, std::size_t newly_labeled, std::size_t t,
                       double r, ReweightMode mode) {
  const double alpha = decay_step(t, r);
  SampleWeights out;
  out.reserve(weights.size() + newly_labeled);
  for (double w : weights) {
    const double decayed = mode == ReweightMode::kDecay
                               ? w - alpha
                               : 1.0 - alpha * static_cast<double>(t > 0 ? t - 1 : 0);
    out.push_back(std::max(decayed, r));
  }
  out.insert(out.end(), newly_labeled, 1.0);
  return out;
}

std::string LearningCurve::to_csv(bool timing) const {
  std::ostringstream out;
  out << "round,labeled_count,decoder,reweight,selection,micro_f1";
  for (const auto& type : types) out << ",f1_" << type;
  out << ",seconds\n";
  for (const auto& row : rows) {
    out << row.round << ',' << row.labeled_count << ',' << decoder_name(row.decoder) << ','
        << (row.reweight ? "rw" : "nrw") << ',' << selection_name(row.selection) << ','
        << format_double(row.micro_f1);
    for (double f : row.type_f1) out << ',' << format_double(f);
    out << ',' << (timing ? format_double(row.seconds) : std::string("0")) << '\n';
  }
  return out.str();
}

SimulatedOracle::SimulatedOracle(const Corpus& gold) {
  for (const auto& s : gold.sentences) gold_.emplace(s.id, s.gold_labels());
}

std::optional<std::vector<LabelId>> SimulatedOracle::label(const Sentence& sentence) {
  auto it = gold_.find(sentence.id);
  if (it == gold_.end()) return std::nullopt;
  ++queries_;
  return it->second;
}

EvalReport evaluate_ensemble(const EnsembleModel& ensemble, const Corpus& test) {
  std::vector<std::vector<LabelId>> predicted;
  predicted.reserve(test.size());
  for (const auto& s : test.sentences) predicted.push_back(decode(ensemble, s));
  return evaluate(test, predicted);
}

ActiveLearner::ActiveLearner(Corpus unlabeled, ALConfig config, Corpus test)
    : config_(std::move(config)), test_(std::move(test)) {
  config_.validate();
  for (auto& s : unlabeled.sentences) s = strip_gold(s);
  std::unordered_set<std::string> ids;
  for (const auto& s : unlabeled.sentences) {
    if (!ids.insert(s.id).second) throw ConfigError("duplicate sentence id '" + s.id + "'");
  }
  if (!test_.empty() && !(test_.labels == unlabeled.labels)) {
    throw ConfigError("test and pool corpora use different label sets");
  }
  pool_.labeled.labels = unlabeled.labels;
  pool_.unlabeled = std::move(unlabeled);
  for (const auto& label : pool_.unlabeled.labels.names()) {
    if (pool_.unlabeled.labels.has_outside() &&
        label == pool_.unlabeled.labels.name(pool_.unlabeled.labels.outside())) {
      continue;
    }
    curve_.types.push_back(label);
  }
}

ActiveLearner::Phase ActiveLearner::phase() const {
  if (rounds_completed_ == 0) return pool_.unlabeled.empty() ? Phase::kDone : Phase::kSeeding;
  // rounds_completed_ counts round 0, so round t is done when it equals t + 1.
  if (rounds_completed_ > config_.rounds || pool_.unlabeled.empty()) return Phase::kDone;
  return Phase::kActive;
}

const std::vector<double>& ActiveLearner::utilities() const {
  if (utilities_) return *utilities_;
  std::vector<double> out;
  out.reserve(pool_.unlabeled.size());
  if (!ensemble_) {
    out.assign(pool_.unlabeled.size(), 0.0);
  } else if (config_.selection == Selection::kRandom) {
    Rng rng(derive_seed(derive_seed(config_.seed, kRandomStream), rounds_completed_));
    for (const auto& s : pool_.unlabeled.sentences) out.push_back(random_utility(rng, s));
  } else {
    for (const auto& s : pool_.unlabeled.sentences) {
      out.push_back(sve_utility(*ensemble_, s, config_.nbest));
    }
  }
  utilities_ = std::move(out);
  return *utilities_;
}

std::vector<std::string> ActiveLearner::next_batch() const {
  std::vector<std::string> ids;
  switch (phase()) {
    case Phase::kDone:
      return ids;
    case Phase::kSeeding: {
      const auto count = std::min(config_.initial, pool_.unlabeled.size());
      for (std::size_t i = 0; i < count; ++i) ids.push_back(pool_.unlabeled.sentences[i].id);
      return ids;
    }
    case Phase::kActive:
      break;
  }
  const auto& utility = utilities();
  std::vector<std::size_t> order(pool_.unlabeled.size());
  std::iota(order.begin(), order.end(), 0);
  // Highest utility first; ties keep pool order.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return utility[a] > utility[b]; });
  order.resize(std::min(config_.batch, order.size()));
  for (auto i : order) ids.push_back(pool_.unlabeled.sentences[i].id);
  return ids;
}

const Sentence* ActiveLearner::find_unlabeled(std::string_view id) const {
  for (const auto& s : pool_.unlabeled.sentences) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

void ActiveLearner::commit(const std::vector<LabeledExample>& labeled) {
  if (phase() == Phase::kDone) throw std::invalid_argument("active learning has finished");
  if (labeled.empty()) throw std::invalid_argument("empty batch");
  const auto start = std::chrono::steady_clock::now();
  std::unordered_set<std::string> batch_ids;
  const auto num_labels = static_cast<LabelId>(labels().size());
  for (const auto& ex : labeled) {
    const Sentence* s = find_unlabeled(ex.id);
    if (s == nullptr) throw std::invalid_argument("sentence '" + ex.id + "' is not unlabeled");
    if (!batch_ids.insert(ex.id).second) {
      throw std::invalid_argument("sentence '" + ex.id + "' appears twice in the batch");
    }
    if (ex.labels.size() != s->size()) {
      throw std::invalid_argument("sentence '" + ex.id + "' has " + std::to_string(s->size()) +
                                  " tokens but " + std::to_string(ex.labels.size()) +
                                  " labels");
    }
    for (LabelId l : ex.labels) {
      if (l < 0 || l >= num_labels) {
        throw std::invalid_argument("label id out of range for sentence '" + ex.id + "'");
      }
    }
  }

  const std::size_t round = rounds_completed_;
  Pool next = pool_;
  std::vector<Sentence> remaining;
  remaining.reserve(next.unlabeled.size());
  for (auto& s : next.unlabeled.sentences) {
    if (!batch_ids.count(s.id)) remaining.push_back(std::move(s));
  }
  next.unlabeled.sentences = std::move(remaining);
  for (const auto& ex : labeled) {
    Sentence s = *find_unlabeled(ex.id);
    for (std::size_t i = 0; i < s.size(); ++i) s.tokens[i].gold = ex.labels[i];
    next.labeled.sentences.push_back(std::move(s));
  }
  if (config_.reweight) {
    next.weights = reweight(next.weights, labeled.size(), std::max<std::size_t>(round, 1),
                            config_.sample_rate, config_.reweight_mode);
  } else {
    next.weights.assign(next.labeled.size(), config_.sample_rate);
  }

  auto ensemble =
      bag_train(next.labeled, next.weights, config_.ensemble_size, config_.trainer,
                config_.features, derive_seed(config_.seed, round), config_.sample_rate);
  ensemble.decoder = config_.decoder;
  ensemble.nbest = config_.nbest;

  CurveRow row;
  row.round = round;
  row.labeled_count = next.labeled.size();
  row.decoder = config_.decoder;
  row.reweight = config_.reweight;
  row.selection = config_.selection;
  if (!test_.empty()) {
    const auto report = evaluate_ensemble(ensemble, test_);
    row.micro_f1 = report.micro.f1();
    for (const auto& type : curve_.types) {
      const Prf* prf = report.find(type);
      row.type_f1.push_back(prf ? prf->f1() : 0.0);
    }
  } else {
    row.type_f1.assign(curve_.types.size(), 0.0);
  }
  row.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  pool_ = std::move(next);
  ensemble_ = std::move(ensemble);
  curve_.rows.push_back(std::move(row));
  history_.push_back(labeled);
  ++rounds_completed_;
  utilities_.reset();
}

ActiveLearner::Step ActiveLearner::step(Oracle& oracle) {
  const auto ids = next_batch();
  if (ids.empty()) return Step::kFinished;
  std::vector<LabeledExample> batch;
  batch.reserve(ids.size());
  for (const auto& id : ids) {
    auto labels = oracle.label(*find_unlabeled(id));
    if (!labels) return Step::kSuspended;
    batch.push_back({id, std::move(*labels)});
  }
  commit(batch);
  return Step::kAdvanced;
}

void ActiveLearner::replay(const std::vector<std::vector<LabeledExample>>& batches) {
  for (const auto& batch : batches) commit(batch);
}

LearningCurve run_active_learning(Corpus unlabeled, const ALConfig& config, Oracle& oracle,
                                  const Corpus& test) {
  ActiveLearner learner(std::move(unlabeled), config, test);
  while (learner.step(oracle) == ActiveLearner::Step::kAdvanced) {
  }
  return learner.curve();
}

}  // namespace bagtag
