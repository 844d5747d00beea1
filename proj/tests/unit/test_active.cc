#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "bagtag/active.h"
#include "bagtag/errors.h"
#include "support.h"

using namespace bagtag;
using namespace bagtag::testing;

namespace {

ALConfig small_config(std::uint64_t seed) {
  ALConfig c;
  c.initial = 4;
  c.batch = 3;
  c.rounds = 3;
  c.ensemble_size = 3;
  c.nbest = 2;
  c.seed = seed;
  c.trainer.max_epochs = 10;
  c.features.kinds = {TemplateKind::kWord, TemplateKind::kSuffix};
  return c;
}

struct Data {
  Corpus pool;
  Corpus test;
};

Data planted_data(std::uint64_t seed, std::size_t pool, std::size_t test) {
  PlantedFhmm planted(seed);
  Rng rng(seed + 100);
  return {planted.sample(pool, rng, "p"), planted.sample(test, rng, "t")};
}

// Refuses the listed ids, otherwise answers from gold.
class PickyOracle : public Oracle {
 public:
  PickyOracle(const Corpus& gold, std::set<std::string> refuse)
      : inner_(gold), refuse_(std::move(refuse)) {}
  std::optional<std::vector<LabelId>> label(const Sentence& s) override {
    if (refuse_.count(s.id)) return std::nullopt;
    return inner_.label(s);
  }

 private:
  SimulatedOracle inner_;
  std::set<std::string> refuse_;
};

}  // namespace

TEST_CASE("decay step") {
  CHECK(decay_step(0, 0.8) == 0.0);
  CHECK(decay_step(1, 0.8) == 0.0);
  CHECK(decay_step(2, 0.8) == doctest::Approx(0.4));
  CHECK(decay_step(5, 0.5) == doctest::Approx(0.25));
}

TEST_CASE("reweight worked examples") {
  // r = 0.8, t = 2: 1 - 0.4 = 0.6, floored at 0.8.
  const auto a = reweight(std::vector<double>{1.0, 1.0}, 2, 2, 0.8);
  CHECK(a == std::vector<double>{0.8, 0.8, 1.0, 1.0});
  // Literal mode, r = 0.5, t = 3: 1 - 0.5 * 2 = 0, floored at 0.5.
  const auto b = reweight(std::vector<double>{1.0}, 1, 3, 0.5, ReweightMode::kLiteral);
  CHECK(b == std::vector<double>{0.5, 1.0});
  // alpha_1 = 0 keeps weights.
  CHECK(reweight(std::vector<double>{1.0}, 0, 1, 0.5) == std::vector<double>{1.0});
  // r = 0.5, t = 3: alpha = 0.5.
  CHECK(reweight(std::vector<double>{0.9}, 0, 3, 0.5) == std::vector<double>{0.5});
  CHECK(reweight(std::vector<double>{1.0}, 0, 5, 0.5)[0] == doctest::Approx(0.75));
}

TEST_CASE("reweighted weights stay in [r, 1] and never increase") {
  for (double r : {0.3, 0.5, 0.8, 1.0}) {
    for (auto mode : {ReweightMode::kDecay, ReweightMode::kLiteral}) {
      SampleWeights w;
      for (std::size_t t = 0; t <= 100; ++t) {
        const auto next = reweight(w, 1 + t % 3, t, r, mode);
        for (std::size_t i = 0; i < w.size(); ++i) CHECK(next[i] <= w[i]);
        for (double v : next) {
          CHECK(v >= r);
          CHECK(v <= 1.0);
        }
        CHECK(next.back() == 1.0);
        w = next;
      }
    }
  }
}

TEST_CASE("random utility is uniform on [0, 1)") {
  Rng rng(99);
  Sentence s{"x", {Token{"a"}}};
  const int n = 100000;
  std::vector<double> draws(n);
  for (auto& d : draws) {
    d = random_utility(rng, s);
    REQUIRE(d >= 0.0);
    REQUIRE(d < 1.0);
  }
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    ks = std::max({ks, std::abs((i + 1.0) / n - draws[i]), std::abs(draws[i] - double(i) / n)});
  }
  // 1% critical value of the Kolmogorov-Smirnov statistic.
  CHECK(ks < 1.63 / std::sqrt(double(n)));
}

TEST_CASE("sve is zero for a unanimous singleton pool and ln 2 for an even split") {
  Rng rng(1);
  const auto m = random_model(rng, 3, 1, 4);
  EnsembleModel same;
  same.members = {m, m, m};
  const auto s = random_sentence(rng, 4, 4);
  CHECK(sve_utility(same, s, 1) == 0.0);

  FeatureConfig fc;
  fc.kinds = {TemplateKind::kWord};
  EnsembleModel flat;
  flat.members = {FhmmModel(make_labels(2), FeatureSpace(fc), WeightTable(2, 1)),
                  FhmmModel(make_labels(2), FeatureSpace(fc), WeightTable(2, 1))};
  Sentence one{"one", {Token{"x"}}};
  CHECK(sve_utility(flat, one, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS(sve_utility(flat, one, 0));
}

TEST_CASE("sve matches the oracle and is bounded by ln |pool|") {
  Rng rng(2);
  for (int i = 0; i < 60; ++i) {
    const auto e = random_ensemble(rng, 2 + rng.below(2), 2 + rng.below(2), 4);
    const auto s = random_sentence(rng, 1 + rng.below(5), 4);
    const std::size_t n = 1 + rng.below(4);
    const double u = sve_utility(e, s, n);
    CHECK(std::abs(u - oracle_sve(e, s, n)) < 1e-9);
    const auto pool = pool_nbest(member_lattices(e, s), n);
    CHECK(u >= 0.0);
    CHECK(u <= std::log(double(pool.size())) + 1e-12);
  }
}

TEST_CASE("config names, flags and validation") {
  ALConfig c;
  CHECK(c.flags() == "bp-rw-utl");
  c.decoder = Decoder::kViterbi;
  c.reweight = false;
  c.selection = Selection::kRandom;
  CHECK(c.flags() == "vt-nrw-rnd");
  CHECK(selection_from_name("rnd") == Selection::kRandom);
  CHECK(!selection_from_name("best"));
  CHECK(reweight_mode_from_name("literal") == ReweightMode::kLiteral);
  c.sample_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("round 0 seeds with the first I examples, later rounds take K") {
  const auto data = planted_data(3, 20, 10);
  ActiveLearner learner(data.pool, small_config(3), data.test);
  CHECK(learner.phase() == ActiveLearner::Phase::kSeeding);
  CHECK(learner.next_batch() == std::vector<std::string>{"p0", "p1", "p2", "p3"});
  CHECK(learner.utilities() == std::vector<double>(20, 0.0));
  for (const auto& s : learner.pool().unlabeled.sentences) CHECK(!s.labeled());

  SimulatedOracle oracle(data.pool);
  REQUIRE(learner.step(oracle) == ActiveLearner::Step::kAdvanced);
  CHECK(learner.rounds_completed() == 1);
  CHECK(learner.pool().labeled.size() == 4);
  CHECK(learner.pool().weights == std::vector<double>(4, 1.0));
  CHECK(learner.ensemble()->size() == 3);

  const auto batch = learner.next_batch();
  CHECK(batch.size() == 3);
  const auto& u = learner.utilities();
  double lowest_taken = 1e300;
  for (const auto& id : batch) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (learner.pool().unlabeled.sentences[i].id == id) lowest_taken = std::min(lowest_taken, u[i]);
    }
  }
  std::size_t strictly_higher = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& id = learner.pool().unlabeled.sentences[i].id;
    if (std::find(batch.begin(), batch.end(), id) == batch.end() && u[i] > lowest_taken) {
      ++strictly_higher;
    }
  }
  CHECK(strictly_higher == 0);
}

TEST_CASE("the pool is conserved and weights stay aligned") {
  const auto data = planted_data(4, 25, 10);
  ActiveLearner learner(data.pool, small_config(4), data.test);
  SimulatedOracle oracle(data.pool);
  while (learner.step(oracle) == ActiveLearner::Step::kAdvanced) {
    const auto& p = learner.pool();
    CHECK(p.labeled.size() + p.unlabeled.size() == 25);
    CHECK(p.weights.size() == p.labeled.size());
    std::set<std::string> ids;
    for (const auto& s : p.labeled.sentences) {
      CHECK(s.labeled());
      ids.insert(s.id);
    }
    for (const auto& s : p.unlabeled.sentences) CHECK(ids.insert(s.id).second);
    for (double w : p.weights) {
      CHECK(w >= 0.8);
      CHECK(w <= 1.0);
    }
  }
  CHECK(learner.phase() == ActiveLearner::Phase::kDone);
  CHECK(learner.curve().rows.size() == 4);
  CHECK(learner.pool().labeled.size() == 4 + 3 * 3);
  CHECK(oracle.queries() == 13);
  CHECK(learner.next_batch().empty());
}

TEST_CASE("without re-weighting every weight is r") {
  const auto data = planted_data(5, 15, 5);
  auto config = small_config(5);
  config.reweight = false;
  ActiveLearner learner(data.pool, config, data.test);
  SimulatedOracle oracle(data.pool);
  learner.step(oracle);
  learner.step(oracle);
  CHECK(learner.pool().weights == std::vector<double>(7, 0.8));
}

TEST_CASE("rnd + nrw runs are deterministic and differ across seeds") {
  const auto data = planted_data(6, 30, 10);
  auto config = small_config(6);
  config.reweight = false;
  config.selection = Selection::kRandom;
  auto run = [&](std::uint64_t seed) {
    config.seed = seed;
    ActiveLearner learner(data.pool, config, data.test);
    SimulatedOracle oracle(data.pool);
    while (learner.step(oracle) == ActiveLearner::Step::kAdvanced) {
    }
    std::vector<std::string> ids;
    for (const auto& s : learner.pool().labeled.sentences) ids.push_back(s.id);
    return std::make_pair(ids, learner.curve().to_csv());
  };
  const auto a = run(1), b = run(1), c = run(2);
  CHECK(a == b);
  CHECK(a.first != c.first);
}

TEST_CASE("K = |U| labels everything in one round") {
  const auto data = planted_data(7, 10, 5);
  auto config = small_config(7);
  config.batch = 100;
  config.rounds = 50;
  ActiveLearner learner(data.pool, config, data.test);
  SimulatedOracle oracle(data.pool);
  CHECK(learner.step(oracle) == ActiveLearner::Step::kAdvanced);
  CHECK(learner.step(oracle) == ActiveLearner::Step::kAdvanced);
  CHECK(learner.pool().unlabeled.empty());
  CHECK(learner.step(oracle) == ActiveLearner::Step::kFinished);
  CHECK(learner.curve().rows.size() == 2);
}

TEST_CASE("an initial batch larger than U takes the whole pool") {
  const auto data = planted_data(8, 3, 3);
  ActiveLearner learner(data.pool, small_config(8), data.test);
  CHECK(learner.next_batch().size() == 3);
}

TEST_CASE("invalid commits leave the learner untouched") {
  const auto data = planted_data(9, 10, 5);
  ActiveLearner learner(data.pool, small_config(9), data.test);
  const auto& first = data.pool.sentences[0];
  CHECK_THROWS_AS(learner.commit({{"nope", {0}}}), std::invalid_argument);
  CHECK_THROWS_AS(learner.commit({{first.id, {0}}}), std::invalid_argument);
  CHECK_THROWS_AS(learner.commit({{first.id, first.gold_labels()}, {first.id, first.gold_labels()}}),
                  std::invalid_argument);
  std::vector<LabelId> bad(first.size(), 99);
  CHECK_THROWS_AS(learner.commit({{first.id, bad}}), std::invalid_argument);
  CHECK_THROWS_AS(learner.commit({}), std::invalid_argument);
  CHECK(learner.rounds_completed() == 0);
  CHECK(learner.pool().unlabeled.size() == 10);
  CHECK(!learner.ensemble());
}

TEST_CASE("a refusal suspends the loop and resuming matches an uninterrupted run") {
  const auto data = planted_data(10, 20, 8);
  const auto config = small_config(10);

  ActiveLearner reference(data.pool, config, data.test);
  SimulatedOracle full(data.pool);
  while (reference.step(full) == ActiveLearner::Step::kAdvanced) {
  }

  ActiveLearner learner(data.pool, config, data.test);
  PickyOracle picky(data.pool, {"p2"});
  CHECK(learner.step(picky) == ActiveLearner::Step::kSuspended);
  CHECK(learner.rounds_completed() == 0);
  SimulatedOracle again(data.pool);
  while (learner.step(again) == ActiveLearner::Step::kAdvanced) {
  }
  CHECK(learner.curve().to_csv() == reference.curve().to_csv());
  CHECK(learner.history().size() == reference.history().size());

  ActiveLearner replayed(data.pool, config, data.test);
  replayed.replay(reference.history());
  CHECK(replayed.curve().to_csv() == reference.curve().to_csv());

  const auto curve = run_active_learning(data.pool, config, picky, data.test);
  CHECK(curve.rows.empty());
}

TEST_CASE("curve csv layout") {
  const auto data = planted_data(11, 8, 4);
  auto config = small_config(11);
  config.rounds = 1;
  SimulatedOracle oracle(data.pool);
  const auto curve = run_active_learning(data.pool, config, oracle, data.test);
  const auto csv = curve.to_csv();
  CHECK(csv.rfind("round,labeled_count,decoder,reweight,selection,micro_f1,f1_G,f1_T,f1_L,seconds\n", 0) == 0);
  CHECK(csv.find("\n0,4,bp,rw,utl,") != std::string::npos);
  CHECK(csv.find("\n1,7,bp,rw,utl,") != std::string::npos);
  CHECK(csv.back() == '\n');
  for (const auto& row : curve.rows) {
    CHECK(row.micro_f1 >= 0.0);
    CHECK(row.micro_f1 <= 1.0);
  }
}

TEST_CASE("duplicate pool ids and mismatched test labels are rejected") {
  auto data = planted_data(12, 5, 3);
  auto dup = data.pool;
  dup.sentences[1].id = dup.sentences[0].id;
  CHECK_THROWS_AS(ActiveLearner(dup, small_config(1), data.test), ConfigError);
  auto other = data.test;
  other.labels.intern("EXTRA");
  CHECK_THROWS_AS(ActiveLearner(data.pool, small_config(1), other), ConfigError);
}
