#ifndef BAGTAG_EXPERIMENT_H_
#define BAGTAG_EXPERIMENT_H_

// The decoder x re-weighting x selection grid of simulated active-learning
// runs, and the bp-versus-vt summary drawn from it.

#include <cstdint>
#include <string>
#include <vector>

#include "bagtag/active.h"
#include "bagtag/corpus.h"

namespace bagtag {

struct GridRun {
  ALConfig config;  // flags and seed of this run
  LearningCurve curve;
};

// All 8 flag combinations in the order vt/bp, rw/nrw, utl/rnd.
std::vector<ALConfig> grid_configs(const ALConfig& base);

// One simulated run per (configuration, seed); `pool` carries the gold
// labels the simulated oracle reveals.
std::vector<GridRun> run_grid(const Corpus& pool, const Corpus& test,
                              const std::vector<ALConfig>& configs,
                              const std::vector<std::uint64_t>& seeds);

struct DecoderComparisonRow {
  bool reweight = true;
  Selection selection = Selection::kUtility;
  double vt_final_f1 = 0.0;  // mean over seeds
  double bp_final_f1 = 0.0;
  std::size_t seeds = 0;
  // bp trails vt by more than the tolerance.
  bool regression = false;
};

std::vector<DecoderComparisonRow> compare_decoders(const std::vector<GridRun>& runs,
                                                   double tolerance = 0.02);
// Aligned text table of the comparison, one line per rw/nrw x utl/rnd pair.
std::string comparison_table(const std::vector<DecoderComparisonRow>& rows);

}  // namespace bagtag

#endif  // BAGTAG_EXPERIMENT_H_
