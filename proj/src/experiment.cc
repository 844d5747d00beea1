#include "bagtag/experiment.h"

#include <cstdio>
#include <sstream>

namespace bagtag {

std::vector<ALConfig> grid_configs(const ALConfig& base) {
  std::vector<ALConfig> out;
  for (Decoder d : {Decoder::kViterbi, Decoder::kBeliefPropagation}) {
    for (bool rw : {true, false}) {
      for (Selection s : {Selection::kUtility, Selection::kRandom}) {
        ALConfig c = base;
        c.decoder = d;
        c.reweight = rw;
        c.selection = s;
        out.push_back(c);
      }
    }
  }
  return out;
}

std::vector<GridRun> run_grid(const Corpus& pool, const Corpus& test,
                              const std::vector<ALConfig>& configs,
                              const std::vector<std::uint64_t>& seeds) {
  std::vector<GridRun> runs;
  for (const auto& base : configs) {
    for (auto seed : seeds) {
      ALConfig c = base;
      c.seed = seed;
      SimulatedOracle oracle(pool);
      runs.push_back({c, run_active_learning(pool, c, oracle, test)});
    }
  }
  return runs;
}

std::vector<DecoderComparisonRow> compare_decoders(const std::vector<GridRun>& runs,
                                                   double tolerance) {
  std::vector<DecoderComparisonRow> rows;
  for (bool rw : {true, false}) {
    for (Selection s : {Selection::kUtility, Selection::kRandom}) {
      DecoderComparisonRow row;
      row.reweight = rw;
      row.selection = s;
      std::size_t vt = 0, bp = 0;
      for (const auto& run : runs) {
        if (run.config.reweight != rw || run.config.selection != s || run.curve.rows.empty()) {
          continue;
        }
        const double f1 = run.curve.rows.back().micro_f1;
        if (run.config.decoder == Decoder::kViterbi) {
          row.vt_final_f1 += f1;
          ++vt;
        } else {
          row.bp_final_f1 += f1;
          ++bp;
        }
      }
      if (vt == 0 || bp == 0) continue;
      row.vt_final_f1 /= static_cast<double>(vt);
      row.bp_final_f1 /= static_cast<double>(bp);
      row.seeds = std::min(vt, bp);
      row.regression = row.bp_final_f1 < row.vt_final_f1 - tolerance;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string comparison_table(const std::vector<DecoderComparisonRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-9s %8s %8s %8s %6s  %s\n", "reweight", "selection",
                "vt_f1", "bp_f1", "bp-vt", "seeds", "status");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %-9s %8.4f %8.4f %+8.4f %6zu  %s\n",
                  r.reweight ? "rw" : "nrw", std::string(selection_name(r.selection)).c_str(),
                  r.vt_final_f1, r.bp_final_f1, r.bp_final_f1 - r.vt_final_f1, r.seeds,
                  r.regression ? "REGRESSION" : "ok");
    out << line;
  }
  return out.str();
}

}  // namespace bagtag
