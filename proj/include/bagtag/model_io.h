#ifndef BAGTAG_MODEL_IO_H_
#define BAGTAG_MODEL_IO_H_

// Text formats for single models and ensemble manifests.
//
// Model file:
//   bagtag-fhmm <TAB> 1
//   markov_order <TAB> 1
//   labels <TAB> O <TAB> G ...
//   outside <TAB> O
//   features <TAB> kinds=word,...;suffix=2,3;prefix=2,3;window=2
//   <template-name>=<value> <TAB> <label> <TAB> <weight>
//   TRANS <TAB> <prev> <TAB> <label> <TAB> <weight>            (order 1)
//   TRANS <TAB> <older> <TAB> <prev> <TAB> <label> <TAB> <weight>  (order 2)
// Only non-zero weights are written; "<S>" names the start symbol. Weights
// use the shortest decimal form that parses back to the same double.
//
// Ensemble manifest:
//   bagtag-ensemble <TAB> 1
//   k, sample_rate, seed, decoder, nbest lines, then one "member <TAB> path"
//   per member, paths relative to the manifest.

#include <string>
#include <string_view>

#include "bagtag/ensemble.h"
#include "bagtag/fhmm.h"

namespace bagtag {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kEnsembleFormatVersion = 1;
inline constexpr std::string_view kStartSymbol = "<S>";

std::string write_model(const FhmmModel& model);
FhmmModel read_model(std::string_view text);

void save_model(const FhmmModel& model, const std::string& path);
FhmmModel load_model(const std::string& path);

// Writes the manifest at `path` and members next to it as <stem>.m<i>.fhmm.
void save_ensemble(const EnsembleModel& ensemble, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

// Loads either format; a single model becomes a one-member ensemble.
EnsembleModel load_any(const std::string& path);

std::string format_double(double value);
double parse_double(std::string_view text);

std::string read_file(const std::string& path);
// Writes through a temporary file and rename.
void write_file(const std::string& path, std::string_view contents);

}  // namespace bagtag

#endif  // BAGTAG_MODEL_IO_H_
