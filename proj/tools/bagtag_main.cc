// bagtag: train | tag | eval | al-simulate | serve
//
// Every subcommand reads --config (INI, see configs/README.md) and accepts
// repeated -s section.key=value overrides.

#include <CLI11.hpp>
#include <csignal>
#include <filesystem>
#include <iostream>

#include "bagtag/active.h"
#include "bagtag/config.h"
#include "bagtag/corpus.h"
#include "bagtag/errors.h"
#include "bagtag/experiment.h"
#include "bagtag/model_io.h"
#include "bagtag/pipeline.h"
#include "bagtag/service.h"
#include "bagtag/session.h"

namespace fs = std::filesystem;
using namespace bagtag;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;

  RunConfig load() const {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    apply_overrides(config, overrides);
    return config;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path, "INI configuration file");
  cmd->add_option("-s,--set", common.overrides, "Override, section.key=value (repeatable)");
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

Corpus read_required(const std::string& path, const ColumnMap& columns, const LabelSet& base,
                     std::string_view what) {
  if (path.empty()) throw ConfigError(std::string(what) + " file not configured");
  return read_conll_file(path, columns, base);
}

// The configured test file, or a held-out split of `corpus` (which then shrinks).
Corpus test_or_split(const RunConfig& config, Corpus& corpus) {
  if (!config.data.test.empty()) {
    auto test = read_conll_file(config.data.test, config.data.column_map(), corpus.labels);
    // Parsed on top of the corpus labels, so ids agree and the set only grows.
    corpus.labels = test.labels;
    return test;
  }
  auto [train, test] = split(corpus, config.data.test_fraction, config.data.split_seed);
  corpus = std::move(train);
  return test;
}

int cmd_train(const RunConfig& config) {
  Corpus corpus = read_required(config.data.train, config.data.column_map(),
                                config.data.base_labels(), "data.train");
  validate_features(config.features, corpus);
  const auto spec = ModelSpec::from(config);
  std::vector<TrainingStats> stats;
  Tagger tagger;
  if (config.pipeline.enabled) {
    tagger = train_pipeline(corpus, spec, config.pipeline.drop, &stats);
  } else {
    auto trained = train_ensemble(corpus, spec);
    tagger.stage2 = std::move(trained.ensemble);
    stats = std::move(trained.member_stats);
  }
  ensure_parent(config.output.model);
  save_tagger(tagger, config.output.model);
  if (!config.output.stats.empty()) {
    ensure_parent(config.output.stats);
    write_file(config.output.stats, stats_csv(stats));
  }
  std::cerr << "trained " << tagger.stage2.size() << " member(s) on " << corpus.size()
            << " sentences -> " << config.output.model << "\n";
  return 0;
}

int cmd_tag(const RunConfig& config, const std::string& model_path, const std::string& input) {
  const Tagger tagger = load_tagger(model_path);
  const auto columns = config.data.column_map();
  const Corpus corpus = read_required(input, columns, tagger.labels(), "input");
  const auto predicted = tagger.tag(corpus);
  const auto text = write_conll(corpus, columns, &predicted);
  if (config.output.tagged.empty()) {
    std::cout << text;
  } else {
    ensure_parent(config.output.tagged);
    write_file(config.output.tagged, text);
  }
  return 0;
}

int cmd_eval(const RunConfig& config, const std::string& model_path, const std::string& gold_path,
             bool records) {
  const Tagger tagger = load_tagger(model_path);
  const Corpus gold = read_required(gold_path, config.data.column_map(), tagger.labels(), "gold");
  const auto report = evaluate(gold, tagger.tag(gold));
  std::cout << (records ? report.to_records() : report.to_text());
  return 0;
}

int cmd_al_simulate(const RunConfig& config) {
  const std::string& pool_path = config.data.pool.empty() ? config.data.train : config.data.pool;
  Corpus pool = read_required(pool_path, config.data.column_map(), config.data.base_labels(),
                              "data.pool");
  const Corpus test = test_or_split(config, pool);
  validate_features(config.features, pool);

  const ALConfig base = config.al_config(0);
  const auto configs = config.active.grid ? grid_configs(base) : std::vector<ALConfig>{base};
  const auto runs = run_grid(pool, test, configs, config.active.seeds);
  for (const auto& run : runs) {
    fs::path dir(config.output.curve_dir);
    if (config.active.seeds.size() > 1) dir /= "seed" + std::to_string(run.config.seed);
    fs::create_directories(dir);
    const auto path = (dir / (run.config.flags() + ".csv")).string();
    write_file(path, run.curve.to_csv(config.active.timing));
    std::cerr << "wrote " << path << "\n";
  }
  const auto comparison = compare_decoders(runs);
  if (!comparison.empty()) {
    const auto table = comparison_table(comparison);
    fs::create_directories(config.output.curve_dir);
    write_file((fs::path(config.output.curve_dir) / "bp_vs_vt.txt").string(), table);
    std::cout << table;
  }
  return 0;
}

AnnotationService* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const RunConfig& config) {
  const auto columns = config.data.column_map();
  Corpus pool = read_required(config.data.pool, columns, config.data.base_labels(), "data.pool");
  Corpus test;
  if (!config.data.test.empty()) {
    test = read_conll_file(config.data.test, columns, pool.labels);
    // Parsed on top of the pool's labels, so ids agree and the set only grows.
    pool.labels = test.labels;
  }
  validate_features(config.features, pool);
  AnnotationSession session(std::move(pool), config.al_config(config.active.seeds.front()),
                            std::move(test), config.serve.state, config.serve.audit);
  AnnotationService service(session);
  const int port = service.bind(config.serve.host, config.serve.port);
  if (port < 0) throw Error("cannot listen on " + config.serve.host + ":" +
                            std::to_string(config.serve.port));
  std::cerr << "serving on http://" << config.serve.host << ":" << port << "\n";
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bagged featurized-HMM sequence labeling with active learning"};
  app.require_subcommand(1);

  Common train_opts, tag_opts, eval_opts, al_opts, serve_opts;
  std::string train_path, model_out;
  auto* train = app.add_subcommand("train", "Train a model, ensemble or two-stage pipeline");
  add_common(train, train_opts);
  train->add_option("--train", train_path, "Training file (data.train)");
  train->add_option("-o,--model", model_out, "Output model path (output.model)");

  std::string tag_model, tag_input, tag_output;
  auto* tag = app.add_subcommand("tag", "Append a predicted-label column");
  add_common(tag, tag_opts);
  tag->add_option("-m,--model", tag_model, "Model, ensemble or pipeline file")->required();
  tag->add_option("-i,--input", tag_input, "Column file to tag")->required();
  tag->add_option("-o,--output", tag_output, "Output path (default: standard output)");

  std::string eval_model, eval_gold;
  bool records = false;
  auto* eval = app.add_subcommand("eval", "Phrase-level precision, recall and F1");
  add_common(eval, eval_opts);
  eval->add_option("-m,--model", eval_model, "Model, ensemble or pipeline file")->required();
  eval->add_option("-g,--gold", eval_gold, "Gold column file")->required();
  eval->add_flag("--records", records, "Print key=value records instead of a table");

  auto* al = app.add_subcommand("al-simulate", "Simulated active learning over the flag grid");
  add_common(al, al_opts);

  auto* serve = app.add_subcommand("serve", "Annotation service for human labeling");
  add_common(serve, serve_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (!train_path.empty()) train_opts.overrides.push_back("data.train=" + train_path);
      if (!model_out.empty()) train_opts.overrides.push_back("output.model=" + model_out);
      return cmd_train(train_opts.load());
    }
    if (tag->parsed()) {
      if (!tag_output.empty()) tag_opts.overrides.push_back("output.tagged=" + tag_output);
      return cmd_tag(tag_opts.load(), tag_model, tag_input);
    }
    if (eval->parsed()) return cmd_eval(eval_opts.load(), eval_model, eval_gold, records);
    if (al->parsed()) return cmd_al_simulate(al_opts.load());
    if (serve->parsed()) return cmd_serve(serve_opts.load());
  } catch (const std::exception& e) {
    std::cerr << "bagtag: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
