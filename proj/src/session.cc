#include "bagtag/session.h"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "bagtag/errors.h"
#include "bagtag/model_io.h"

namespace bagtag {

namespace {

using nlohmann::json;

json fingerprint(const ALConfig& c) {
  return json{{"flags", c.flags()},
              {"seed", c.seed},
              {"initial", c.initial},
              {"batch", c.batch},
              {"rounds", c.rounds},
              {"k", c.ensemble_size},
              {"sample_rate", c.sample_rate},
              {"nbest", c.nbest},
              {"features", c.features.to_string()},
              {"markov_order", c.trainer.markov_order}};
}

json example_json(const LabeledExample& ex, const LabelSet& labels) {
  json names = json::array();
  for (LabelId l : ex.labels) names.push_back(labels.name(l));
  return json{{"id", ex.id}, {"labels", names}};
}

LabeledExample example_from(const json& j, const LabelSet& labels) {
  LabeledExample ex;
  ex.id = j.at("id").get<std::string>();
  for (const auto& name : j.at("labels")) {
    auto id = labels.find(name.get<std::string>());
    if (!id) throw FormatError("session state names unknown label '" + name.get<std::string>() + "'");
    ex.labels.push_back(*id);
  }
  return ex;
}

}  // namespace

AnnotationSession::AnnotationSession(Corpus pool, ALConfig config, Corpus test,
                                     std::string state_path, std::string audit_path)
    : learner_(std::move(pool), std::move(config), std::move(test)),
      state_path_(std::move(state_path)),
      audit_path_(std::move(audit_path)) {
  if (!state_path_.empty() && std::filesystem::exists(state_path_)) {
    try {
      load_state(read_file(state_path_));
    } catch (const json::exception& e) {
      throw FormatError(state_path_ + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(state_path_ + ": " + e.what());
    }
  } else {
    batch_ = learner_.next_batch();
  }
  publish();
}

void AnnotationSession::load_state(const std::string& text) {
  const json state = json::parse(text);
  if (state.at("format").get<std::string>() != "bagtag-session") {
    throw FormatError("not a session state file");
  }
  const int version = state.at("version").get<int>();
  if (version > kSessionFormatVersion) {
    throw FormatError("session version " + std::to_string(version) +
                      " is newer than the supported version " +
                      std::to_string(kSessionFormatVersion));
  }
  if (state.at("config") != fingerprint(learner_.config())) {
    throw FormatError("session state was written with a different configuration");
  }
  const auto& labels = learner_.labels();
  std::vector<std::vector<LabeledExample>> history;
  for (const auto& batch : state.at("history")) {
    auto& out = history.emplace_back();
    for (const auto& ex : batch) out.push_back(example_from(ex, labels));
  }
  learner_.replay(history);
  batch_ = learner_.next_batch();
  for (const auto& ex : state.at("pending")) pending_.push_back(example_from(ex, labels));
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    if (i >= batch_.size() || pending_[i].id != batch_[i]) {
      throw FormatError("pending labels do not match the replayed query order");
    }
  }
  if (state.contains("last") && !state.at("last").is_null()) {
    last_accepted_ = example_from(state.at("last"), labels);
  }
}

std::string AnnotationSession::state_json() const {
  const auto& labels = learner_.labels();
  json history = json::array();
  for (const auto& batch : learner_.history()) {
    json b = json::array();
    for (const auto& ex : batch) b.push_back(example_json(ex, labels));
    history.push_back(std::move(b));
  }
  json pending = json::array();
  for (const auto& ex : pending_) pending.push_back(example_json(ex, labels));
  json state{{"format", "bagtag-session"},
             {"version", kSessionFormatVersion},
             {"config", fingerprint(learner_.config())},
             {"history", std::move(history)},
             {"pending", std::move(pending)},
             {"last", last_accepted_ ? example_json(*last_accepted_, labels) : json(nullptr)}};
  return state.dump(1) + "\n";
}

void AnnotationSession::persist() const {
  if (!state_path_.empty()) write_file(state_path_, state_json());
}

void AnnotationSession::audit(const std::string& sentence_id,
                              const std::vector<std::string>& labels,
                              std::string_view outcome) const {
  if (audit_path_.empty()) return;
  std::ofstream out(audit_path_, std::ios::app);
  if (!out) throw Error("cannot append to audit log '" + audit_path_ + "'");
  out << json{{"sentence_id", sentence_id},
              {"labels", labels},
              {"outcome", std::string(outcome)},
              {"round", learner_.rounds_completed()}}
             .dump()
      << '\n';
  out.flush();
  if (!out) throw Error("write to audit log '" + audit_path_ + "' failed");
}

std::optional<std::string> AnnotationSession::outstanding() const {
  if (pending_.size() < batch_.size()) return batch_[pending_.size()];
  return std::nullopt;
}

void AnnotationSession::commit_pending() {
  learner_.commit(pending_);
  pending_.clear();
  batch_ = learner_.next_batch();
}

SubmitResult AnnotationSession::submit(const std::string& sentence_id,
                                       const std::vector<std::string>& names) {
  std::lock_guard lock(mutate_);
  SubmitResult result;
  result.round = learner_.rounds_completed();
  if (last_accepted_ && last_accepted_->id == sentence_id) {
    std::vector<std::string> previous;
    for (LabelId l : last_accepted_->labels) previous.push_back(learner_.labels().name(l));
    if (previous == names) {
      audit(sentence_id, names, "duplicate");
      result.status = SubmitStatus::kDuplicate;
      return result;
    }
  }
  const auto current = outstanding();
  if (!current || *current != sentence_id) {
    audit(sentence_id, names, "conflict");
    result.status = SubmitStatus::kConflict;
    result.message = current ? "sentence '" + sentence_id + "' is not the outstanding query '" +
                                   *current + "'"
                             : "no query is outstanding";
    return result;
  }
  const Sentence* sentence = learner_.find_unlabeled(sentence_id);
  LabeledExample ex{sentence_id, {}};
  std::string problem;
  if (names.size() != sentence->size()) {
    problem = "expected " + std::to_string(sentence->size()) + " labels, got " +
              std::to_string(names.size());
  } else {
    for (const auto& name : names) {
      auto id = learner_.labels().find(name);
      if (!id) {
        problem = "unknown label '" + name + "'";
        break;
      }
      ex.labels.push_back(*id);
    }
  }
  if (!problem.empty()) {
    audit(sentence_id, names, "invalid");
    result.status = SubmitStatus::kInvalid;
    result.message = problem;
    return result;
  }

  audit(sentence_id, names, "accepted");
  pending_.push_back(ex);
  last_accepted_ = std::move(ex);
  if (pending_.size() == batch_.size()) commit_pending();
  persist();
  publish();
  result.round = learner_.rounds_completed();
  return result;
}

std::size_t AnnotationSession::retrain() {
  std::lock_guard lock(mutate_);
  if (!pending_.empty()) {
    commit_pending();
    persist();
    publish();
  }
  return learner_.rounds_completed();
}

void AnnotationSession::publish() {
  SessionStatus status;
  status.round = learner_.rounds_completed();
  status.pending = pending_.size();
  status.labeled = learner_.pool().labeled.size() + pending_.size();
  status.unlabeled = learner_.pool().unlabeled.size() - pending_.size();
  if (!learner_.curve().rows.empty()) status.last_f1 = learner_.curve().rows.back().micro_f1;

  std::optional<QueryView> view;
  if (const auto id = outstanding()) {
    const Sentence& s = *learner_.find_unlabeled(*id);
    const auto& labels = learner_.labels();
    QueryView q;
    q.sentence_id = *id;
    const auto& ensemble = learner_.ensemble();
    std::vector<LabelId> suggestion(s.size(), labels.has_outside() ? labels.outside() : 0);
    std::vector<double> marginals;
    if (ensemble) {
      suggestion = decode(*ensemble, s);
      if (ensemble->decoder == Decoder::kBeliefPropagation) {
        marginals = bps_aggregate(*ensemble, s);
        for (double& m : marginals) m /= static_cast<double>(ensemble->size());
      }
      const auto& utilities = learner_.utilities();
      const auto& pool = learner_.pool().unlabeled.sentences;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].id == *id) q.utility = utilities[i];
      }
    }
    for (std::size_t p = 0; p < s.size(); ++p) {
      QueryToken t;
      t.surface = s.tokens[p].surface;
      t.suggestion = labels.name(suggestion[p]);
      if (!marginals.empty()) {
        t.marginals.assign(marginals.begin() + p * labels.size(),
                           marginals.begin() + (p + 1) * labels.size());
      }
      q.tokens.push_back(std::move(t));
    }
    view = std::move(q);
  }
  status.done = !view && pending_.empty();

  std::unique_lock lock(view_mutex_);
  status_view_ = status;
  next_view_ = std::move(view);
}

SessionStatus AnnotationSession::status() const {
  std::shared_lock lock(view_mutex_);
  return status_view_;
}

std::optional<QueryView> AnnotationSession::next() const {
  std::shared_lock lock(view_mutex_);
  return next_view_;
}

std::vector<std::string> AnnotationSession::label_names() const {
  return learner_.labels().names();
}

}  // namespace bagtag
