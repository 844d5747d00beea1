#ifndef BAGTAG_SESSION_H_
#define BAGTAG_SESSION_H_

// Human-in-the-loop active learning. One sentence is outstanding at a time;
// accepted labels accumulate until the round's batch is complete, then the
// ensemble is retrained exactly as the simulated loop would.

#include <cstddef>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "bagtag/active.h"
#include "bagtag/corpus.h"

namespace bagtag {

inline constexpr int kSessionFormatVersion = 1;

struct SessionStatus {
  std::size_t round = 0;      // committed rounds
  std::size_t labeled = 0;    // |T| plus accepted, uncommitted labels
  std::size_t unlabeled = 0;  // |U| minus accepted, uncommitted labels
  std::size_t pending = 0;
  std::optional<double> last_f1;
  bool done = false;
};

struct QueryToken {
  std::string surface;
  std::string suggestion;
  std::vector<double> marginals;  // empty unless the decoder is bp
};

struct QueryView {
  std::string sentence_id;
  std::vector<QueryToken> tokens;
  double utility = 0.0;
};

enum class SubmitStatus {
  kAccepted,
  kDuplicate,  // repeat of the last accepted submission; nothing changes
  kConflict,   // sentence is not the outstanding query
  kInvalid,    // wrong length or unknown label name
};

struct SubmitResult {
  SubmitStatus status = SubmitStatus::kAccepted;
  std::string message;
  std::size_t round = 0;
};

class AnnotationSession {
 public:
  // Resumes from `state_path` when it exists. An empty `state_path` keeps
  // the session in memory; an empty `audit_path` disables the audit log.
  AnnotationSession(Corpus pool, ALConfig config, Corpus test, std::string state_path,
                    std::string audit_path);

  // Reads return the view published after the last mutation and never wait
  // for retraining.
  SessionStatus status() const;
  std::optional<QueryView> next() const;
  std::vector<std::string> label_names() const;

  SubmitResult submit(const std::string& sentence_id, const std::vector<std::string>& labels);
  // Commits the accepted, uncommitted labels as a (possibly short) round.
  std::size_t retrain();

  // Serialized state; what is written to `state_path`.
  std::string state_json() const;
  const ActiveLearner& learner() const { return learner_; }

 private:
  void load_state(const std::string& text);
  void persist() const;
  void audit(const std::string& sentence_id, const std::vector<std::string>& labels,
             std::string_view outcome) const;
  void commit_pending();
  void publish();
  std::optional<std::string> outstanding() const;

  ActiveLearner learner_;
  std::string state_path_;
  std::string audit_path_;
  std::vector<std::string> batch_;
  std::vector<LabeledExample> pending_;
  std::optional<LabeledExample> last_accepted_;

  std::mutex mutate_;
  mutable std::shared_mutex view_mutex_;
  SessionStatus status_view_;
  std::optional<QueryView> next_view_;
};

}  // namespace bagtag

#endif  // BAGTAG_SESSION_H_
