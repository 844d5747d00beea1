#ifndef BAGTAG_SERVICE_H_
#define BAGTAG_SERVICE_H_

// JSON-over-HTTP annotation protocol:
//   GET  /session/status  -> {round, labeled, unlabeled, pending, done, labels, last_f1?}
//   GET  /session/next    -> {sentence_id, tokens:[{surface, suggestion, marginals?}], utility}
//   POST /session/label   {sentence_id, labels:[...]} -> {accepted, round}
//   POST /session/retrain -> {round}
// A stale or foreign sentence id gets 409, malformed labels 400, and no
// outstanding query 404.

#include <memory>
#include <string>
#include <string_view>

#include "bagtag/session.h"

namespace bagtag {

struct HttpResponse {
  int status = 200;
  std::string body;
};

class AnnotationService {
 public:
  explicit AnnotationService(AnnotationSession& session);
  ~AnnotationService();

  // Routes one request without a socket.
  HttpResponse handle(std::string_view method, std::string_view path,
                      std::string_view body) const;

  // Binds `host`; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  bool listen();
  void stop();

 private:
  AnnotationSession& session_;
  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace bagtag

#endif  // BAGTAG_SERVICE_H_
