#include "bagtag/service.h"

#include <httplib.h>

#include <json.hpp>

namespace bagtag {

namespace {

using nlohmann::json;

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error(int status, const std::string& message) {
  return reply(status, json{{"accepted", false}, {"error", message}});
}

}  // namespace

struct AnnotationService::Server {
  httplib::Server http;
};

AnnotationService::AnnotationService(AnnotationSession& session)
    : session_(session), server_(std::make_unique<Server>()) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server_->http.Get("/session/status", route);
  server_->http.Get("/session/next", route);
  server_->http.Post("/session/label", route);
  server_->http.Post("/session/retrain", route);
}

AnnotationService::~AnnotationService() = default;

HttpResponse AnnotationService::handle(std::string_view method, std::string_view path,
                                       std::string_view body) const {
  if (method == "GET" && path == "/session/status") {
    const auto s = session_.status();
    json out{{"round", s.round},     {"labeled", s.labeled}, {"unlabeled", s.unlabeled},
             {"pending", s.pending}, {"done", s.done},       {"labels", session_.label_names()}};
    if (s.last_f1) out["last_f1"] = *s.last_f1;
    return reply(200, out);
  }
  if (method == "GET" && path == "/session/next") {
    const auto q = session_.next();
    if (!q) return reply(404, json{{"error", "no outstanding query"}, {"done", true}});
    json tokens = json::array();
    for (const auto& t : q->tokens) {
      json token{{"surface", t.surface}, {"suggestion", t.suggestion}};
      if (!t.marginals.empty()) token["marginals"] = t.marginals;
      tokens.push_back(std::move(token));
    }
    return reply(200, json{{"sentence_id", q->sentence_id}, {"tokens", tokens}, {"utility", q->utility}});
  }
  if (method == "POST" && path == "/session/label") {
    std::string id;
    std::vector<std::string> labels;
    try {
      const auto request = json::parse(body);
      id = request.at("sentence_id").get<std::string>();
      labels = request.at("labels").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      return error(400, std::string("malformed request: ") + e.what());
    }
    const auto result = session_.submit(id, labels);
    switch (result.status) {
      case SubmitStatus::kAccepted:
        return reply(200, json{{"accepted", true}, {"round", result.round}});
      case SubmitStatus::kDuplicate:
        return reply(200, json{{"accepted", true}, {"round", result.round}, {"duplicate", true}});
      case SubmitStatus::kConflict:
        return error(409, result.message);
      case SubmitStatus::kInvalid:
        return error(400, result.message);
    }
  }
  if (method == "POST" && path == "/session/retrain") {
    return reply(200, json{{"round", session_.retrain()}});
  }
  return reply(404, json{{"error", "no route for " + std::string(method) + " " + std::string(path)}});
}

int AnnotationService::bind(const std::string& host, int port) {
  if (port == 0) return server_->http.bind_to_any_port(host);
  return server_->http.bind_to_port(host, port) ? port : -1;
}

bool AnnotationService::listen() { return server_->http.listen_after_bind(); }

void AnnotationService::stop() { server_->http.stop(); }

}  // namespace bagtag
