#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>

#include "sentinel/corpus.hpp"
#include "sentinel/evaluation.hpp"
#include "sentinel/json_io.hpp"
#include "sentinel/session.hpp"
#include "sentinel/survey.hpp"

namespace sentinel {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> state_dir;
  std::optional<std::string> corpus_path;
  SessionDefaults sessions;
};

inline ServiceConfig service_config_from_json(const json& j, ServiceConfig base = {}) {
  if (!j.is_object()) throw error(errc::malformed_record, "service config must be an object");
  try {
    if (j.contains("host")) base.host = j["host"].get<std::string>();
    if (j.contains("port")) base.port = j["port"].get<int>();
    if (j.contains("state_dir")) base.state_dir = j["state_dir"].get<std::string>();
    if (j.contains("corpus_path")) base.corpus_path = j["corpus_path"].get<std::string>();
    if (j.contains("k")) base.sessions.k = j["k"].get<std::size_t>();
    if (j.contains("survey_seed")) base.sessions.survey_seed = j["survey_seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw error(errc::malformed_record, e.what());
  }
  if (j.contains("backend")) base.sessions.backend = backend_config_from_json(j["backend"], base.sessions.backend);
  if (j.contains("thresholds")) base.sessions.thresholds = thresholds_from_json(j["thresholds"]);
  if (j.contains("survey_arms")) {
    const auto& arms = j["survey_arms"];
    const auto kind = [&](const char* key, BackendKind fallback) {
      if (!arms.contains(key)) return fallback;
      const auto parsed = parse_backend_kind(arms[key].get<std::string>());
      if (!parsed) throw error(errc::unknown_backend, arms[key].dump());
      return *parsed;
    };
    base.sessions.treatment_backend = kind("treatment", base.sessions.treatment_backend);
    base.sessions.control_backend = kind("control", base.sessions.control_backend);
  }
  if (base.sessions.k == 0) throw error(errc::invalid_window, "k must be at least 1");
  return base;
}

inline ServiceConfig load_service_config(const std::string& path, ServiceConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open '" + path + "'");
  try {
    return service_config_from_json(json::parse(in), std::move(base));
  } catch (const json::parse_error& e) {
    throw error(errc::malformed_record, e.what());
  }
}

inline BackendResources resources_from_corpus(std::span<const Conversation> corpus, std::size_t k) {
  return BackendResources{
      std::make_shared<const ReplyIndex>(build_reply_index(corpus, k)),
      std::make_shared<const std::vector<std::string>>(scammer_reply_pool(corpus))};
}

// Survey responses, journaled to <state_dir>/survey.jsonl when persistent.
class SurveyStore {
 public:
  explicit SurveyStore(std::uint64_t seed, std::optional<std::filesystem::path> path = std::nullopt)
      : seed_(seed) {
    if (path) {
      journal_ = Journal(*path);
      if (std::filesystem::exists(*path)) {
        for (const auto& rec : journal_.read()) responses_.push_back(survey_response_from_json(rec));
      }
    }
  }

  // Arm comes from the participant key, never from the client.
  SurveyResponse submit(const json& body) {
    if (!body.is_object() || !body.contains("participant_key") || !body["participant_key"].is_string()) {
      throw error(errc::malformed_record, "missing string field 'participant_key'");
    }
    const auto arm = assign_arm(body["participant_key"].get<std::string>(), seed_);
    auto response = survey_response_from_json(body, arm);
    std::lock_guard lock(mutex_);
    journal_.append(to_json(response));
    responses_.push_back(response);
    return response;
  }

  [[nodiscard]] std::vector<SurveyResponse> responses() const {
    std::lock_guard lock(mutex_);
    return responses_;
  }

 private:
  std::uint64_t seed_;
  Journal journal_;
  mutable std::mutex mutex_;
  std::vector<SurveyResponse> responses_;
};

inline int http_status(errc code) noexcept {
  switch (code) {
    case errc::unknown_session: return 404;
    case errc::backend_timeout:
    case errc::backend_protocol:
    case errc::backend_unavailable: return 502;
    case errc::io_failure: return 500;
    default: return 422;
  }
}

inline json prediction_to_json(const PredictedReply& p) {
  return json{{"text", p.text}, {"context_digest", p.context_digest}};
}

inline json to_json(const AppendResult& r, const AlertThresholds& thresholds) {
  return json{{"score", r.score ? json{{"turn_index", r.score->turn_index},
                                       {"similarity", r.score->similarity}}
                                : json(nullptr)},
              {"prediction", r.prediction ? prediction_to_json(*r.prediction) : json(nullptr)},
              {"summary", r.summary ? to_json(*r.summary) : json(nullptr)},
              {"alert", to_string(r.alert)},
              {"thresholds", to_json(thresholds)}};
}

// Survey sessions expose only the blinded arm label, never the backend.
inline json to_json(const SessionReport& r) {
  json turns = json::array();
  for (const auto& m : r.transcript.turns) {
    turns.push_back({{"index", m.index}, {"role", to_string(m.role)}, {"text", m.text}});
  }
  json scores = json::array();
  for (const auto& s : r.scores) scores.push_back({{"turn_index", s.turn_index}, {"similarity", s.similarity}});
  json out{{"id", r.id},
           {"transcript", std::move(turns)},
           {"scores", std::move(scores)},
           {"summary", r.summary ? to_json(*r.summary) : json(nullptr)},
           {"alert", to_string(r.alert)},
           {"thresholds", to_json(r.thresholds)},
           {"pending_prediction",
            r.pending_prediction ? prediction_to_json(*r.pending_prediction) : json(nullptr)},
           {"created_at", r.created_at},
           {"updated_at", r.updated_at}};
  if (r.arm) {
    out["arm"] = blinded_label(*r.arm);
  } else {
    out["backend_id"] = r.backend_id;
  }
  return out;
}

class SentinelService {
 public:
  explicit SentinelService(ServiceConfig config) : config_(std::move(config)) {
    BackendResources resources;
    if (config_.corpus_path) {
      const auto corpus = load_corpus(*config_.corpus_path);
      resources = resources_from_corpus(corpus, config_.sessions.k);
    } else if (config_.sessions.backend.kind == BackendKind::Retrieval) {
      throw error(errc::invalid_backend_config, "retrieval backend selected but no corpus_path configured");
    }
    std::optional<std::filesystem::path> state;
    if (config_.state_dir) state = std::filesystem::path(*config_.state_dir);
    sessions_ = std::make_unique<SessionManager>(config_.sessions, std::move(resources), state);
    std::optional<std::filesystem::path> survey_path;
    if (state) survey_path = *state / "survey.jsonl";
    survey_ = std::make_unique<SurveyStore>(config_.sessions.survey_seed, survey_path);
    // SO_REUSEADDR only: a second instance on the same port must fail to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    install_routes();
  }

  SentinelService(const SentinelService&) = delete;
  SentinelService& operator=(const SentinelService&) = delete;

  ~SentinelService() { stop(); }

  // Blocks until stop().
  bool listen() { return server_.listen(config_.host, config_.port); }

  // Binds the configured address; follow with listen_after_bind().
  bool bind() { return server_.bind_to_port(config_.host, config_.port); }

  // Binds an ephemeral port; follow with listen_after_bind().
  int bind_any_port() { return server_.bind_to_any_port(config_.host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void stop() {
    if (server_.is_running()) server_.stop();
  }

  void wait_until_ready() const { server_.wait_until_ready(); }

  [[nodiscard]] SessionManager& sessions() noexcept { return *sessions_; }
  [[nodiscard]] SurveyStore& survey() noexcept { return *survey_; }
  [[nodiscard]] const ServiceConfig& config() const noexcept { return config_; }

 private:
  using Handler = std::function<json(const httplib::Request&)>;

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static json parse_body(const httplib::Request& req) {
    try {
      return req.body.empty() ? json::object() : json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw error(errc::malformed_record, e.what());
    }
  }

  static httplib::Server::Handler wrap(Handler handler) {
    return [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, 200, handler(req));
      } catch (const error& e) {
        reply(res, http_status(e.code()), {{"error", to_string(e.code())}, {"message", e.what()}});
      } catch (const json::exception& e) {
        reply(res, 422, {{"error", "MalformedRecord"}, {"message", e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", "Internal"}, {"message", e.what()}});
      }
    };
  }

  json create_session(const httplib::Request& req) {
    const json body = parse_body(req);
    SessionRequest request;
    if (body.contains("backend")) {
      if (!body["backend"].is_string()) throw error(errc::unknown_backend, body["backend"].dump());
      request.backend = body["backend"].get<std::string>();
    }
    if (body.contains("thresholds")) request.thresholds = thresholds_from_json(body["thresholds"]);
    if (body.contains("survey_key")) request.survey_key = body["survey_key"].get<std::string>();
    const auto id = sessions_->create(request);
    json out{{"id", id}};
    if (request.survey_key) {
      out["arm"] = blinded_label(assign_arm(*request.survey_key, config_.sessions.survey_seed));
    }
    return out;
  }

  json append_message(const httplib::Request& req) {
    const json body = parse_body(req);
    if (!body.contains("role") || !body["role"].is_string()) {
      throw error(errc::malformed_record, "missing string field 'role'");
    }
    const auto role = parse_role(body["role"].get<std::string>());
    if (!role) throw error(errc::malformed_record, "role must be 'scammer' or 'victim'");
    if (!body.contains("text") || !body["text"].is_string()) {
      throw error(errc::blank_message, "missing string field 'text'");
    }
    const auto& id = req.matches[1].str();
    const auto result = sessions_->append(id, *role, body["text"].get<std::string>());
    return to_json(result, sessions_->report(id).thresholds);
  }

  json evaluate(const httplib::Request& req) {
    const json body = parse_body(req);
    std::vector<Conversation> validation;
    if (body.contains("corpus_path")) {
      validation = load_corpus(body["corpus_path"].get<std::string>());
    } else if (body.contains("corpus") && body["corpus"].is_array()) {
      for (const auto& c : body["corpus"]) validation.push_back(conversation_from_json(c));
    } else {
      throw error(errc::empty_validation_set, "supply 'corpus_path' or an inline 'corpus' array");
    }
    const std::size_t k = body.value("k", config_.sessions.k);
    if (k == 0) throw error(errc::invalid_window, "k must be at least 1");
    BackendResources resources = sessions_->resources();
    if (k != config_.sessions.k && config_.corpus_path) {
      resources = resources_from_corpus(load_corpus(*config_.corpus_path), k);
    }
    const auto backend_named = [&](const char* field, const char* fallback) {
      BackendConfig cfg = config_.sessions.backend;
      if (body.contains(field)) {
        cfg = backend_config_from_json(body[field], cfg);
      } else {
        cfg.kind = *parse_backend_kind(fallback);
      }
      if (body.contains("rng_seed")) cfg.rng_seed = body["rng_seed"].get<std::uint64_t>();
      if (cfg.kind == BackendKind::Baseline && !cfg.rng_seed) cfg.rng_seed = SessionManager::kDefaultBaselineSeed;
      return make_backend(cfg, resources);
    };
    auto a = backend_named("backend_a", "retrieval");
    auto b = backend_named("backend_b", "baseline");
    const auto report = compare_backends(*a, *b, validation, k);
    json out = to_json(report);
    out["table"] = render_comparison_table(report);
    return out;
  }

  json survey_report() {
    const auto responses = survey_->responses();
    const auto report = aggregate_survey(responses);
    const ArmNames names{std::string(to_string(config_.sessions.control_backend)),
                         std::string(to_string(config_.sessions.treatment_backend))};
    json out = to_json(report);
    out["arm_backends"] = {{"treatment", names.treatment}, {"control", names.control}};
    out["table"] = render_survey_table(report, names);
    return out;
  }

  void install_routes() {
    server_.Post("/sessions", wrap([this](const auto& req) { return create_session(req); }));
    server_.Post(R"(/sessions/([^/]+)/messages)",
                 wrap([this](const auto& req) { return append_message(req); }));
    server_.Get(R"(/sessions/([^/]+))", wrap([this](const auto& req) {
                  return to_json(sessions_->report(req.matches[1].str()));
                }));
    server_.Delete(R"(/sessions/([^/]+))", wrap([this](const auto& req) {
                     sessions_->remove(req.matches[1].str());
                     return json{{"deleted", req.matches[1].str()}};
                   }));
    server_.Post("/evaluate", wrap([this](const auto& req) { return evaluate(req); }));
    server_.Post("/survey/responses", wrap([this](const auto& req) {
                   const auto r = survey_->submit(parse_body(req));
                   return json{{"accepted", true}, {"arm", blinded_label(r.arm)}};
                 }));
    server_.Get("/survey/report", wrap([this](const auto&) { return survey_report(); }));
  }

  ServiceConfig config_;
  std::unique_ptr<SessionManager> sessions_;
  std::unique_ptr<SurveyStore> survey_;
  httplib::Server server_;
};

}  // namespace sentinel
