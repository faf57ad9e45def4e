#pragma once

#include <chrono>
#include <string>
#include <utility>

#include <httplib.h>

#include "sentinel/json_io.hpp"
#include "sentinel/mimic.hpp"

namespace sentinel {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw error(errc::invalid_backend_config, "endpoint '" + url + "' has no scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline json remote_request_body(const BackendConfig& config, const ContextWindow& ctx) {
  json context = json::array();
  for (const auto& m : ctx.messages) context.push_back(message_to_json(m));
  return json{{"seed_prompt", config.seed_prompt},
              {"context", std::move(context)},
              {"max_new_tokens", config.max_new_tokens}};
}

// One POST per call, no retries.
inline PredictedReply remote_generate(const BackendConfig& config, const ContextWindow& ctx) {
  if (config.kind != BackendKind::Remote) {
    throw error(errc::invalid_backend_config, "backend kind is not remote");
  }
  config.validate();
  const auto endpoint = split_endpoint(*config.endpoint);

  httplib::Client client(endpoint.base);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const auto started = std::chrono::steady_clock::now();
  auto result = client.Post(endpoint.path, remote_request_body(config, ctx).dump(),
                            "application/json");
  if (!result) {
    const auto err = result.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                            std::chrono::steady_clock::now() - started >= config.timeout);
    if (timed_out) {
      throw error(errc::backend_timeout,
                  "no response within " + std::to_string(config.timeout.count()) + " ms");
    }
    throw error(errc::backend_unavailable, httplib::to_string(err));
  }
  if (result->status < 200 || result->status >= 300) {
    throw error(errc::backend_unavailable, "status " + std::to_string(result->status));
  }

  json body;
  try {
    body = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw error(errc::backend_protocol, e.what());
  }
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw error(errc::backend_protocol, "response lacks string field 'text'");
  }
  auto text = body["text"].get<std::string>();
  if (detail::is_blank(text)) throw error(errc::backend_protocol, "completion text is blank");
  return PredictedReply{std::move(text), std::string(to_string(BackendKind::Remote)),
                        context_digest(ctx)};
}

class RemoteBackend final : public ReplyBackend {
 public:
  explicit RemoteBackend(BackendConfig config) : config_(std::move(config)) {
    if (config_.kind != BackendKind::Remote) {
      throw error(errc::invalid_backend_config, "backend kind is not remote");
    }
    config_.validate();
  }

  [[nodiscard]] BackendKind kind() const noexcept override { return BackendKind::Remote; }
  PredictedReply predict(const ContextWindow& ctx) override { return remote_generate(config_, ctx); }

 private:
  BackendConfig config_;
};

}  // namespace sentinel
