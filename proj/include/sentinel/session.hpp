#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sentinel/conversation.hpp"
#include "sentinel/corpus.hpp"
#include "sentinel/json_io.hpp"
#include "sentinel/mimic.hpp"
#include "sentinel/remote.hpp"
#include "sentinel/scoring.hpp"
#include "sentinel/survey.hpp"

namespace sentinel {

inline std::int64_t now_utc_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// 128 random bits as 32 lowercase hex characters.
inline std::string new_session_id() {
  thread_local std::mt19937_64 engine{[] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
    return std::mt19937_64(seq);
  }()};
  return fmt::format("{:016x}{:016x}", engine(), engine());
}

inline json to_json(const BackendConfig& c) {
  json j{{"kind", to_string(c.kind)},
         {"seed_prompt", c.seed_prompt},
         {"timeout_ms", c.timeout.count()},
         {"max_new_tokens", c.max_new_tokens}};
  j["endpoint"] = c.endpoint ? json(*c.endpoint) : json(nullptr);
  j["rng_seed"] = c.rng_seed ? json(*c.rng_seed) : json(nullptr);
  return j;
}

// Fields absent from `j` keep the values of `base`.
inline BackendConfig backend_config_from_json(json j, BackendConfig base = {}) {
  if (j.is_string()) j = json{{"kind", j}};
  if (!j.is_object()) throw error(errc::unknown_backend, "backend must be a name or an object");
  if (j.contains("kind")) {
    const auto name = j["kind"].is_string() ? j["kind"].get<std::string>() : std::string{};
    const auto kind = parse_backend_kind(name);
    if (!kind) throw error(errc::unknown_backend, "'" + name + "'");
    base.kind = *kind;
  }
  try {
    if (j.contains("endpoint")) {
      base.endpoint = j["endpoint"].is_null() ? std::nullopt
                                              : std::optional(j["endpoint"].get<std::string>());
    }
    if (j.contains("seed_prompt")) base.seed_prompt = j["seed_prompt"].get<std::string>();
    if (j.contains("timeout_ms")) base.timeout = std::chrono::milliseconds(j["timeout_ms"].get<std::int64_t>());
    if (j.contains("max_new_tokens")) base.max_new_tokens = j["max_new_tokens"].get<int>();
    if (j.contains("rng_seed")) {
      base.rng_seed = j["rng_seed"].is_null() ? std::nullopt
                                              : std::optional(j["rng_seed"].get<std::uint64_t>());
    }
  } catch (const json::exception& e) {
    throw error(errc::invalid_backend_config, e.what());
  }
  return base;
}

inline json to_json(const AlertThresholds& t) { return json{{"watch", t.watch}, {"likely", t.likely}}; }

inline AlertThresholds thresholds_from_json(const json& j, AlertThresholds base = {}) {
  if (!j.is_object()) throw error(errc::invalid_thresholds, "thresholds must be an object");
  try {
    if (j.contains("watch")) base.watch = j["watch"].get<double>();
    if (j.contains("likely")) base.likely = j["likely"].get<double>();
  } catch (const json::exception& e) {
    throw error(errc::invalid_thresholds, e.what());
  }
  base.validate();
  return base;
}

// Shared, immutable inputs for building per-session backends.
struct BackendResources {
  std::shared_ptr<const ReplyIndex> index;
  std::shared_ptr<const std::vector<std::string>> pool;
};

inline std::unique_ptr<ReplyBackend> make_backend(const BackendConfig& config,
                                                  const BackendResources& resources) {
  config.validate();
  switch (config.kind) {
    case BackendKind::Retrieval:
      if (!resources.index) throw error(errc::unknown_backend, "retrieval needs a loaded corpus");
      return std::make_unique<RetrievalBackend>(resources.index);
    case BackendKind::Baseline:
      if (!resources.pool) throw error(errc::unknown_backend, "baseline needs a loaded corpus");
      return std::make_unique<BaselineBackend>(resources.pool, *config.rng_seed);
    case BackendKind::Remote:
      return std::make_unique<RemoteBackend>(config);
  }
  throw error(errc::unknown_backend, std::string(to_string(config.kind)));
}

struct SessionReport {
  std::string id;
  Conversation transcript;
  std::vector<TurnScore> scores;
  std::optional<SimilaritySummary> summary;
  AlertLevel alert = AlertLevel::None;
  AlertThresholds thresholds;
  std::string backend_id;
  std::optional<Arm> arm;
  std::optional<PredictedReply> pending_prediction;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
};

struct AppendResult {
  std::optional<TurnScore> score;
  std::optional<PredictedReply> prediction;
  std::optional<SimilaritySummary> summary;
  AlertLevel alert = AlertLevel::None;
};

// Appends one JSON record per line and flushes each.
class Journal {
 public:
  Journal() = default;
  explicit Journal(std::filesystem::path path) : path_(std::move(path)) {}

  [[nodiscard]] bool enabled() const noexcept { return !path_.empty(); }

  void append(const json& record) {
    if (!enabled()) return;
    std::ofstream out(path_, std::ios::app);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw error(errc::io_failure, "cannot append to '" + path_.string() + "'");
  }

  // Records in order. A torn final line (interrupted write) is ignored.
  [[nodiscard]] std::vector<json> read() const {
    std::ifstream in(path_);
    if (!in) throw error(errc::io_failure, "cannot open '" + path_.string() + "'");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
      if (!detail::is_blank(line)) lines.push_back(std::move(line));
    }
    std::vector<json> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      try {
        records.push_back(json::parse(lines[i]));
      } catch (const json::parse_error& e) {
        if (i + 1 == lines.size()) break;
        throw record_error(errc::malformed_record, i + 1, e.what());
      }
    }
    return records;
  }

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

class Session {
 public:
  Session(std::string id, BackendConfig config, std::unique_ptr<ReplyBackend> backend,
          AlertThresholds thresholds, std::optional<Arm> arm, std::size_t k, Journal journal,
          std::int64_t created_at)
      : id_(std::move(id)),
        config_(std::move(config)),
        backend_(std::move(backend)),
        thresholds_(thresholds),
        arm_(arm),
        k_(k),
        journal_(std::move(journal)),
        created_at_(created_at),
        updated_at_(created_at) {
    transcript_.id = id_;
    transcript_.label = Label::Unlabeled;
  }

  [[nodiscard]] const std::string& id() const noexcept { return id_; }

  void journal_created() {
    json rec{{"type", "created"},
             {"id", id_},
             {"backend", to_json(config_)},
             {"thresholds", to_json(thresholds_)},
             {"k", k_},
             {"ts", created_at_}};
    if (arm_) rec["arm"] = to_string(*arm_);
    journal_.append(rec);
  }

  // Scores a counterpart message against the pending prediction, then
  // predicts afresh after a user message. On backend failure the message
  // stays appended, no prediction is pending, and the error propagates.
  AppendResult append(Role role, std::string text) {
    if (detail::is_blank(text)) throw error(errc::blank_message, "message text is blank");
    std::lock_guard write_lock(write_mutex_);
    AppendResult result;
    ContextWindow ctx;
    {
      std::lock_guard lock(state_mutex_);
      const std::int64_t ts = touch();
      journal_.append({{"type", "message"}, {"role", to_string(role)}, {"text", text}, {"ts", ts}});
      const Message& msg = transcript_.append(role, std::move(text));
      if (role == Role::Scammer && pending_) {
        const auto score = score_turn(msg, *pending_);
        journal_.append({{"type", "score"},
                         {"turn_index", score.turn_index},
                         {"similarity", score.similarity},
                         {"ts", ts}});
        scores_.push_back(score);
        result.score = score;
      }
      pending_.reset();
      if (role == Role::Victim) ctx = context_window(transcript_, transcript_.turns.size(), k_);
    }
    if (role == Role::Victim) {
      auto prediction = backend_->predict(ctx);
      std::lock_guard lock(state_mutex_);
      const std::int64_t ts = touch();
      journal_.append({{"type", "prediction"},
                       {"text", prediction.text},
                       {"backend_id", prediction.backend_id},
                       {"context_digest", prediction.context_digest},
                       {"ts", ts}});
      pending_ = prediction;
      result.prediction = std::move(prediction);
    }
    std::lock_guard lock(state_mutex_);
    result.summary = summary_locked();
    result.alert = result.summary ? alert_state(*result.summary, thresholds_) : AlertLevel::None;
    return result;
  }

  [[nodiscard]] SessionReport report() const {
    std::lock_guard lock(state_mutex_);
    SessionReport r;
    r.id = id_;
    r.transcript = transcript_;
    r.scores = scores_;
    r.summary = summary_locked();
    r.alert = r.summary ? alert_state(*r.summary, thresholds_) : AlertLevel::None;
    r.thresholds = thresholds_;
    r.backend_id = std::string(backend_->id());
    r.arm = arm_;
    r.pending_prediction = pending_;
    r.created_at = created_at_;
    r.updated_at = updated_at_;
    return r;
  }

  void mark_deleted() {
    std::lock_guard write_lock(write_mutex_);
    std::lock_guard lock(state_mutex_);
    journal_.append({{"type", "deleted"}, {"ts", touch()}});
  }

  // Rebuilds state from journal records after the "created" record.
  void replay(const json& rec) {
    const auto type = rec.at("type").get<std::string>();
    const std::int64_t ts = rec.value("ts", updated_at_);
    updated_at_ = std::max(updated_at_, ts);
    if (type == "message") {
      const auto role = parse_role(rec.at("role").get<std::string>());
      if (!role) throw error(errc::malformed_record, "unknown role in journal");
      transcript_.append(*role, rec.at("text").get<std::string>());
      pending_.reset();
    } else if (type == "prediction") {
      pending_ = PredictedReply{rec.at("text").get<std::string>(),
                                rec.at("backend_id").get<std::string>(),
                                rec.at("context_digest").get<std::uint64_t>()};
      if (auto* baseline = dynamic_cast<BaselineBackend*>(backend_.get())) baseline->fast_forward(1);
    } else if (type == "score") {
      scores_.push_back({rec.at("turn_index").get<std::size_t>(), rec.at("similarity").get<double>()});
    }
  }

 private:
  std::int64_t touch() {
    updated_at_ = std::max(updated_at_, now_utc_ms());
    return updated_at_;
  }

  [[nodiscard]] std::optional<SimilaritySummary> summary_locked() const {
    if (scores_.empty()) return std::nullopt;
    return summarize_conversation(scores_);
  }

  std::string id_;
  BackendConfig config_;
  std::unique_ptr<ReplyBackend> backend_;
  AlertThresholds thresholds_;
  std::optional<Arm> arm_;
  std::size_t k_;
  Journal journal_;
  std::int64_t created_at_;
  std::int64_t updated_at_;

  mutable std::mutex write_mutex_;
  mutable std::mutex state_mutex_;
  Conversation transcript_;
  std::vector<TurnScore> scores_;
  std::optional<PredictedReply> pending_;
};

struct SessionRequest {
  std::optional<std::string> backend;  // "retrieval" | "baseline" | "remote"
  std::optional<AlertThresholds> thresholds;
  std::optional<std::string> survey_key;  // picks the backend by blinded arm
};

struct SessionDefaults {
  BackendConfig backend;
  AlertThresholds thresholds;
  std::size_t k = kDefaultWindow;
  std::uint64_t survey_seed = 1;
  BackendKind treatment_backend = BackendKind::Retrieval;
  BackendKind control_backend = BackendKind::Baseline;
};

// Owns live sessions. With a state directory, every session is journaled
// under <state_dir>/sessions/<id>.jsonl and reloaded on construction.
class SessionManager {
 public:
  SessionManager(SessionDefaults defaults, BackendResources resources,
                 std::optional<std::filesystem::path> state_dir = std::nullopt)
      : defaults_(std::move(defaults)), resources_(std::move(resources)), state_dir_(std::move(state_dir)) {
    defaults_.thresholds.validate();
    if (state_dir_) {
      std::filesystem::create_directories(sessions_dir());
      reload();
    }
  }

  std::string create(const SessionRequest& request) {
    BackendConfig config = defaults_.backend;
    std::optional<Arm> arm;
    if (request.survey_key) {
      arm = assign_arm(*request.survey_key, defaults_.survey_seed);
      config.kind = *arm == Arm::Treatment ? defaults_.treatment_backend : defaults_.control_backend;
    } else if (request.backend) {
      const auto kind = parse_backend_kind(*request.backend);
      if (!kind) throw error(errc::unknown_backend, "'" + *request.backend + "'");
      config.kind = *kind;
    }
    if (config.kind == BackendKind::Baseline && !config.rng_seed) config.rng_seed = kDefaultBaselineSeed;
    const AlertThresholds thresholds = request.thresholds.value_or(defaults_.thresholds);
    thresholds.validate();
    auto backend = make_backend(config, resources_);

    std::string id = new_session_id();
    auto session = std::make_shared<Session>(id, config, std::move(backend), thresholds, arm,
                                             defaults_.k, journal_for(id), now_utc_ms());
    session->journal_created();
    std::unique_lock lock(mutex_);
    sessions_.emplace(id, std::move(session));
    return id;
  }

  AppendResult append(const std::string& id, Role role, std::string text) {
    return find(id)->append(role, std::move(text));
  }

  [[nodiscard]] SessionReport report(const std::string& id) const { return find(id)->report(); }

  void remove(const std::string& id) {
    std::shared_ptr<Session> session;
    {
      std::unique_lock lock(mutex_);
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) throw error(errc::unknown_session, id);
      session = it->second;
      sessions_.erase(it);
    }
    session->mark_deleted();
  }

  [[nodiscard]] std::size_t size() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
  }

  [[nodiscard]] const SessionDefaults& defaults() const noexcept { return defaults_; }
  [[nodiscard]] const BackendResources& resources() const noexcept { return resources_; }

  static constexpr std::uint64_t kDefaultBaselineSeed = 42;

 private:
  [[nodiscard]] std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw error(errc::unknown_session, "'" + id + "'");
    return it->second;
  }

  [[nodiscard]] std::filesystem::path sessions_dir() const { return *state_dir_ / "sessions"; }

  [[nodiscard]] Journal journal_for(const std::string& id) const {
    if (!state_dir_) return {};
    return Journal(sessions_dir() / (id + ".jsonl"));
  }

  void reload() {
    for (const auto& entry : std::filesystem::directory_iterator(sessions_dir())) {
      if (entry.path().extension() != ".jsonl") continue;
      Journal journal(entry.path());
      const auto records = journal.read();
      if (records.empty() || records.front().value("type", "") != "created") continue;
      if (std::any_of(records.begin(), records.end(),
                      [](const json& r) { return r.value("type", "") == "deleted"; })) {
        continue;
      }
      const auto& head = records.front();
      const auto id = head.at("id").get<std::string>();
      const auto config = backend_config_from_json(head.at("backend"));
      const auto thresholds = thresholds_from_json(head.at("thresholds"));
      std::optional<Arm> arm;
      if (head.contains("arm")) arm = parse_arm(head["arm"].get<std::string>());
      auto session = std::make_shared<Session>(
          id, config, make_backend(config, resources_), thresholds, arm,
          head.value("k", defaults_.k), std::move(journal), head.value("ts", std::int64_t{0}));
      for (std::size_t i = 1; i < records.size(); ++i) session->replay(records[i]);
      sessions_.emplace(id, std::move(session));
    }
  }

  SessionDefaults defaults_;
  BackendResources resources_;
  std::optional<std::filesystem::path> state_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
};

}  // namespace sentinel
