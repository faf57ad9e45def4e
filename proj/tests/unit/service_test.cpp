#include "sentinel/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "service_harness.hpp"
#include "sentinel/corpus.hpp"

namespace sentinel {
namespace {

using testing::RunningService;
using testing::TempDir;

std::string shipped_corpus() { return std::string(SENTINEL_DATA_DIR) + "/corpus.jsonl"; }

int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

ServiceConfig base_config() {
  ServiceConfig cfg;
  cfg.corpus_path = shipped_corpus();
  cfg.sessions.backend.kind = BackendKind::Retrieval;
  cfg.sessions.backend.endpoint = "http://127.0.0.1:" + std::to_string(closed_port()) + "/complete";
  cfg.sessions.backend.timeout = std::chrono::milliseconds(500);
  return cfg;
}

TEST(ServiceConfig, FromJson) {
  const auto cfg = service_config_from_json(json::parse(R"({
    "host": "0.0.0.0", "port": 9090, "state_dir": "/tmp/x", "corpus_path": "c.jsonl", "k": 3,
    "survey_seed": 5, "backend": {"kind": "baseline", "rng_seed": 9},
    "thresholds": {"watch": 0.3, "likely": 0.6}, "survey_arms": {"treatment": "remote"}})"));
  EXPECT_EQ(cfg.host, "0.0.0.0");
  EXPECT_EQ(cfg.port, 9090);
  EXPECT_EQ(cfg.sessions.k, 3u);
  EXPECT_EQ(cfg.sessions.survey_seed, 5u);
  EXPECT_EQ(cfg.sessions.backend.kind, BackendKind::Baseline);
  EXPECT_EQ(cfg.sessions.backend.rng_seed, 9u);
  EXPECT_EQ(cfg.sessions.thresholds.watch, 0.3);
  EXPECT_EQ(cfg.sessions.treatment_backend, BackendKind::Remote);
  EXPECT_EQ(cfg.sessions.control_backend, BackendKind::Baseline);
  EXPECT_EQ(testing::error_code_of([] { service_config_from_json(json{{"backend", "foo"}}); }),
            errc::unknown_backend);
  EXPECT_EQ(testing::error_code_of([] { service_config_from_json(json{{"k", 0}}); }), errc::invalid_window);
}

TEST(ServiceStartup, RetrievalNeedsCorpus) {
  ServiceConfig cfg;
  cfg.sessions.backend.kind = BackendKind::Retrieval;
  EXPECT_EQ(testing::error_code_of([&] { SentinelService s(cfg); }), errc::invalid_backend_config);
  cfg.corpus_path = "/nonexistent/corpus.jsonl";
  EXPECT_EQ(testing::error_code_of([&] { SentinelService s(cfg); }), errc::io_failure);
}

TEST(ServiceHttp, SessionLifecycle) {
  RunningService svc(base_config());
  const auto created = svc.post("/sessions", json::object());
  ASSERT_EQ(created.status, 200);
  const auto id = created.body["id"].get<std::string>();
  EXPECT_FALSE(created.body.contains("arm"));

  const auto fresh = svc.get("/sessions/" + id);
  ASSERT_EQ(fresh.status, 200);
  EXPECT_TRUE(fresh.body["transcript"].empty());
  EXPECT_EQ(fresh.body["alert"], "none");
  EXPECT_TRUE(fresh.body["summary"].is_null());
  EXPECT_EQ(fresh.body["backend_id"], "retrieval");

  const auto v = svc.post("/sessions/" + id + "/messages", {{"role", "victim"}, {"text", "Hello, who is this?"}});
  ASSERT_EQ(v.status, 200);
  EXPECT_TRUE(v.body["score"].is_null());
  EXPECT_TRUE(v.body["prediction"].is_object());
  EXPECT_FALSE(v.body["prediction"].contains("backend_id"));

  const auto s = svc.post("/sessions/" + id + "/messages",
                          {{"role", "scammer"}, {"text", "This is the police, your account is frozen."}});
  ASSERT_EQ(s.status, 200);
  EXPECT_EQ(s.body["score"]["turn_index"], 1);
  EXPECT_TRUE(s.body["prediction"].is_null());
  EXPECT_EQ(s.body["summary"]["n_scored"], 1);

  const auto report = svc.get("/sessions/" + id);
  EXPECT_EQ(report.body["transcript"].size(), 2u);
  EXPECT_EQ(report.body["scores"].size(), 1u);
  EXPECT_EQ(svc.get("/sessions/" + id).body, report.body);

  EXPECT_EQ(svc.del("/sessions/" + id).status, 200);
  EXPECT_EQ(svc.get("/sessions/" + id).status, 404);
}

TEST(ServiceHttp, StatusCodes) {
  RunningService svc(base_config());
  const auto unknown = svc.get("/sessions/does-not-exist");
  EXPECT_EQ(unknown.status, 404);
  EXPECT_EQ(unknown.body["error"], "UnknownSession");
  EXPECT_EQ(svc.post("/sessions/does-not-exist/messages", {{"role", "victim"}, {"text", "x"}}).status, 404);
  EXPECT_EQ(svc.del("/sessions/does-not-exist").status, 404);

  const auto foo = svc.post("/sessions", {{"backend", "foo"}});
  EXPECT_EQ(foo.status, 422);
  EXPECT_EQ(foo.body["error"], "UnknownBackend");
  EXPECT_EQ(svc.post("/sessions", {{"thresholds", {{"watch", 0.9}, {"likely", 0.1}}}}).status, 422);
  EXPECT_EQ(svc.post_raw("/sessions", "{not json").status, 422);

  const auto id = svc.post("/sessions", json::object()).body["id"].get<std::string>();
  const auto blank = svc.post("/sessions/" + id + "/messages", {{"role", "victim"}, {"text", "   "}});
  EXPECT_EQ(blank.status, 422);
  EXPECT_EQ(blank.body["error"], "BlankMessage");
  EXPECT_EQ(svc.post("/sessions/" + id + "/messages", {{"role", "bot"}, {"text", "hi"}}).status, 422);

  const auto remote = svc.post("/sessions", {{"backend", "remote"}});
  ASSERT_EQ(remote.status, 200);
  const auto rid = remote.body["id"].get<std::string>();
  const auto failed = svc.post("/sessions/" + rid + "/messages", {{"role", "victim"}, {"text", "hello"}});
  EXPECT_EQ(failed.status, 502);
  EXPECT_EQ(failed.body["error"], "BackendUnavailable");
  const auto after = svc.get("/sessions/" + rid);
  EXPECT_EQ(after.body["transcript"].size(), 1u);
  EXPECT_TRUE(after.body["pending_prediction"].is_null());
}

TEST(ServiceHttp, SurveyBlinding) {
  RunningService svc(base_config());
  for (int i = 0; i < 6; ++i) {
    const std::string key = "participant-" + std::to_string(i);
    const auto created = svc.post("/sessions", {{"survey_key", key}});
    ASSERT_EQ(created.status, 200);
    const auto label = created.body["arm"].get<std::string>();
    EXPECT_TRUE(label == "Model A" || label == "Model B");
    const auto id = created.body["id"].get<std::string>();
    svc.post("/sessions/" + id + "/messages", {{"role", "victim"}, {"text", "hi there"}});
    const auto report = svc.get("/sessions/" + id);
    EXPECT_EQ(report.body["arm"], label);
    EXPECT_FALSE(report.body.contains("backend_id"));
    const auto dump = report.body.dump();
    EXPECT_EQ(dump.find("retrieval"), std::string::npos);
    EXPECT_EQ(dump.find("baseline"), std::string::npos);

    const auto submitted = svc.post("/survey/responses", {{"participant_key", key},
                                                          {"conversation_label", "scam"},
                                                          {"judged_context_suited", true},
                                                          {"usefulness", 4}});
    ASSERT_EQ(submitted.status, 200);
    EXPECT_EQ(submitted.body["arm"], label);
  }
  const auto bad = svc.post("/survey/responses", {{"participant_key", "p"},
                                                  {"conversation_label", "scam"},
                                                  {"judged_context_suited", true},
                                                  {"usefulness", 6}});
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(bad.body["error"], "InvalidUsefulness");

  const auto report = svc.get("/survey/report");
  ASSERT_EQ(report.status, 200);
  EXPECT_EQ(report.body["total"], 6);
  EXPECT_EQ(report.body["arm_backends"]["treatment"], "retrieval");
  EXPECT_TRUE(report.body["table"].is_string());
}

TEST(ServiceHttp, EmptySurveyReport) {
  RunningService svc(base_config());
  const auto r = svc.get("/survey/report");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"], "EmptyResponses");
}

TEST(ServiceHttp, Evaluate) {
  RunningService svc(base_config());
  const auto corpus = load_corpus(shipped_corpus());
  json inline_corpus = json::array();
  for (std::size_t i = 0; i < 5; ++i) inline_corpus.push_back(conversation_to_json(corpus[i]));
  const auto r = svc.post("/evaluate", {{"corpus", inline_corpus}, {"rng_seed", 3}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["backend_a"]["backend_id"], "retrieval");
  EXPECT_EQ(r.body["backend_b"]["backend_id"], "baseline");
  EXPECT_EQ(r.body["n_conversations"], 5);
  // The service index contains these conversations; contexts shared between
  // variants resolve to the tie-break winner, so the mean sits just below 1.
  EXPECT_GT(r.body["backend_a"]["mean_of_means"].get<double>(), 0.9);
  EXPECT_GT(r.body["backend_a"]["mean_of_means"].get<double>(),
            r.body["backend_b"]["mean_of_means"].get<double>());
  EXPECT_NE(r.body["table"].get<std::string>().find("Instances of retrieval > baseline"), std::string::npos);

  EXPECT_EQ(svc.post("/evaluate", json::object()).status, 422);
  EXPECT_EQ(svc.post("/evaluate", {{"corpus", json::array()}}).status, 422);
  EXPECT_EQ(svc.post("/evaluate", {{"corpus_path", "/nonexistent.jsonl"}}).status, 500);
  EXPECT_EQ(svc.post("/evaluate", {{"corpus", inline_corpus}, {"backend_a", "foo"}}).status, 422);
}

TEST(ServiceHttp, RestartPreservesSessionsAndSurvey) {
  TempDir dir;
  auto cfg = base_config();
  cfg.state_dir = dir.path().string();
  std::string id;
  json before;
  {
    RunningService svc(cfg);
    id = svc.post("/sessions", json::object()).body["id"].get<std::string>();
    svc.post("/sessions/" + id + "/messages", {{"role", "victim"}, {"text", "Hi, I saw your job advert."}});
    svc.post("/sessions/" + id + "/messages",
             {{"role", "scammer"}, {"text", "Great, you can earn money liking videos."}});
    svc.post("/survey/responses", {{"participant_key", "k1"},
                                   {"conversation_label", "legitimate"},
                                   {"judged_context_suited", false},
                                   {"usefulness", 2}});
    before = svc.get("/sessions/" + id).body;
  }
  RunningService svc(cfg);
  EXPECT_EQ(svc.get("/sessions/" + id).body, before);
  EXPECT_EQ(svc.get("/survey/report").body["total"], 1);
}

}  // namespace
}  // namespace sentinel
