#include "sentinel/evaluation.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <memory>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sentinel/corpus.hpp"
#include "sentinel/service.hpp"

namespace sentinel {
namespace {

using testing::error_code_of;

std::shared_ptr<const ReplyIndex> index_of(const std::vector<Conversation>& corpus, std::size_t k = 2) {
  return std::make_shared<const ReplyIndex>(build_reply_index(corpus, k));
}

// Replays a fixed list of replies in order.
class ScriptedBackend final : public ReplyBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  [[nodiscard]] BackendKind kind() const noexcept override { return BackendKind::Baseline; }
  PredictedReply predict(const ContextWindow& ctx) override {
    return {replies_.at(next_++ % replies_.size()), "scripted", context_digest(ctx)};
  }

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

TEST(EvaluateBackend, LeaveInRecoversEveryReply) {
  const auto corpus = testing::two_conversation_fixture();
  RetrievalBackend retrieval(index_of(corpus));
  const auto evals = evaluate_backend(retrieval, corpus);
  ASSERT_EQ(evals.size(), 2u);
  for (const auto& e : evals) {
    ASSERT_FALSE(e.skipped());
    EXPECT_EQ(e.scores.size(), 3u);
    EXPECT_DOUBLE_EQ(e.summary->mean, 1.0);
    EXPECT_DOUBLE_EQ(e.summary->max, 1.0);
  }
}

TEST(EvaluateBackend, EmptyValidationSet) {
  const auto corpus = testing::two_conversation_fixture();
  RetrievalBackend retrieval(index_of(corpus));
  const std::vector<Conversation> none;
  EXPECT_EQ(error_code_of([&] { evaluate_backend(retrieval, none); }), errc::empty_validation_set);
}

TEST(EvaluateBackend, ScoresOnlyScammerTurnsAfterFirst) {
  auto conv = testing::make_conversation("c", {{Role::Scammer, "opening line"},
                                               {Role::Victim, "who is this"},
                                               {Role::Scammer, "your parcel is held"},
                                               {Role::Scammer, "pay the customs fee"}});
  ScriptedBackend backend({"your parcel is held"});
  const auto e = evaluate_conversation(backend, conv, 2);
  ASSERT_EQ(e.scores.size(), 2u);
  EXPECT_EQ(e.scores[0].turn_index, 2u);
  EXPECT_EQ(e.scores[1].turn_index, 3u);
  EXPECT_DOUBLE_EQ(e.scores[0].similarity, 1.0);
}

TEST(EvaluateBackend, ConversationWithoutScorableTurnsIsSkipped) {
  auto only_victim = testing::make_conversation("v", {{Role::Victim, "hello"}, {Role::Victim, "anyone?"}});
  ScriptedBackend backend({"x"});
  EXPECT_TRUE(evaluate_conversation(backend, only_victim).skipped());
  auto opening_only = testing::make_conversation("s", {{Role::Scammer, "hi"}});
  EXPECT_TRUE(evaluate_conversation(backend, opening_only).skipped());
}

TEST(CompareBackends, SelfComparison) {
  const auto corpus = testing::two_conversation_fixture();
  auto index = index_of(corpus);
  RetrievalBackend a(index);
  RetrievalBackend b(index);
  const auto r = compare_backends(a, b, corpus);
  EXPECT_EQ(r.n_conversations, 2u);
  EXPECT_EQ(r.wins_mean, 0u);
  EXPECT_EQ(r.wins_max, 0u);
  EXPECT_EQ(r.a.mean_of_means, r.b.mean_of_means);
  EXPECT_EQ(r.t_mean.t_statistic, 0.0);
  EXPECT_EQ(r.t_mean.p_two_tailed, 1.0);
  EXPECT_EQ(r.t_max.p_two_tailed, 1.0);
}

TEST(CompareBackends, IdenticalSummarySeriesGiveNoWins) {
  std::vector<ConversationEvaluation> ev;
  for (int i = 0; i < 5; ++i) {
    const double m = 0.1 * i;
    ev.push_back({"c" + std::to_string(i), {}, SimilaritySummary{m, m + 0.05, 2}});
  }
  const auto r = compare_evaluations("x", ev, "y", ev);
  EXPECT_EQ(r.wins_mean, 0u);
  EXPECT_EQ(r.wins_max, 0u);
  EXPECT_EQ(r.t_mean.p_two_tailed, 1.0);
  EXPECT_EQ(r.t_max.p_two_tailed, 1.0);
}

TEST(CompareBackends, SkippedConversationsDroppedFromBothSeries) {
  std::vector<ConversationEvaluation> a{{"c0", {}, SimilaritySummary{0.9, 0.9, 1}},
                                        {"c1", {}, std::nullopt},
                                        {"c2", {}, SimilaritySummary{0.8, 0.8, 1}},
                                        {"c3", {}, SimilaritySummary{0.7, 0.7, 1}}};
  std::vector<ConversationEvaluation> b{{"c0", {}, SimilaritySummary{0.5, 0.5, 1}},
                                        {"c1", {}, SimilaritySummary{0.9, 0.9, 1}},
                                        {"c2", {}, SimilaritySummary{0.6, 0.6, 1}},
                                        {"c3", {}, SimilaritySummary{0.4, 0.4, 1}}};
  const auto r = compare_evaluations("a", a, "b", b);
  EXPECT_EQ(r.n_conversations, 3u);
  EXPECT_EQ(r.n_skipped, 1u);
  EXPECT_EQ(r.conversation_ids, (std::vector<std::string>{"c0", "c2", "c3"}));
  EXPECT_NEAR(r.t_mean.t_statistic, 5.196, 1e-3);
  EXPECT_NEAR(r.t_mean.p_two_tailed, 0.0351, 1e-3);
  EXPECT_EQ(r.wins_mean, 3u);
}

TEST(CompareBackends, MisalignedEvaluationsRejected) {
  std::vector<ConversationEvaluation> a{{"c0", {}, SimilaritySummary{0.9, 0.9, 1}}};
  std::vector<ConversationEvaluation> b{{"c9", {}, SimilaritySummary{0.5, 0.5, 1}}};
  EXPECT_EQ(error_code_of([&] { compare_evaluations("a", a, "b", b); }), errc::length_mismatch);
}

TEST(CompareBackends, TiesAreNotWins) {
  std::vector<ConversationEvaluation> a{{"c0", {}, SimilaritySummary{0.5, 0.9, 1}},
                                        {"c1", {}, SimilaritySummary{0.6, 0.7, 1}}};
  std::vector<ConversationEvaluation> b{{"c0", {}, SimilaritySummary{0.5, 0.8, 1}},
                                        {"c1", {}, SimilaritySummary{0.4, 0.7, 1}}};
  const auto r = compare_evaluations("a", a, "b", b);
  EXPECT_EQ(r.wins_mean, 1u);
  EXPECT_EQ(r.wins_max, 1u);
}


const ComparisonReport& shipped_report() {
  static const ComparisonReport report = [] {
    const auto corpus = load_corpus(std::string(SENTINEL_DATA_DIR) + "/corpus.jsonl");
    const auto split = split_corpus(corpus, 812, 90, 2024);
    const auto train = select_conversations(corpus, split.train);
    const auto validation = select_conversations(corpus, split.validation);
    const auto resources = resources_from_corpus(train, 2);
    RetrievalBackend mimic(resources.index);
    BaselineBackend baseline(resources.pool, 42);
    return compare_backends(mimic, baseline, validation, 2);
  }();
  return report;
}

TEST(ShippedCorpus, MimicBeatsBaseline) {
  const auto& r = shipped_report();
  EXPECT_EQ(r.n_conversations, 90u);
  EXPECT_EQ(r.a.backend_id, "retrieval");
  EXPECT_EQ(r.b.backend_id, "baseline");
  EXPECT_GT(r.a.mean_of_means, r.b.mean_of_means);
  EXPECT_LT(r.t_mean.p_two_tailed, 0.01);
  EXPECT_LE(r.wins_mean, r.n_conversations);
  EXPECT_LE(r.wins_max, r.n_conversations);
  EXPECT_EQ(r.t_mean.df, 89.0);
}

TEST(ShippedCorpus, TableMatchesGolden) {
  std::ifstream in(std::string(SENTINEL_GOLDEN_DIR) + "/comparison_table.txt");
  ASSERT_TRUE(in);
  const std::string golden((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(render_comparison_table(shipped_report()), golden);
}

TEST(Rendering, TableRowsAndInfiniteT) {
  ComparisonReport r;
  r.a.backend_id = "mimic";
  r.b.backend_id = "untuned";
  r.n_conversations = 90;
  r.t_mean.p_two_tailed = 2.3e-10;
  r.t_mean.t_statistic = 6.73;
  r.t_max.p_two_tailed = 0.0;
  r.t_max.t_statistic = std::numeric_limits<double>::infinity();
  const auto table = render_comparison_table(r);
  EXPECT_NE(table.find("Instances of mimic > untuned"), std::string::npos);
  EXPECT_NE(table.find("Paired t-test across 90 validation conversations"), std::string::npos);
  EXPECT_NE(table.find("2.3e-10"), std::string::npos);
  EXPECT_NE(table.find("6.73"), std::string::npos);
  EXPECT_NE(table.find("inf"), std::string::npos);
  const auto j = to_json(r);
  EXPECT_EQ(j["t_test_max"]["t_statistic"], "inf");
  EXPECT_EQ(j["backend_a"]["backend_id"], "mimic");
}

}  // namespace
}  // namespace sentinel
