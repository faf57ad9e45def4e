#include "sentinel/mimic.hpp"

#include <map>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace sentinel {
namespace {

using testing::error_code_of;
using testing::make_conversation;
using testing::two_conversation_fixture;

TEST(ReplyIndex, OneEntryPerScammerReplyWithContext) {
  const auto corpus = two_conversation_fixture();
  std::size_t expected = 0;
  for (const auto& c : corpus) {
    for (const auto& m : c.turns) expected += (m.role == Role::Scammer && m.index >= 1) ? 1 : 0;
  }
  ASSERT_EQ(expected, 6u);
  const auto index = build_reply_index(corpus, 2);
  EXPECT_EQ(index.size(), expected);
  for (const auto& e : index.entries()) {
    EXPECT_GE(e.position, 1u);
    EXPECT_NE(e.source_id, "");
  }
}

TEST(ReplyIndex, KeyIsEmbeddedJoinedContext) {
  const auto corpus = two_conversation_fixture();
  const auto index = build_reply_index(corpus, 2);
  const auto& first = index.entries()[0];
  EXPECT_EQ(first.source_id, "conv-a");
  EXPECT_EQ(first.position, 2u);
  EXPECT_EQ(first.context_embedding,
            embed_text("Hello, this is officer Tan from the police.\nWhat is this about?"));
}

TEST(ReplyIndex, Errors) {
  EXPECT_EQ(error_code_of([] { build_reply_index(std::vector<Conversation>{}, 2); }), errc::empty_corpus);
  const std::vector<Conversation> lone{make_conversation("solo", {{Role::Scammer, "hi there"}})};
  EXPECT_EQ(error_code_of([&] { build_reply_index(lone, 2); }), errc::no_indexable_replies);
  EXPECT_EQ(error_code_of([] { generate_reply(ReplyIndex{}, ContextWindow{}); }), errc::empty_index);
}

TEST(Retrieval, ExactContextReturnsItsReply) {
  const auto corpus = two_conversation_fixture();
  const auto index = build_reply_index(corpus, 2);
  const auto ctx = context_window(corpus[1], 3, 2);
  const auto reply = generate_reply(index, ctx);
  EXPECT_EQ(reply.text, "Commission arrives after each task.");
  EXPECT_EQ(reply.backend_id, "retrieval");
  EXPECT_EQ(reply.context_digest, context_digest(ctx));
  EXPECT_NEAR(best_match(index, embed_text(ctx.joined_text())).similarity, 1.0, 1e-12);
}

TEST(Retrieval, TieBreaksOnSmallestSourceAndPosition) {
  const std::vector<Conversation> corpus{
      make_conversation("zeta", {{Role::Victim, "who is this"}, {Role::Scammer, "reply from zeta"}}),
      make_conversation("alpha", {{Role::Victim, "who is this"}, {Role::Scammer, "reply from alpha"}}),
  };
  const auto index = build_reply_index(corpus, 2);
  ContextWindow ctx;
  ctx.messages.push_back({0, Role::Victim, "WHO is this?"});
  EXPECT_EQ(generate_reply(index, ctx).text, "reply from alpha");
}

TEST(Retrieval, HeldOutContextMatchesBruteForceScan) {
  const auto corpus = two_conversation_fixture();
  const auto index = build_reply_index(corpus, 2);
  const auto held_out = make_conversation("held", {
      {Role::Victim, "I saw the advert about the videos job"},
      {Role::Scammer, "Yes you earn money for every task"},
      {Role::Victim, "I finished all of the tasks, what now?"},
      {Role::Scammer, "placeholder"},
  });
  const auto ctx = context_window(held_out, 3, 2);
  const auto query = embed_text(ctx.joined_text());
  double best = -2.0;
  std::string expected;
  for (const auto& e : index.entries()) {
    const double sim = cosine_similarity(query, e.context_embedding);
    if (sim > best) {
      best = sim;
      expected = e.reply_text;
    }
  }
  EXPECT_EQ(generate_reply(index, ctx).text, expected);
  EXPECT_EQ(generate_reply(index, ctx), generate_reply(index, ctx));
}

TEST(Retrieval, LeaveInRecovery) {
  const auto corpus = two_conversation_fixture();
  const auto index = build_reply_index(corpus, 2);
  for (const auto& conv : corpus) {
    for (const auto& m : conv.turns) {
      if (m.role != Role::Scammer || m.index == 0) continue;
      const auto ctx = context_window(conv, m.index, 2);
      EXPECT_EQ(generate_reply(index, ctx).text, m.text);
    }
  }
}

TEST(Baseline, SameSeedSameReply) {
  const std::vector<std::string> pool{"a", "b", "c", "d", "e"};
  BaselineRng r1(42), r2(42);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(baseline_reply(pool, r1), baseline_reply(pool, r2));
}

TEST(Baseline, EmptyPool) {
  BaselineRng rng(1);
  EXPECT_EQ(error_code_of([&] { baseline_reply(std::vector<std::string>{}, rng); }), errc::empty_pool);
}

TEST(Baseline, UniformFrequencies) {
  std::vector<std::string> pool;
  for (int i = 0; i < 10; ++i) pool.push_back("reply-" + std::to_string(i));
  BaselineRng rng(42);
  std::map<std::string, int> freq;
  for (int i = 0; i < 10000; ++i) ++freq[baseline_reply(pool, rng).text];
  ASSERT_EQ(freq.size(), 10u);
  for (const auto& [text, count] : freq) {
    EXPECT_GE(count, 800) << text;
    EXPECT_LE(count, 1200) << text;
  }
}

TEST(Baseline, IgnoresContext) {
  auto pool = std::make_shared<const std::vector<std::string>>(
      std::vector<std::string>{"one", "two", "three", "four"});
  BaselineBackend x(pool, 9), y(pool, 9);
  const auto corpus = two_conversation_fixture();
  for (std::size_t i = 1; i <= corpus[0].turns.size(); ++i) {
    const auto cx = context_window(corpus[0], i, 2);
    const auto cy = context_window(corpus[1], std::min(i, corpus[1].turns.size()), 1);
    EXPECT_EQ(x.predict(cx).text, y.predict(cy).text);
  }
}

TEST(Baseline, FastForwardMatchesPriorDraws) {
  auto pool = std::make_shared<const std::vector<std::string>>(
      std::vector<std::string>{"one", "two", "three", "four", "five", "six", "seven"});
  BaselineBackend live(pool, 5), restored(pool, 5);
  const ContextWindow ctx;
  for (int i = 0; i < 4; ++i) (void)live.predict(ctx);
  restored.fast_forward(4);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(live.predict(ctx).text, restored.predict(ctx).text);
}

TEST(BackendConfig, Validation) {
  BackendConfig remote;
  remote.kind = BackendKind::Remote;
  EXPECT_EQ(error_code_of([&] { remote.validate(); }), errc::invalid_backend_config);
  BackendConfig baseline;
  baseline.kind = BackendKind::Baseline;
  EXPECT_EQ(error_code_of([&] { baseline.validate(); }), errc::invalid_backend_config);
  baseline.rng_seed = 3;
  EXPECT_NO_THROW(baseline.validate());
  EXPECT_EQ(BackendConfig{}.seed_prompt,
            "Assuming you are a scammer, your goal is to trick a victim to give you money");
}

}  // namespace
}  // namespace sentinel
