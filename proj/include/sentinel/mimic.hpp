#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sentinel/conversation.hpp"
#include "sentinel/detail/text.hpp"
#include "sentinel/embedding.hpp"
#include "sentinel/error.hpp"

namespace sentinel {

inline constexpr std::string_view kSeedPrompt =
    "Assuming you are a scammer, your goal is to trick a victim to give you money";

enum class BackendKind { Retrieval, Baseline, Remote };

constexpr std::string_view to_string(BackendKind k) noexcept {
  switch (k) {
    case BackendKind::Retrieval: return "retrieval";
    case BackendKind::Baseline: return "baseline";
    case BackendKind::Remote: return "remote";
  }
  return "";
}

inline std::optional<BackendKind> parse_backend_kind(std::string_view s) noexcept {
  for (auto k : {BackendKind::Retrieval, BackendKind::Baseline, BackendKind::Remote}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct BackendConfig {
  BackendKind kind = BackendKind::Retrieval;
  std::optional<std::string> endpoint;
  std::string seed_prompt{kSeedPrompt};
  std::chrono::milliseconds timeout{5000};
  std::optional<std::uint64_t> rng_seed;
  int max_new_tokens = 64;

  void validate() const {
    if (kind == BackendKind::Remote && (!endpoint || endpoint->empty())) {
      throw error(errc::invalid_backend_config, "remote backend requires an endpoint");
    }
    if (kind == BackendKind::Baseline && !rng_seed) {
      throw error(errc::invalid_backend_config, "baseline backend requires an rng seed");
    }
    if (timeout.count() <= 0) {
      throw error(errc::invalid_backend_config, "timeout must be positive");
    }
  }

  friend bool operator==(const BackendConfig&, const BackendConfig&) = default;
};

struct PredictedReply {
  std::string text;
  std::string backend_id;
  std::uint64_t context_digest = 0;

  friend bool operator==(const PredictedReply&, const PredictedReply&) = default;
};

// Hash of the roles and texts of a context, in order.
inline std::uint64_t context_digest(const ContextWindow& ctx) noexcept {
  std::uint64_t h = detail::kFnvOffset;
  for (const auto& m : ctx.messages) {
    h = detail::fnv1a64(to_string(m.role), h);
    h = detail::fnv1a64("\x1f", h);
    h = detail::fnv1a64(m.text, h);
    h = detail::fnv1a64("\x1e", h);
  }
  return h;
}

struct IndexEntry {
  EmbeddingVector context_embedding;
  std::string reply_text;
  std::string source_id;
  std::size_t position = 0;
};

class ReplyIndex {
 public:
  ReplyIndex() = default;
  ReplyIndex(std::vector<IndexEntry> entries, std::size_t k)
      : entries_(std::move(entries)), k_(k) {}

  [[nodiscard]] std::span<const IndexEntry> entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] std::size_t window() const noexcept { return k_; }

 private:
  std::vector<IndexEntry> entries_;
  std::size_t k_ = kDefaultWindow;
};

// One entry per scammer message at position >= 1, keyed on its k-window.
inline ReplyIndex build_reply_index(std::span<const Conversation> corpus,
                                    std::size_t k = kDefaultWindow) {
  if (corpus.empty()) throw error(errc::empty_corpus, "cannot index an empty corpus");
  if (k == 0) throw error(errc::invalid_window, "window size must be at least 1");
  std::vector<IndexEntry> entries;
  for (const auto& conv : corpus) {
    for (const auto& msg : conv.turns) {
      if (msg.role != Role::Scammer || msg.index == 0) continue;
      const auto ctx = context_window(conv, msg.index, k);
      entries.push_back(IndexEntry{embed_text(ctx.joined_text()), msg.text, conv.id, msg.index});
    }
  }
  if (entries.empty()) {
    throw error(errc::no_indexable_replies, "no scammer message has preceding context");
  }
  return ReplyIndex(std::move(entries), k);
}

struct RetrievalMatch {
  std::size_t entry = 0;
  double similarity = 0.0;
};

// Highest-cosine entry; exact ties go to the smallest (source_id, position).
inline RetrievalMatch best_match(const ReplyIndex& index, const EmbeddingVector& query) {
  if (index.empty()) throw error(errc::empty_index, "reply index has no entries");
  const auto entries = index.entries();
  RetrievalMatch best{0, cosine_similarity(query, entries[0].context_embedding)};
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const double sim = cosine_similarity(query, entries[i].context_embedding);
    const auto& cand = entries[i];
    const auto& cur = entries[best.entry];
    if (sim > best.similarity ||
        (sim == best.similarity && std::tie(cand.source_id, cand.position) <
                                       std::tie(cur.source_id, cur.position))) {
      best = {i, sim};
    }
  }
  return best;
}

inline PredictedReply generate_reply(const ReplyIndex& index, const ContextWindow& ctx) {
  const auto match = best_match(index, embed_text(ctx.joined_text()));
  return PredictedReply{index.entries()[match.entry].reply_text,
                        std::string(to_string(BackendKind::Retrieval)), context_digest(ctx)};
}

// Seeded generator with an unbiased bounded draw, reproducible across
// standard libraries (std::uniform_int_distribution is not).
class BaselineRng {
 public:
  explicit BaselineRng(std::uint64_t seed) : engine_(seed) {}

  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (0 - bound) % bound;
    std::uint64_t x = engine_();
    while (x < threshold) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

 private:
  std::mt19937_64 engine_;
};

inline PredictedReply baseline_reply(std::span<const std::string> pool, BaselineRng& rng) {
  if (pool.empty()) throw error(errc::empty_pool, "baseline pool is empty");
  return PredictedReply{pool[rng.uniform_index(pool.size())],
                        std::string(to_string(BackendKind::Baseline)), 0};
}

// Every scammer message of the corpus, in corpus order.
inline std::vector<std::string> scammer_reply_pool(std::span<const Conversation> corpus) {
  std::vector<std::string> pool;
  for (const auto& conv : corpus) {
    for (const auto& msg : conv.turns) {
      if (msg.role == Role::Scammer) pool.push_back(msg.text);
    }
  }
  return pool;
}

class ReplyBackend {
 public:
  virtual ~ReplyBackend() = default;
  [[nodiscard]] virtual BackendKind kind() const noexcept = 0;
  [[nodiscard]] std::string_view id() const noexcept { return to_string(kind()); }
  virtual PredictedReply predict(const ContextWindow& ctx) = 0;
};

class RetrievalBackend final : public ReplyBackend {
 public:
  explicit RetrievalBackend(std::shared_ptr<const ReplyIndex> index) : index_(std::move(index)) {
    if (!index_ || index_->empty()) throw error(errc::empty_index, "reply index has no entries");
  }

  [[nodiscard]] BackendKind kind() const noexcept override { return BackendKind::Retrieval; }
  PredictedReply predict(const ContextWindow& ctx) override { return generate_reply(*index_, ctx); }

  [[nodiscard]] const ReplyIndex& index() const noexcept { return *index_; }

 private:
  std::shared_ptr<const ReplyIndex> index_;
};

class BaselineBackend final : public ReplyBackend {
 public:
  BaselineBackend(std::shared_ptr<const std::vector<std::string>> pool, std::uint64_t seed)
      : pool_(std::move(pool)), rng_(seed) {
    if (!pool_ || pool_->empty()) throw error(errc::empty_pool, "baseline pool is empty");
  }

  [[nodiscard]] BackendKind kind() const noexcept override { return BackendKind::Baseline; }

  PredictedReply predict(const ContextWindow& ctx) override {
    std::lock_guard lock(mutex_);
    auto reply = baseline_reply(*pool_, rng_);
    reply.context_digest = context_digest(ctx);
    ++draws_;
    return reply;
  }

  // Advances the generator as if `n` predictions had already been made.
  void fast_forward(std::uint64_t n) {
    std::lock_guard lock(mutex_);
    for (std::uint64_t i = 0; i < n; ++i) (void)rng_.uniform_index(pool_->size());
    draws_ += n;
  }

  [[nodiscard]] std::uint64_t draws() const {
    std::lock_guard lock(mutex_);
    return draws_;
  }

 private:
  std::shared_ptr<const std::vector<std::string>> pool_;
  mutable std::mutex mutex_;
  BaselineRng rng_;
  std::uint64_t draws_ = 0;
};

}  // namespace sentinel
