#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "sentinel/conversation.hpp"
#include "sentinel/json_io.hpp"
#include "sentinel/mimic.hpp"
#include "sentinel/scoring.hpp"
#include "sentinel/stats.hpp"

namespace sentinel {

struct ConversationEvaluation {
  std::string conversation_id;
  std::vector<TurnScore> scores;
  std::optional<SimilaritySummary> summary;  // empty when nothing was scorable

  [[nodiscard]] bool skipped() const noexcept { return !summary.has_value(); }
};

// Scores one conversation: every scammer message at position >= 1 against a
// prediction made from its k-window.
inline ConversationEvaluation evaluate_conversation(ReplyBackend& backend, const Conversation& conv,
                                                    std::size_t k = kDefaultWindow) {
  ConversationEvaluation out{conv.id, {}, std::nullopt};
  for (const auto& msg : conv.turns) {
    if (msg.role != Role::Scammer || msg.index == 0) continue;
    const auto prediction = backend.predict(context_window(conv, msg.index, k));
    out.scores.push_back(score_turn(msg, prediction));
  }
  if (!out.scores.empty()) out.summary = summarize_conversation(out.scores);
  return out;
}

// Conversations run in input order, so a stateful backend (the seeded
// baseline) draws reproducibly.
inline std::vector<ConversationEvaluation> evaluate_backend(ReplyBackend& backend,
                                                            std::span<const Conversation> validation,
                                                            std::size_t k = kDefaultWindow) {
  if (validation.empty()) throw error(errc::empty_validation_set, "no validation conversations");
  std::vector<ConversationEvaluation> out;
  out.reserve(validation.size());
  for (const auto& conv : validation) out.push_back(evaluate_conversation(backend, conv, k));
  return out;
}

struct BackendTotals {
  std::string backend_id;
  double mean_of_means = 0.0;
  double mean_of_maxes = 0.0;
};

struct ComparisonReport {
  BackendTotals a;
  BackendTotals b;
  std::size_t n_conversations = 0;  // paired, i.e. scorable under both backends
  std::size_t n_skipped = 0;
  std::size_t wins_mean = 0;  // a strictly above b
  std::size_t wins_max = 0;
  TTestResult t_mean;
  TTestResult t_max;
  std::vector<std::string> conversation_ids;
  std::vector<SimilaritySummary> per_conversation_a;
  std::vector<SimilaritySummary> per_conversation_b;
};

// Pairs two evaluations of the same conversations. Conversations skipped
// under either backend are dropped from both series.
inline ComparisonReport compare_evaluations(std::string id_a,
                                            std::span<const ConversationEvaluation> eval_a,
                                            std::string id_b,
                                            std::span<const ConversationEvaluation> eval_b) {
  if (eval_a.size() != eval_b.size()) {
    throw error(errc::length_mismatch, "evaluations cover different conversation sets");
  }
  ComparisonReport r;
  r.a.backend_id = std::move(id_a);
  r.b.backend_id = std::move(id_b);
  std::vector<double> means_a, means_b, maxes_a, maxes_b;
  for (std::size_t i = 0; i < eval_a.size(); ++i) {
    if (eval_a[i].conversation_id != eval_b[i].conversation_id) {
      throw error(errc::length_mismatch, "evaluations are not aligned at position " +
                                             std::to_string(i));
    }
    if (eval_a[i].skipped() || eval_b[i].skipped()) {
      ++r.n_skipped;
      continue;
    }
    const auto& sa = *eval_a[i].summary;
    const auto& sb = *eval_b[i].summary;
    r.conversation_ids.push_back(eval_a[i].conversation_id);
    r.per_conversation_a.push_back(sa);
    r.per_conversation_b.push_back(sb);
    means_a.push_back(sa.mean);
    means_b.push_back(sb.mean);
    maxes_a.push_back(sa.max);
    maxes_b.push_back(sb.max);
    if (sa.mean > sb.mean) ++r.wins_mean;
    if (sa.max > sb.max) ++r.wins_max;
  }
  r.n_conversations = means_a.size();
  const auto average = [](const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
  };
  r.a.mean_of_means = average(means_a);
  r.b.mean_of_means = average(means_b);
  r.a.mean_of_maxes = average(maxes_a);
  r.b.mean_of_maxes = average(maxes_b);
  r.t_mean = paired_t_test(means_a, means_b);
  r.t_max = paired_t_test(maxes_a, maxes_b);
  return r;
}

inline ComparisonReport compare_backends(ReplyBackend& backend_a, ReplyBackend& backend_b,
                                         std::span<const Conversation> validation,
                                         std::size_t k = kDefaultWindow) {
  const auto eval_a = evaluate_backend(backend_a, validation, k);
  const auto eval_b = evaluate_backend(backend_b, validation, k);
  return compare_evaluations(std::string(backend_a.id()), eval_a, std::string(backend_b.id()),
                             eval_b);
}

namespace detail {

inline std::string format_t(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return fmt::format("{:.2f}", t);
}

}  // namespace detail

// Fixed-width rendering with the rows of the classic two-model comparison
// table: averages, win counts, then p-value and t-statistic.
inline std::string render_comparison_table(const ComparisonReport& r) {
  constexpr int kLabel = 44;
  constexpr int kCol = 16;
  std::string out;
  const auto row = [&](const std::string& label, const std::string& c1, const std::string& c2) {
    out += fmt::format("{:<{}}{:>{}}{:>{}}\n", label, kLabel, c1, kCol, c2, kCol);
  };
  row("", "Mean similarity", "Max similarity");
  row(r.a.backend_id, fmt::format("{:.3f}", r.a.mean_of_means), fmt::format("{:.3f}", r.a.mean_of_maxes));
  row(r.b.backend_id, fmt::format("{:.3f}", r.b.mean_of_means), fmt::format("{:.3f}", r.b.mean_of_maxes));
  row(fmt::format("Instances of {} > {}", r.a.backend_id, r.b.backend_id),
      std::to_string(r.wins_mean), std::to_string(r.wins_max));
  out += fmt::format("Paired t-test across {} validation conversations\n", r.n_conversations);
  row("p-value", fmt::format("{:.1e}", r.t_mean.p_two_tailed), fmt::format("{:.1e}", r.t_max.p_two_tailed));
  row("t-statistic", detail::format_t(r.t_mean.t_statistic), detail::format_t(r.t_max.t_statistic));
  return out;
}

inline json to_json(const TTestResult& t) {
  const auto finite_or_string = [](double v) -> json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  return json{{"n", t.n},
              {"mean_diff", t.mean_diff},
              {"sd_diff", t.sd_diff},
              {"t_statistic", finite_or_string(t.t_statistic)},
              {"df", t.df},
              {"p_two_tailed", t.p_two_tailed}};
}

inline json to_json(const SimilaritySummary& s) {
  return json{{"mean", s.mean}, {"max", s.max}, {"n_scored", s.n_scored}};
}

inline json to_json(const ComparisonReport& r) {
  json per = json::array();
  for (std::size_t i = 0; i < r.conversation_ids.size(); ++i) {
    per.push_back({{"id", r.conversation_ids[i]},
                   {"a", to_json(r.per_conversation_a[i])},
                   {"b", to_json(r.per_conversation_b[i])}});
  }
  const auto totals = [](const BackendTotals& t) {
    return json{{"backend_id", t.backend_id},
                {"mean_of_means", t.mean_of_means},
                {"mean_of_maxes", t.mean_of_maxes}};
  };
  return json{{"backend_a", totals(r.a)},
              {"backend_b", totals(r.b)},
              {"n_conversations", r.n_conversations},
              {"n_skipped", r.n_skipped},
              {"wins_mean", r.wins_mean},
              {"wins_max", r.wins_max},
              {"t_test_mean", to_json(r.t_mean)},
              {"t_test_max", to_json(r.t_max)},
              {"per_conversation", std::move(per)}};
}

}  // namespace sentinel
