#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "sentinel/conversation.hpp"
#include "sentinel/embedding.hpp"
#include "sentinel/mimic.hpp"

namespace sentinel {

struct TurnScore {
  std::size_t turn_index = 0;
  double similarity = 0.0;

  friend bool operator==(const TurnScore&, const TurnScore&) = default;
};

struct SimilaritySummary {
  double mean = 0.0;
  double max = 0.0;
  std::size_t n_scored = 0;

  friend bool operator==(const SimilaritySummary&, const SimilaritySummary&) = default;
};

enum class AlertLevel { None, Watch, Likely };

constexpr std::string_view to_string(AlertLevel a) noexcept {
  switch (a) {
    case AlertLevel::None: return "none";
    case AlertLevel::Watch: return "watch";
    case AlertLevel::Likely: return "likely";
  }
  return "";
}

struct AlertThresholds {
  double watch = 0.45;
  double likely = 0.65;

  void validate() const {
    if (!(0.0 <= watch && watch <= likely && likely <= 1.0)) {
      throw error(errc::invalid_thresholds, "need 0 <= watch <= likely <= 1, got watch=" +
                                                std::to_string(watch) +
                                                " likely=" + std::to_string(likely));
    }
  }

  friend bool operator==(const AlertThresholds&, const AlertThresholds&) = default;
};

inline TurnScore score_turn(const Message& actual, const PredictedReply& predicted) {
  return TurnScore{actual.index,
                   cosine_similarity(embed_text(actual.text), embed_text(predicted.text))};
}

// Sums in sorted order so the result does not depend on input order.
inline SimilaritySummary summarize_conversation(std::span<const TurnScore> scores) {
  if (scores.empty()) throw error(errc::no_scores, "nothing to summarize");
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back(s.similarity);
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = std::clamp(sum / static_cast<double>(values.size()), values.front(),
                                 values.back());
  return SimilaritySummary{mean, values.back(), values.size()};
}

inline AlertLevel alert_state(const SimilaritySummary& summary,
                              const AlertThresholds& thresholds = {}) {
  thresholds.validate();
  if (summary.n_scored == 0) return AlertLevel::None;
  if (summary.mean >= thresholds.likely) return AlertLevel::Likely;
  if (summary.mean >= thresholds.watch) return AlertLevel::Watch;
  return AlertLevel::None;
}

}  // namespace sentinel
