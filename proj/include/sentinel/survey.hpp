#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "sentinel/conversation.hpp"
#include "sentinel/detail/text.hpp"
#include "sentinel/json_io.hpp"

namespace sentinel {

enum class Arm { Treatment, Control };

constexpr std::string_view to_string(Arm a) noexcept {
  return a == Arm::Treatment ? "treatment" : "control";
}

inline std::optional<Arm> parse_arm(std::string_view s) noexcept {
  if (s == "treatment") return Arm::Treatment;
  if (s == "control") return Arm::Control;
  return std::nullopt;
}

// Label shown to participants; never reveals which backend serves the arm.
constexpr std::string_view blinded_label(Arm a) noexcept {
  return a == Arm::Treatment ? "Model A" : "Model B";
}

namespace detail {

constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Stable: depends only on (key, seed).
inline Arm assign_arm(std::string_view participant_key, std::uint64_t rng_seed) {
  if (participant_key.empty()) throw error(errc::empty_key, "participant key is empty");
  const std::uint64_t h =
      detail::splitmix64_finalize(detail::fnv1a64(participant_key, detail::kFnvOffset ^ rng_seed));
  return (h >> 63) == 0 ? Arm::Treatment : Arm::Control;
}

struct SurveyResponse {
  std::string participant_key;
  Arm arm = Arm::Treatment;
  Label conversation_label = Label::Scam;  // Scam or Legitimate
  bool judged_context_suited = false;
  int usefulness = 1;

  friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

inline void validate_response(const SurveyResponse& r) {
  if (r.participant_key.empty()) throw error(errc::empty_key, "participant key is empty");
  if (r.usefulness < 1 || r.usefulness > 5) {
    throw error(errc::invalid_usefulness, std::to_string(r.usefulness) + " is outside 1..5");
  }
  if (r.conversation_label == Label::Unlabeled) {
    throw error(errc::malformed_record, "conversation label must be scam or legitimate");
  }
}

struct SuitabilityCell {
  std::size_t suited = 0;
  std::size_t unsuited = 0;

  friend bool operator==(const SuitabilityCell&, const SuitabilityCell&) = default;
};

struct ArmSummary {
  SuitabilityCell scam;
  SuitabilityCell legitimate;
  std::size_t responses = 0;
  std::optional<double> average_usefulness;  // empty for an arm with no responses
};

struct SurveyReport {
  ArmSummary treatment;
  ArmSummary control;
  std::size_t total = 0;

  [[nodiscard]] const ArmSummary& arm(Arm a) const noexcept {
    return a == Arm::Treatment ? treatment : control;
  }
};

inline SurveyReport aggregate_survey(std::span<const SurveyResponse> responses) {
  if (responses.empty()) throw error(errc::empty_responses, "no survey responses");
  SurveyReport report;
  std::array<long long, 2> usefulness_sum{0, 0};
  for (const auto& r : responses) {
    validate_response(r);
    ArmSummary& arm = r.arm == Arm::Treatment ? report.treatment : report.control;
    SuitabilityCell& cell = r.conversation_label == Label::Scam ? arm.scam : arm.legitimate;
    (r.judged_context_suited ? cell.suited : cell.unsuited) += 1;
    ++arm.responses;
    usefulness_sum[r.arm == Arm::Treatment ? 0 : 1] += r.usefulness;
  }
  report.total = responses.size();
  if (report.treatment.responses > 0) {
    report.treatment.average_usefulness =
        static_cast<double>(usefulness_sum[0]) / static_cast<double>(report.treatment.responses);
  }
  if (report.control.responses > 0) {
    report.control.average_usefulness =
        static_cast<double>(usefulness_sum[1]) / static_cast<double>(report.control.responses);
  }
  return report;
}

struct ArmNames {
  std::string control = "Control";
  std::string treatment = "Treatment";
};

// Table layout: control column first, then treatment.
inline std::string render_survey_table(const SurveyReport& r, const ArmNames& names = {}) {
  constexpr int kGroup = 22;
  constexpr int kRow = 30;
  constexpr int kCol = 12;
  std::string out;
  const auto row = [&](std::string_view group, std::string_view label, const std::string& c,
                       const std::string& t) {
    const std::string head = label.empty() ? std::string(group)
                                           : fmt::format("{:<{}}{}", group, kGroup, label);
    out += fmt::format("{:<{}}{:>{}}{:>{}}\n", head, kGroup + kRow, c, kCol, t, kCol);
  };
  const auto avg = [](const ArmSummary& a) {
    return a.average_usefulness ? fmt::format("{:.1f}", *a.average_usefulness) : std::string("-");
  };
  row("", "", names.control, names.treatment);
  row("Scam Conversations", "Context suited response", std::to_string(r.control.scam.suited),
      std::to_string(r.treatment.scam.suited));
  row("", "Non-context suited response", std::to_string(r.control.scam.unsuited),
      std::to_string(r.treatment.scam.unsuited));
  row("Normal Conversations", "Context suited response",
      std::to_string(r.control.legitimate.suited), std::to_string(r.treatment.legitimate.suited));
  row("", "Non-context suited response", std::to_string(r.control.legitimate.unsuited),
      std::to_string(r.treatment.legitimate.unsuited));
  row("Total", "", std::to_string(r.control.responses), std::to_string(r.treatment.responses));
  row("Average Usefulness Score (out of 5)", "", avg(r.control), avg(r.treatment));
  return out;
}

inline json to_json(const SurveyResponse& r) {
  return json{{"participant_key", r.participant_key},
              {"arm", to_string(r.arm)},
              {"conversation_label", to_string(r.conversation_label)},
              {"judged_context_suited", r.judged_context_suited},
              {"usefulness", r.usefulness}};
}

// `arm` may be absent when `assigned` supplies it (the service assigns arms).
inline SurveyResponse survey_response_from_json(const json& j,
                                                std::optional<Arm> assigned = std::nullopt) {
  const auto malformed = [](const std::string& what) { return error(errc::malformed_record, what); };
  if (!j.is_object()) throw malformed("response is not an object");
  SurveyResponse r;
  if (!j.contains("participant_key") || !j["participant_key"].is_string()) {
    throw malformed("missing string field 'participant_key'");
  }
  r.participant_key = j["participant_key"].get<std::string>();
  if (assigned) {
    r.arm = *assigned;
  } else {
    if (!j.contains("arm") || !j["arm"].is_string()) throw malformed("missing string field 'arm'");
    const auto arm = parse_arm(j["arm"].get<std::string>());
    if (!arm) throw malformed("unknown arm '" + j["arm"].get<std::string>() + "'");
    r.arm = *arm;
  }
  if (!j.contains("conversation_label") || !j["conversation_label"].is_string()) {
    throw malformed("missing string field 'conversation_label'");
  }
  const auto label = parse_label(j["conversation_label"].get<std::string>());
  if (!label) throw malformed("unknown label '" + j["conversation_label"].get<std::string>() + "'");
  r.conversation_label = *label;
  if (!j.contains("judged_context_suited") || !j["judged_context_suited"].is_boolean()) {
    throw malformed("missing boolean field 'judged_context_suited'");
  }
  r.judged_context_suited = j["judged_context_suited"].get<bool>();
  if (!j.contains("usefulness") || !j["usefulness"].is_number_integer()) {
    throw malformed("missing integer field 'usefulness'");
  }
  r.usefulness = j["usefulness"].get<int>();
  validate_response(r);
  return r;
}

inline json to_json(const SurveyReport& r) {
  const auto arm = [](const ArmSummary& a) {
    return json{{"scam", {{"suited", a.scam.suited}, {"unsuited", a.scam.unsuited}}},
                {"legitimate", {{"suited", a.legitimate.suited}, {"unsuited", a.legitimate.unsuited}}},
                {"responses", a.responses},
                {"average_usefulness",
                 a.average_usefulness ? json(*a.average_usefulness) : json(nullptr)}};
  };
  return json{{"treatment", arm(r.treatment)}, {"control", arm(r.control)}, {"total", r.total}};
}

}  // namespace sentinel
