#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/detail/text.hpp"
#include "sentinel/error.hpp"

namespace sentinel {

enum class Role { Scammer, Victim };

enum class ScamCategory { Authority, Job, Love, Investment };

enum class Label { Scam, Legitimate, Unlabeled };

constexpr std::string_view to_string(Role r) noexcept {
  return r == Role::Scammer ? "scammer" : "victim";
}

inline std::optional<Role> parse_role(std::string_view s) noexcept {
  if (s == "scammer") return Role::Scammer;
  if (s == "victim") return Role::Victim;
  return std::nullopt;
}

constexpr std::string_view to_string(ScamCategory c) noexcept {
  switch (c) {
    case ScamCategory::Authority: return "Authority";
    case ScamCategory::Job: return "Job";
    case ScamCategory::Love: return "Love";
    case ScamCategory::Investment: return "Investment";
  }
  return "";
}

inline std::optional<ScamCategory> parse_category(std::string_view s) noexcept {
  for (auto c : {ScamCategory::Authority, ScamCategory::Job, ScamCategory::Love,
                 ScamCategory::Investment}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

constexpr std::string_view to_string(Label l) noexcept {
  switch (l) {
    case Label::Scam: return "scam";
    case Label::Legitimate: return "legitimate";
    case Label::Unlabeled: return "unlabeled";
  }
  return "";
}

inline std::optional<Label> parse_label(std::string_view s) noexcept {
  for (auto l : {Label::Scam, Label::Legitimate, Label::Unlabeled}) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

struct Message {
  std::size_t index = 0;
  Role role = Role::Scammer;
  std::string text;

  friend bool operator==(const Message&, const Message&) = default;
};

struct Conversation {
  std::string id;
  std::optional<ScamCategory> category;
  Label label = Label::Unlabeled;
  std::vector<Message> turns;

  // Appends a turn with the next contiguous index.
  Message& append(Role role, std::string text) {
    turns.push_back(Message{turns.size(), role, std::move(text)});
    return turns.back();
  }

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

enum class Rule { EmptyConversation, EmptyId, BlankMessage, IndexMismatch };

constexpr std::string_view to_string(Rule r) noexcept {
  switch (r) {
    case Rule::EmptyConversation: return "EmptyConversation";
    case Rule::EmptyId: return "EmptyId";
    case Rule::BlankMessage: return "BlankMessage";
    case Rule::IndexMismatch: return "IndexMismatch";
  }
  return "";
}

struct Violation {
  Rule rule;
  std::optional<std::size_t> message_index;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationOutcome {
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }

  [[nodiscard]] std::string describe() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += to_string(v.rule);
      if (v.message_index) out += " at message " + std::to_string(*v.message_index);
    }
    return out;
  }
};

inline ValidationOutcome validate_conversation(const Conversation& conv) {
  ValidationOutcome outcome;
  if (conv.id.empty()) outcome.violations.push_back({Rule::EmptyId, std::nullopt});
  if (conv.turns.empty()) outcome.violations.push_back({Rule::EmptyConversation, std::nullopt});
  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const Message& m = conv.turns[i];
    if (m.index != i) outcome.violations.push_back({Rule::IndexMismatch, i});
    if (detail::is_blank(m.text)) outcome.violations.push_back({Rule::BlankMessage, i});
  }
  return outcome;
}

inline constexpr std::size_t kDefaultWindow = 2;

struct ContextWindow {
  std::vector<Message> messages;
  std::size_t k = kDefaultWindow;

  // Message texts joined by '\n', roles omitted. This is the retrieval key.
  [[nodiscard]] std::string joined_text() const {
    std::string out;
    for (const auto& m : messages) {
      if (!out.empty()) out.push_back('\n');
      out += m.text;
    }
    return out;
  }

  friend bool operator==(const ContextWindow&, const ContextWindow&) = default;
};

// The last min(k, upto_index) messages strictly before `upto_index`.
inline ContextWindow context_window(const Conversation& conv, std::size_t upto_index,
                                    std::size_t k = kDefaultWindow) {
  if (k == 0) throw error(errc::invalid_window, "window size must be at least 1");
  if (upto_index > conv.turns.size()) {
    throw error(errc::out_of_range, "index " + std::to_string(upto_index) + " exceeds " +
                                        std::to_string(conv.turns.size()) + " turns");
  }
  const std::size_t first = upto_index - std::min(k, upto_index);
  ContextWindow window;
  window.k = k;
  window.messages.assign(conv.turns.begin() + static_cast<std::ptrdiff_t>(first),
                         conv.turns.begin() + static_cast<std::ptrdiff_t>(upto_index));
  return window;
}

}  // namespace sentinel
