#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "sentinel/conversation.hpp"
#include "sentinel/error.hpp"

namespace sentinel {

using json = nlohmann::json;

inline json message_to_json(const Message& m) {
  return json{{"role", to_string(m.role)}, {"text", m.text}};
}

inline json conversation_to_json(const Conversation& c) {
  json turns = json::array();
  for (const auto& m : c.turns) turns.push_back(message_to_json(m));
  return json{{"id", c.id},
              {"category", c.category ? json(to_string(*c.category)) : json(nullptr)},
              {"label", to_string(c.label)},
              {"turns", std::move(turns)}};
}

// Throws malformed_record for structural problems and unknown_category for a
// category string outside the four known ones.
inline Conversation conversation_from_json(const json& j) {
  const auto malformed = [](const std::string& what) {
    return error(errc::malformed_record, what);
  };
  if (!j.is_object()) throw malformed("record is not an object");
  if (!j.contains("id") || !j["id"].is_string()) throw malformed("missing string field 'id'");
  if (!j.contains("turns") || !j["turns"].is_array()) throw malformed("missing array field 'turns'");

  Conversation c;
  c.id = j["id"].get<std::string>();
  if (j.contains("category") && !j["category"].is_null()) {
    if (!j["category"].is_string()) throw malformed("'category' must be a string");
    const auto name = j["category"].get<std::string>();
    c.category = parse_category(name);
    if (!c.category) throw error(errc::unknown_category, "'" + name + "'");
  }
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw malformed("'label' must be a string");
    const auto label = parse_label(j["label"].get<std::string>());
    if (!label) throw malformed("unknown label '" + j["label"].get<std::string>() + "'");
    c.label = *label;
  }
  for (const auto& t : j["turns"]) {
    if (!t.is_object() || !t.contains("role") || !t["role"].is_string() || !t.contains("text") ||
        !t["text"].is_string()) {
      throw malformed("turn needs string fields 'role' and 'text'");
    }
    const auto role = parse_role(t["role"].get<std::string>());
    if (!role) throw malformed("unknown role '" + t["role"].get<std::string>() + "'");
    c.append(*role, t["text"].get<std::string>());
  }
  return c;
}

}  // namespace sentinel
