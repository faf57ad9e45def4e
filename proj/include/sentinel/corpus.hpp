#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sentinel/conversation.hpp"
#include "sentinel/json_io.hpp"
#include "sentinel/mimic.hpp"

namespace sentinel {

// Raised while reading line-addressed files; line() is 1-based.
class record_error : public error {
 public:
  record_error(errc code, std::size_t line, const std::string& what)
      : error(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct TemplateTurn {
  Role role = Role::Scammer;
  std::string text;
};

struct SeedTemplate {
  std::string id;
  ScamCategory category = ScamCategory::Authority;
  Label label = Label::Scam;
  std::vector<TemplateTurn> turns;
};

using Lexicon = std::map<std::string, std::vector<std::string>, std::less<>>;

namespace detail {

inline const std::regex& placeholder_pattern() {
  static const std::regex pattern(R"(\{([A-Z][A-Z0-9_]*)\})");
  return pattern;
}

inline std::string substitute(const std::string& text,
                              const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), placeholder_pattern());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(text, last, static_cast<std::size_t>(m.position(0)) - last);
    out += values.at(m[1].str());
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
  }
  out.append(text, last);
  return out;
}

// Draws `n` distinct values from [0, capacity) while n <= capacity, then
// continues with replacement.
inline std::vector<std::uint64_t> sample_tuple_ids(std::uint64_t capacity, std::size_t n,
                                                   BaselineRng& rng) {
  std::vector<std::uint64_t> ids;
  ids.reserve(n);
  const std::size_t distinct = capacity < n ? static_cast<std::size_t>(capacity) : n;
  if (capacity <= (1U << 20)) {
    std::vector<std::uint64_t> pool(static_cast<std::size_t>(capacity));
    std::iota(pool.begin(), pool.end(), std::uint64_t{0});
    for (std::size_t i = 0; i < distinct; ++i) {
      const std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      ids.push_back(pool[i]);
    }
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (ids.size() < distinct) {
      const std::uint64_t v = rng.uniform_index(static_cast<std::size_t>(capacity));
      if (seen.insert(v).second) ids.push_back(v);
    }
  }
  while (ids.size() < n) ids.push_back(rng.uniform_index(static_cast<std::size_t>(capacity)));
  return ids;
}

}  // namespace detail

// Distinct placeholder identifiers in order of first appearance.
inline std::vector<std::string> placeholders(const SeedTemplate& seed) {
  std::vector<std::string> names;
  for (const auto& turn : seed.turns) {
    for (auto it = std::sregex_iterator(turn.text.begin(), turn.text.end(),
                                        detail::placeholder_pattern());
         it != std::sregex_iterator(); ++it) {
      auto name = (*it)[1].str();
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  return names;
}

struct Expansion {
  std::vector<Conversation> conversations;
  // Set when variants cannot all differ: no placeholders, or n exceeds the
  // number of distinct substitution tuples.
  bool diversity_warning = false;
};

inline Expansion expand_seed(const SeedTemplate& seed, const Lexicon& lexicons, std::size_t n,
                             std::uint64_t rng_seed) {
  if (n == 0) throw error(errc::invalid_conversation, "variant count must be at least 1");
  const auto names = placeholders(seed);
  std::vector<const std::vector<std::string>*> choices;
  std::uint64_t capacity = 1;
  constexpr std::uint64_t kCapacityLimit = std::uint64_t{1} << 62;
  for (const auto& name : names) {
    const auto it = lexicons.find(name);
    if (it == lexicons.end() || it->second.empty()) {
      throw error(errc::unknown_placeholder, name);
    }
    choices.push_back(&it->second);
    const std::uint64_t size = it->second.size();
    capacity = capacity > kCapacityLimit / size ? kCapacityLimit : capacity * size;
  }

  Expansion out;
  out.diversity_warning = names.empty() || capacity < n;
  BaselineRng rng(rng_seed);
  const auto tuple_ids = detail::sample_tuple_ids(capacity, n, rng);
  for (std::size_t v = 0; v < n; ++v) {
    std::map<std::string, std::string, std::less<>> values;
    std::uint64_t rest = tuple_ids[v];
    for (std::size_t p = 0; p < names.size(); ++p) {
      const auto size = choices[p]->size();
      values[names[p]] = (*choices[p])[static_cast<std::size_t>(rest % size)];
      rest /= size;
    }
    Conversation conv;
    conv.id = seed.id + "#" + std::to_string(v);
    conv.category = seed.category;
    conv.label = seed.label;
    for (const auto& turn : seed.turns) conv.append(turn.role, detail::substitute(turn.text, values));
    if (const auto outcome = validate_conversation(conv); !outcome) {
      throw error(errc::invalid_conversation, conv.id + ": " + outcome.describe());
    }
    out.conversations.push_back(std::move(conv));
  }
  return out;
}

// Expands every seed into a corpus of exactly `total` conversations; seed i
// receives floor(total/S) variants plus one if i < total mod S.
inline Expansion forge_corpus(std::span<const SeedTemplate> seeds, const Lexicon& lexicons,
                              std::size_t total, std::uint64_t rng_seed) {
  if (seeds.empty()) throw error(errc::empty_corpus, "no seed templates");
  Expansion out;
  const std::size_t base = total / seeds.size();
  const std::size_t extra = total % seeds.size();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::size_t n = base + (i < extra ? 1 : 0);
    if (n == 0) continue;
    auto part = expand_seed(seeds[i], lexicons, n, detail::fnv1a64(seeds[i].id, rng_seed));
    out.diversity_warning = out.diversity_warning || part.diversity_warning;
    std::move(part.conversations.begin(), part.conversations.end(),
              std::back_inserter(out.conversations));
  }
  return out;
}

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};

inline CorpusSplit split_corpus(std::span<const Conversation> corpus, std::size_t train_n,
                                std::size_t val_n, std::uint64_t rng_seed) {
  if (train_n + val_n > corpus.size()) {
    throw error(errc::insufficient_corpus, std::to_string(train_n) + " + " +
                                               std::to_string(val_n) + " exceeds " +
                                               std::to_string(corpus.size()) + " conversations");
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  BaselineRng rng(rng_seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  CorpusSplit split;
  for (std::size_t i = 0; i < train_n; ++i) split.train.push_back(corpus[order[i]].id);
  for (std::size_t i = train_n; i < train_n + val_n; ++i) {
    split.validation.push_back(corpus[order[i]].id);
  }
  return split;
}

// Conversations whose ids appear in `ids`, in the order of `ids`.
inline std::vector<Conversation> select_conversations(std::span<const Conversation> corpus,
                                                      std::span<const std::string> ids) {
  std::map<std::string_view, const Conversation*> by_id;
  for (const auto& c : corpus) by_id.emplace(c.id, &c);
  std::vector<Conversation> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw error(errc::out_of_range, "no conversation '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

inline std::vector<Conversation> parse_corpus(std::istream& in) {
  std::vector<Conversation> corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw record_error(errc::malformed_record, line_no, e.what());
    }
    Conversation conv;
    try {
      conv = conversation_from_json(record);
    } catch (const error& e) {
      throw record_error(e.code(), line_no, e.what());
    }
    if (const auto outcome = validate_conversation(conv); !outcome) {
      throw record_error(errc::malformed_record, line_no, outcome.describe());
    }
    if (!ids.insert(conv.id).second) {
      throw record_error(errc::malformed_record, line_no, "duplicate id '" + conv.id + "'");
    }
    corpus.push_back(std::move(conv));
  }
  return corpus;
}

inline std::vector<Conversation> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open '" + path + "'");
  return parse_corpus(in);
}

inline void write_corpus(std::ostream& out, std::span<const Conversation> corpus) {
  for (const auto& conv : corpus) {
    if (const auto outcome = validate_conversation(conv); !outcome) {
      throw error(errc::invalid_conversation, conv.id + ": " + outcome.describe());
    }
  }
  for (const auto& conv : corpus) out << conversation_to_json(conv).dump() << '\n';
}

inline void save_corpus(std::span<const Conversation> corpus, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw error(errc::io_failure, "cannot write '" + path + "'");
  write_corpus(out, corpus);
  out.flush();
  if (!out) throw error(errc::io_failure, "write to '" + path + "' failed");
}

inline SeedTemplate seed_from_json(const json& j) {
  const auto conv = conversation_from_json(j);
  if (!conv.category) throw error(errc::malformed_record, "seed '" + conv.id + "' has no category");
  SeedTemplate seed{conv.id, *conv.category, conv.label, {}};
  // conversation_from_json defaults a missing label to Unlabeled; seeds are scams unless stated.
  if (!j.contains("label")) seed.label = Label::Scam;
  for (const auto& m : conv.turns) seed.turns.push_back({m.role, m.text});
  return seed;
}

inline std::vector<SeedTemplate> load_seeds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw error(errc::malformed_record, e.what());
  }
  if (!doc.is_array()) throw error(errc::malformed_record, "seed file must hold an array");
  std::vector<SeedTemplate> seeds;
  for (const auto& s : doc) seeds.push_back(seed_from_json(s));
  return seeds;
}

inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw error(errc::malformed_record, e.what());
  }
  if (!doc.is_object()) throw error(errc::malformed_record, "lexicon file must hold an object");
  Lexicon lex;
  for (const auto& [key, values] : doc.items()) {
    if (!values.is_array() || values.empty()) {
      throw error(errc::malformed_record, "lexicon '" + key + "' must be a nonempty array");
    }
    for (const auto& v : values) {
      if (!v.is_string() || detail::is_blank(v.get<std::string>())) {
        throw error(errc::malformed_record, "lexicon '" + key + "' holds a blank entry");
      }
      lex[key].push_back(v.get<std::string>());
    }
  }
  return lex;
}

}  // namespace sentinel
