#pragma once

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/conversation.hpp"

namespace sentinel::testing {

inline Conversation make_conversation(std::string id,
                                      std::initializer_list<std::pair<Role, std::string>> turns,
                                      Label label = Label::Scam) {
  Conversation c;
  c.id = std::move(id);
  c.label = label;
  for (const auto& [role, text] : turns) c.append(role, text);
  return c;
}

// Two short scam dialogues, three indexable scammer replies each.
inline std::vector<Conversation> two_conversation_fixture() {
  auto a = make_conversation("conv-a", {
      {Role::Scammer, "Hello, this is officer Tan from the police."},
      {Role::Victim, "What is this about?"},
      {Role::Scammer, "Your account is linked to money laundering."},
      {Role::Victim, "That cannot be right."},
      {Role::Scammer, "You must transfer your savings to a safe account."},
      {Role::Victim, "Can I visit the station?"},
      {Role::Scammer, "No, this case is confidential, transfer now."},
  });
  a.category = ScamCategory::Authority;
  auto b = make_conversation("conv-b", {
      {Role::Victim, "Hi, I saw your job advert."},
      {Role::Scammer, "Great, you can earn money liking videos."},
      {Role::Victim, "How do I get paid?"},
      {Role::Scammer, "Commission arrives after each task."},
      {Role::Victim, "I finished the tasks."},
      {Role::Scammer, "Now deposit a fee to unlock premium tasks."},
  });
  b.category = ScamCategory::Job;
  return {a, b};
}

// Scoped temporary directory.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sentinel-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

template <typename F>
errc error_code_of(F&& f) {
  try {
    f();
  } catch (const error& e) {
    return e.code();
  }
  throw std::logic_error("expected a sentinel::error");
}

}  // namespace sentinel::testing
