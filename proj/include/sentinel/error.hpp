#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sentinel {

enum class errc {
  invalid_window,
  out_of_range,
  dimension_mismatch,
  empty_corpus,
  no_indexable_replies,
  empty_index,
  empty_pool,
  backend_timeout,
  backend_protocol,
  backend_unavailable,
  invalid_backend_config,
  no_scores,
  invalid_thresholds,
  unknown_placeholder,
  insufficient_corpus,
  malformed_record,
  unknown_category,
  io_failure,
  invalid_conversation,
  empty_validation_set,
  length_mismatch,
  too_few_samples,
  empty_key,
  empty_responses,
  invalid_usefulness,
  unknown_backend,
  unknown_session,
  blank_message,
};

constexpr std::string_view to_string(errc code) noexcept {
  switch (code) {
    case errc::invalid_window: return "InvalidWindow";
    case errc::out_of_range: return "OutOfRange";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::empty_corpus: return "EmptyCorpus";
    case errc::no_indexable_replies: return "NoIndexableReplies";
    case errc::empty_index: return "EmptyIndex";
    case errc::empty_pool: return "EmptyPool";
    case errc::backend_timeout: return "BackendTimeout";
    case errc::backend_protocol: return "BackendProtocol";
    case errc::backend_unavailable: return "BackendUnavailable";
    case errc::invalid_backend_config: return "InvalidBackendConfig";
    case errc::no_scores: return "NoScores";
    case errc::invalid_thresholds: return "InvalidThresholds";
    case errc::unknown_placeholder: return "UnknownPlaceholder";
    case errc::insufficient_corpus: return "InsufficientCorpus";
    case errc::malformed_record: return "MalformedRecord";
    case errc::unknown_category: return "UnknownCategory";
    case errc::io_failure: return "IoFailure";
    case errc::invalid_conversation: return "InvalidConversation";
    case errc::empty_validation_set: return "EmptyValidationSet";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::too_few_samples: return "TooFewSamples";
    case errc::empty_key: return "EmptyKey";
    case errc::empty_responses: return "EmptyResponses";
    case errc::invalid_usefulness: return "InvalidUsefulness";
    case errc::unknown_backend: return "UnknownBackend";
    case errc::unknown_session: return "UnknownSession";
    case errc::blank_message: return "BlankMessage";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] errc code() const noexcept { return code_; }

  // True when a remote dependency failed rather than the caller's input.
  [[nodiscard]] bool is_backend_failure() const noexcept {
    return code_ == errc::backend_timeout || code_ == errc::backend_protocol ||
           code_ == errc::backend_unavailable;
  }

 private:
  errc code_;
};

}  // namespace sentinel
