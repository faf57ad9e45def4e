#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/detail/text.hpp"
#include "sentinel/error.hpp"

namespace sentinel {

inline constexpr std::size_t kEmbeddingDim = 256;

// Either unit L2 norm or all zeros.
class EmbeddingVector {
 public:
  EmbeddingVector() : values_(kEmbeddingDim, 0.0) {}
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

  [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] double norm() const noexcept {
    double sum = 0.0;
    for (double v : values_) sum += v * v;
    return std::sqrt(sum);
  }

  [[nodiscard]] bool is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

// Case-folded maximal runs of alphanumeric code points, UTF-8 encoded.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = detail::next_codepoint(text, pos);
    if (detail::is_alnum(cp)) {
      detail::append_utf8(current, detail::simple_case_fold(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline std::size_t feature_bucket(std::string_view feature, std::size_t dim = kEmbeddingDim) noexcept {
  return static_cast<std::size_t>(detail::fnv1a64(feature) % dim);
}

// Unnormalized bucket counts: one increment per unigram and per adjacent
// bigram ("a b").
inline std::vector<double> feature_counts(std::string_view text) {
  std::vector<double> counts(kEmbeddingDim, 0.0);
  const auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    counts[feature_bucket(tokens[i])] += 1.0;
    if (i + 1 < tokens.size()) {
      counts[feature_bucket(tokens[i] + ' ' + tokens[i + 1])] += 1.0;
    }
  }
  return counts;
}

inline EmbeddingVector embed_text(std::string_view text) {
  auto counts = feature_counts(text);
  double sum = 0.0;
  for (double c : counts) sum += c * c;
  if (sum > 0.0) {
    const double inv = 1.0 / std::sqrt(sum);
    for (double& c : counts) c *= inv;
  }
  return EmbeddingVector(std::move(counts));
}

// dot(a,b) / (|a||b|), clamped to [-1, 1]; 0 when either side is all zeros.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw error(errc::dimension_mismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(a.values(), b.values());
}

}  // namespace sentinel
