#include "sentinel/embedding.hpp"

#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace sentinel {
namespace {

// Nonzero buckets of the raw count vector.
std::map<std::size_t, double> nonzero(const std::vector<double>& counts) {
  std::map<std::size_t, double> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != 0.0) out[i] = counts[i];
  }
  return out;
}

// Frozen from tests/oracles/embed_oracle.py, an independent implementation of
// the hashing procedure.
TEST(FeatureCounts, MatchesIndependentImplementation) {
  const std::vector<std::pair<std::string, std::map<std::size_t, double>>> cases = {
      {"hello", {{11, 1}}},
      {"HELLO", {{11, 1}}},
      {"Send the gift card codes NOW",
       {{5, 1}, {47, 1}, {77, 1}, {95, 1}, {124, 1}, {148, 1}, {151, 1}, {169, 1}, {183, 1}, {210, 1}, {239, 1}}},
      {"Straße ÉCOLE Ωmega 42", {{0, 1}, {10, 1}, {35, 1}, {69, 1}, {95, 1}, {120, 1}, {195, 1}}},
      {"send  the   gift", {{47, 1}, {124, 1}, {148, 1}, {210, 1}, {239, 1}}},
      {"ΣΊΣΥΦΟΣ café", {{98, 1}, {116, 1}, {137, 1}}},
      {"x", {{7, 1}}},
  };
  for (const auto& [text, expected] : cases) {
    EXPECT_EQ(nonzero(feature_counts(text)), expected) << text;
  }
}

TEST(Tokenize, FoldsAndSplits) {
  EXPECT_EQ(tokenize("Hello, WORLD!! 42x"), (std::vector<std::string>{"hello", "world", "42x"}));
  EXPECT_EQ(tokenize("ÉCOLE"), (std::vector<std::string>{"école"}));
  EXPECT_TRUE(tokenize("  ...  ").empty());
}

TEST(Tokenize, InvalidUtf8ActsAsSeparator) {
  EXPECT_EQ(tokenize("ab\xff" "cd"), (std::vector<std::string>{"ab", "cd"}));
  EXPECT_EQ(tokenize("ab\xe2\x82"), (std::vector<std::string>{"ab"}));
}

TEST(Embed, EmptyTextIsZeroVector) {
  const auto v = embed_text("");
  EXPECT_EQ(v.dim(), kEmbeddingDim);
  EXPECT_TRUE(v.is_zero());
  EXPECT_EQ(v.norm(), 0.0);
  EXPECT_TRUE(embed_text("?! ...").is_zero());
}

TEST(Embed, DeterministicAndCaseInsensitive) {
  EXPECT_EQ(embed_text("hello"), embed_text("hello"));
  EXPECT_EQ(embed_text("hello"), embed_text("HELLO"));
}

TEST(Embed, WhitespaceRunsDoNotMatter) {
  EXPECT_EQ(embed_text("send the gift card"), embed_text("send   the \t gift\n\ncard "));
}

TEST(Embed, UnitNorm) {
  for (const char* s : {"a", "send the gift card codes now", "Ωmega Ωmega Ωmega"}) {
    EXPECT_NEAR(embed_text(s).norm(), 1.0, 1e-9) << s;
  }
}

TEST(Cosine, Fixtures) {
  std::vector<double> e1(kEmbeddingDim, 0.0), e2(kEmbeddingDim, 0.0), v(kEmbeddingDim, 0.0),
      w(kEmbeddingDim, 0.0);
  e1[0] = 1.0;
  e2[1] = 1.0;
  v[0] = 3.0;
  v[1] = 4.0;
  w[0] = 1.0;
  w[1] = 1.0;
  EXPECT_EQ(cosine_similarity(e1, e2), 0.0);
  EXPECT_EQ(cosine_similarity(v, v), 1.0);
  EXPECT_NEAR(cosine_similarity(w, e1), 0.70711, 1e-5);
  EXPECT_NEAR(cosine_similarity(w, e1), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Cosine, ZeroVectorConvention) {
  const EmbeddingVector zero;
  EXPECT_EQ(cosine_similarity(zero, embed_text("hello")), 0.0);
  EXPECT_EQ(cosine_similarity(zero, zero), 0.0);
}

TEST(Cosine, DimensionMismatch) {
  const std::vector<double> a(3, 1.0), b(4, 1.0);
  EXPECT_EQ(testing::error_code_of([&] { cosine_similarity(a, b); }), errc::dimension_mismatch);
}

TEST(Cosine, RandomPairProperties) {
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(kEmbeddingDim), b(kEmbeddingDim);
    for (auto& x : a) x = gauss(rng);
    for (auto& x : b) x = gauss(rng);
    const double ab = cosine_similarity(a, b);
    ASSERT_EQ(ab, cosine_similarity(b, a));
    ASSERT_GE(ab, -1.0);
    ASSERT_LE(ab, 1.0);
    ASSERT_NEAR(cosine_similarity(a, a), 1.0, 1e-9);
    const double c = scale(rng);
    std::vector<double> ca(a);
    for (auto& x : ca) x *= c;
    ASSERT_NEAR(cosine_similarity(ca, b), ab, 1e-9);
  }
}

TEST(Cosine, ScaleInvarianceOnRawFeatureCounts) {
  const auto a = feature_counts("please transfer the money to the safe account today");
  const auto b = feature_counts("transfer money to a safe account now");
  const double base = cosine_similarity(a, b);
  EXPECT_GT(base, 0.0);
  for (double c : {0.5, 2.0, 17.0, 1e6}) {
    auto scaled = a;
    for (auto& x : scaled) x *= c;
    EXPECT_NEAR(cosine_similarity(scaled, b), base, 1e-9);
  }
  EXPECT_NEAR(cosine_similarity(embed_text("please transfer the money to the safe account today"),
                                embed_text("transfer money to a safe account now")),
              base, 1e-12);
}

}  // namespace
}  // namespace sentinel
