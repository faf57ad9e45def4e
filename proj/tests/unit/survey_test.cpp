#include "sentinel/survey.hpp"

#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "survey_fixture.hpp"

namespace sentinel {
namespace {

using testing::error_code_of;

TEST(AggregateSurvey, ReferenceSurveyReplay) {
  const auto responses = testing::reference_survey_responses();
  ASSERT_EQ(responses.size(), 60u);
  const auto r = aggregate_survey(responses);
  EXPECT_EQ(r.control.scam, (SuitabilityCell{3, 16}));
  EXPECT_EQ(r.control.legitimate, (SuitabilityCell{9, 2}));
  EXPECT_EQ(r.treatment.scam, (SuitabilityCell{14, 2}));
  EXPECT_EQ(r.treatment.legitimate, (SuitabilityCell{4, 10}));
  ASSERT_TRUE(r.control.average_usefulness && r.treatment.average_usefulness);
  EXPECT_NEAR(*r.control.average_usefulness, 1.8, 1e-12);
  EXPECT_NEAR(*r.treatment.average_usefulness, 4.4, 1e-12);
  EXPECT_EQ(r.total, 60u);
}

TEST(AggregateSurvey, CellsSumToTotal) {
  auto responses = testing::reference_survey_responses();
  for (std::size_t n = 1; n <= responses.size(); n += 7) {
    const std::span<const SurveyResponse> head(responses.data(), n);
    const auto r = aggregate_survey(head);
    const auto cells = [](const ArmSummary& a) {
      return a.scam.suited + a.scam.unsuited + a.legitimate.suited + a.legitimate.unsuited;
    };
    EXPECT_EQ(cells(r.control) + cells(r.treatment), n);
    EXPECT_EQ(r.control.responses + r.treatment.responses, n);
    for (const auto* a : {&r.control, &r.treatment}) {
      if (a->average_usefulness) {
        EXPECT_GE(*a->average_usefulness, 1.0);
        EXPECT_LE(*a->average_usefulness, 5.0);
      }
    }
  }
}

TEST(AggregateSurvey, Errors) {
  const std::vector<SurveyResponse> none;
  EXPECT_EQ(error_code_of([&] { aggregate_survey(none); }), errc::empty_responses);
  auto bad = testing::reference_survey_responses();
  bad[3].usefulness = 6;
  EXPECT_EQ(error_code_of([&] { aggregate_survey(bad); }), errc::invalid_usefulness);
  bad[3].usefulness = 0;
  EXPECT_EQ(error_code_of([&] { aggregate_survey(bad); }), errc::invalid_usefulness);
}

TEST(AggregateSurvey, TableLayout) {
  const auto table = render_survey_table(aggregate_survey(testing::reference_survey_responses()),
                                         ArmNames{"Untuned", "Tuned"});
  EXPECT_NE(table.find("Untuned"), std::string::npos);
  EXPECT_LT(table.find("Untuned"), table.find("Tuned "));
  EXPECT_NE(table.find("Scam Conversations"), std::string::npos);
  EXPECT_NE(table.find("Normal Conversations"), std::string::npos);
  EXPECT_NE(table.find("1.8"), std::string::npos);
  EXPECT_NE(table.find("4.4"), std::string::npos);
}

TEST(AssignArm, StableAndSeeded) {
  EXPECT_EQ(assign_arm("participant-7", 1), assign_arm("participant-7", 1));
  EXPECT_EQ(error_code_of([] { assign_arm("", 1); }), errc::empty_key);
  std::set<Arm> across_seeds;
  for (std::uint64_t seed = 0; seed < 64; ++seed) across_seeds.insert(assign_arm("participant-7", seed));
  EXPECT_EQ(across_seeds.size(), 2u);
}

TEST(AssignArm, TwentyKeysBalanced) {
  std::map<Arm, int> counts;
  for (int i = 1; i <= 20; ++i) ++counts[assign_arm("participant-" + std::to_string(i), 1)];
  EXPECT_GE(counts[Arm::Treatment], 6);
  EXPECT_GE(counts[Arm::Control], 6);
}

TEST(SurveyJson, RoundTripAndValidation) {
  const auto r = testing::reference_survey_responses().front();
  EXPECT_EQ(survey_response_from_json(to_json(r)), r);
  auto j = to_json(r);
  j.erase("arm");
  EXPECT_EQ(error_code_of([&] { survey_response_from_json(j); }), errc::malformed_record);
  EXPECT_EQ(survey_response_from_json(j, Arm::Treatment).arm, Arm::Treatment);
  j["usefulness"] = 9;
  EXPECT_EQ(error_code_of([&] { survey_response_from_json(j, Arm::Control); }), errc::invalid_usefulness);
  j["usefulness"] = 3;
  j["conversation_label"] = "unlabeled";
  EXPECT_EQ(error_code_of([&] { survey_response_from_json(j, Arm::Control); }), errc::malformed_record);
}

TEST(BlindedLabels, NeverNameTheBackend) {
  for (auto arm : {Arm::Treatment, Arm::Control}) {
    const std::string label(blinded_label(arm));
    EXPECT_EQ(label.find("retrieval"), std::string::npos);
    EXPECT_EQ(label.find("baseline"), std::string::npos);
  }
  EXPECT_NE(blinded_label(Arm::Treatment), blinded_label(Arm::Control));
}

}  // namespace
}  // namespace sentinel
