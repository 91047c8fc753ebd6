#include <gtest/gtest.h>

#include "test_support.hpp"

namespace sw = stepwise;

namespace {

std::vector<sw::ScoredCandidate> beam_of(std::initializer_list<double> lps) {
  std::vector<sw::ScoredCandidate> out;
  int i = 0;
  for (double lp : lps) out.push_back({sw::ProofStep::parse("s" + std::to_string(i++)), lp});
  return out;
}

} // namespace

TEST(BeamScheduleSize, Examples) {
  EXPECT_EQ(sw::beam_schedule_size(0, 600, 16, 4, 15), 16u);
  EXPECT_EQ(sw::beam_schedule_size(20, 600, 16, 4, 15), 10u);
  EXPECT_EQ(sw::beam_schedule_size(40, 600, 16, 4, 15), 4u);
  EXPECT_EQ(sw::beam_schedule_size(599, 600, 16, 4, 15), 4u);
  EXPECT_EQ(sw::beam_schedule_size(10, 10, 16, 4, 0), 16u);
}

TEST(BeamScheduleSize, HalfwayRoundsToEven) {
  // 4 + 12 * (1 - 15*e/600) = 9 at e=22; 4 + 1 * 0.5 = 4.5 -> 4, 5 + 0.5 -> 6
  EXPECT_EQ(sw::beam_schedule_size(22, 600, 16, 4, 15), 9u);
  EXPECT_EQ(sw::beam_schedule_size(1, 2, 5, 4, 1), 4u);
  EXPECT_EQ(sw::beam_schedule_size(1, 2, 6, 5, 1), 6u);
}

TEST(BeamScheduleSize, NonIncreasingInExpansion) {
  for (double lambda : {0.0, 0.5, 1.0, 2.5, 15.0, 100.0}) {
    std::size_t prev = SIZE_MAX;
    for (std::size_t e = 0; e <= 600; ++e) {
      const auto b = sw::beam_schedule_size(e, 600, 48, 3, lambda);
      ASSERT_LE(b, prev) << lambda << " " << e;
      ASSERT_GE(b, 3u);
      ASSERT_LE(b, 48u);
      prev = b;
    }
  }
}

TEST(BeamScheduleSize, RejectsBadParameters) {
  EXPECT_THROW(sw::beam_schedule_size(0, 0, 16, 4, 15), sw::Error);
  EXPECT_THROW(sw::beam_schedule_size(0, 10, 4, 16, 15), sw::Error);
  EXPECT_THROW(sw::beam_schedule_size(0, 10, 16, 4, -1), sw::Error);
}

TEST(BeamSpec, Parses) {
  auto s = sw::parse_beam_spec("fixed 4");
  EXPECT_EQ(s.size_at(0, 10), 4u);
  EXPECT_FALSE(s.top_p);
  s = sw::parse_beam_spec("adaptive 16,4,15");
  EXPECT_EQ(s.size_at(20, 600), 10u);
  EXPECT_EQ(s.max_size(), 16u);
  s = sw::parse_beam_spec("adaptive 16,4,15 top-p 0.95");
  ASSERT_TRUE(s.top_p);
  EXPECT_DOUBLE_EQ(*s.top_p, 0.95);
  EXPECT_EQ(s.describe(), "adaptive 16,4,15 top-p 0.95");
  s = sw::parse_beam_spec("top-p 0.5");
  EXPECT_EQ(s.size_at(0, 1), 8u);
  EXPECT_EQ(sw::parse_beam_spec("  fixed   3 ").describe(), "fixed 3");
}

TEST(BeamSpec, RejectsMalformed) {
  for (const char* bad : {"", "fixed", "fixed 0", "fixed 2.5", "fixed x", "adaptive 4,16,1", "adaptive 16,4",
                          "top-p 0", "top-p 1.5", "fixed 4 fixed 5", "wide 3", "fixed 4 top-p 0.5 top-p 0.6"})
    EXPECT_THROW(sw::parse_beam_spec(bad), sw::Error) << bad;
}

TEST(TopP, Examples) {
  const auto beam = beam_of({std::log(0.9), std::log(0.09), std::log(0.009), std::log(0.001)});
  EXPECT_EQ(sw::top_p_filter(beam, 0.999).size(), 3u);
  EXPECT_EQ(sw::top_p_filter(beam, 1.0).size(), 4u);
  EXPECT_EQ(sw::top_p_filter(beam, 0.9).size(), 1u);
  EXPECT_EQ(sw::top_p_filter(beam, 0.95).size(), 2u);
  EXPECT_EQ(sw::top_p_filter(beam_of({-3.0}), 0.01).size(), 1u);
  EXPECT_TRUE(sw::top_p_filter({}, 0.5).empty());
  EXPECT_THROW(sw::top_p_filter(beam, 0.0), sw::Error);
}

TEST(TopP, NucleusPrefixOnWeights) {
  const std::vector<double> w{900, 90, 9, 1};
  EXPECT_EQ(sw::nucleus_prefix_length(w, 0.999), 3u);
  EXPECT_EQ(sw::nucleus_prefix_length(w, 0.9991), 4u);
  EXPECT_EQ(sw::nucleus_prefix_length(std::vector<double>{}, 0.5), 0u);
}

TEST(ScoreCandidates, Examples) {
  auto ps = sw::score_candidates(sw::Scorer::PathSum, 0.0, beam_of({-0.1, -0.7}));
  EXPECT_EQ(ps, (std::vector<double>{-0.1, -0.7}));
  auto mb = sw::score_candidates(sw::Scorer::MeanBeamLogprob, 0.0, beam_of({-0.2, -0.4}));
  ASSERT_EQ(mb.size(), 2u);
  EXPECT_NEAR(mb[0], -0.3, 1e-15);
  EXPECT_EQ(mb[0], mb[1]);
  EXPECT_EQ(sw::score_candidates(sw::Scorer::PathSum, -1.0, beam_of({-0.5})), std::vector<double>{-1.5});
}

TEST(ErrorAbort, Threshold) {
  EXPECT_EQ(sw::error_abort_threshold(0.5, 2), 1u);
  EXPECT_EQ(sw::error_abort_threshold(0.5, 3), 2u);
  EXPECT_EQ(sw::error_abort_threshold(0.5, 8), 4u);
  EXPECT_EQ(sw::error_abort_threshold(1.0, 8), 8u);
  EXPECT_EQ(sw::error_abort_threshold(0.1, 30), 3u);
}
