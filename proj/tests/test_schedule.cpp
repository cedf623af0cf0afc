// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"

using namespace mshift;

TEST(GreedySchedule, EightByFourteen) {
  const AnnihilationSchedule s = greedy_schedule(8, 14);
  EXPECT_EQ(s.num_steps(), 13);
  EXPECT_EQ(s.num_rots(), 48);
  EXPECT_TRUE(validate_schedule(s).ok);
}

TEST(GreedySchedule, SquareBlockNeedsNothing) {
  const AnnihilationSchedule s = greedy_schedule(5, 5);
  EXPECT_EQ(s.num_steps(), 0);
  EXPECT_EQ(s.num_rots(), 0);
  EXPECT_TRUE(validate_schedule(s).ok);
}

TEST(GreedySchedule, SingleRow) {
  const AnnihilationSchedule s = greedy_schedule(1, 3);
  ASSERT_EQ(s.num_steps(), 2);
  const auto steps = s.steps();
  ASSERT_EQ(steps[0].size(), 1u);
  ASSERT_EQ(steps[1].size(), 1u);
  EXPECT_EQ(steps[0][0], (Rotation{0, 0, 2}));
  EXPECT_EQ(steps[1][0], (Rotation{0, 1, 2}));
}

TEST(GreedySchedule, InvariantsOverShapes) {
  for (mshift::index r = 1; r <= 12; ++r)
    for (mshift::index d = 0; d <= 6; ++d) {
      const AnnihilationSchedule s = greedy_schedule(r, r + d);
      EXPECT_EQ(s.num_rots(), r * d);
      mshift::index sum = 0;
      for (mshift::index j : s.job_size) {
        EXPECT_GE(j, 1);
        sum += j;
      }
      EXPECT_EQ(sum, s.num_rots());
      const auto diag = validate_schedule(s);
      EXPECT_TRUE(diag.ok) << r << "x" << r + d << ": " << (diag.problems.empty() ? "" : diag.problems[0]);
    }
}

TEST(ValidateSchedule, FourBySeven) { EXPECT_TRUE(validate_schedule(greedy_schedule(4, 7)).ok); }

TEST(ValidateSchedule, ReportsColumnClash) {
  AnnihilationSchedule s;
  s.n_rows = 1;
  s.n_cols = 3;
  // both rotations use column 3 as helper in the same step
  s.job_size = {2};
  s.rot_info = {{0, 0, 2}, {0, 1, 2}};
  const auto d = validate_schedule(s);
  EXPECT_FALSE(d.ok);
  EXPECT_TRUE(std::any_of(d.problems.begin(), d.problems.end(),
                          [](const std::string& p) { return p.find("column clash") != std::string::npos; }));
}

TEST(ValidateSchedule, ReportsSafetyViolation) {
  AnnihilationSchedule s;
  s.n_rows = 2;
  s.n_cols = 3;
  // (1,1) is zeroed before (2,2) below its helper column
  s.job_size = {1, 1};
  s.rot_info = {{0, 0, 1}, {1, 1, 2}};
  const auto d = validate_schedule(s);
  EXPECT_FALSE(d.ok);
  EXPECT_TRUE(std::any_of(d.problems.begin(), d.problems.end(),
                          [](const std::string& p) { return p.find("safety") != std::string::npos; }));
}

TEST(ValidateSchedule, ReportsMissingTarget) {
  AnnihilationSchedule s = greedy_schedule(3, 5);
  s.rot_info.pop_back();
  s.job_size.back() -= 1;
  if (s.job_size.back() == 0) s.job_size.pop_back();
  EXPECT_FALSE(validate_schedule(s).ok);
}

TEST(DumpSchedule, MarksDiagonalAndSteps) {
  const std::string grid = dump_schedule(greedy_schedule(1, 3));
  EXPECT_EQ(grid, "  1   2   R\n");
}

TEST(ScheduleCache, ReusesPlans) {
  ScheduleCache cache;
  const auto a = cache.get(4, 8);
  const auto b = cache.get(4, 8);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(cache.size(), 1u);
  EXPECT_EQ(*a, greedy_schedule(4, 8));
}
