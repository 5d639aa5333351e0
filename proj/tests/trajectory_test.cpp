// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ica/error.hpp"
#include "ica/rollout_log.hpp"
#include "support/builders.hpp"

namespace ica {
namespace {

using testing::TrajectoryBuilder;

bool has_violation(const ValidationReport& r, const std::string& code) {
  return std::any_of(r.begin(), r.end(),
                     [&](const Violation& v) { return v.code == code; });
}

Trajectory well_formed() {
  return TrajectoryBuilder("t1").search({"https://a.test/1", "https://a.test/2"})
      .fetch({"https://a.test/2"})
      .answer(1);
}

TEST(ValidateTrajectory, WellFormedThreeTurnsIsClean) {
  EXPECT_TRUE(validate_trajectory(well_formed()).empty());
}

TEST(ValidateTrajectory, AnswerBeforeFinalTurn) {
  Trajectory t = well_formed();
  t.turns[1].action = AnswerAction{"early"};
  t.turns[1].observation = NoObservation{};
  EXPECT_TRUE(has_violation(validate_trajectory(t), violation::kAnswerNotTerminal));
}

TEST(ValidateTrajectory, IndexGap) {
  Trajectory t = TrajectoryBuilder("t").search({"https://a.test/"}).answer(0);
  t.turns[1].index = 3;
  EXPECT_TRUE(has_violation(validate_trajectory(t), violation::kIndexGap));
}

TEST(ValidateTrajectory, MissingAnswer) {
  Trajectory t = TrajectoryBuilder("t").search({"https://a.test/"});
  EXPECT_TRUE(has_violation(validate_trajectory(t), violation::kMissingAnswer));
}

TEST(ValidateTrajectory, FetchMustComeFromPreviousResults) {
  Trajectory t = TrajectoryBuilder("t")
                     .search({"https://a.test/1"})
                     .fetch({"https://elsewhere.test/"})
                     .answer(0);
  EXPECT_TRUE(has_violation(validate_trajectory(t),
                            violation::kFetchNotFromPreviousResults));

  // Results two turns back do not count.
  Trajectory stale = TrajectoryBuilder("t")
                         .search({"https://a.test/1"})
                         .fetch({"https://a.test/1"})
                         .fetch({"https://a.test/1"})
                         .answer(0);
  EXPECT_TRUE(has_violation(validate_trajectory(stale),
                            violation::kFetchNotFromPreviousResults));
}

TEST(ValidateTrajectory, EmptyPayloads) {
  Trajectory t = well_formed();
  std::get<SearchAction>(t.turns[0].action).queries.clear();
  std::get<AnswerAction>(t.turns[2].action).text.clear();
  const auto r = validate_trajectory(t);
  EXPECT_TRUE(has_violation(r, violation::kEmptySearch));
  EXPECT_TRUE(has_violation(r, violation::kEmptyAnswer));
}

TEST(ValidateTrajectory, ObservationKindMustMatchAction) {
  Trajectory t = well_formed();
  t.turns[1].observation = SearchResults{};
  EXPECT_TRUE(has_violation(validate_trajectory(t), violation::kObservationMismatch));
}

TEST(ValidateTrajectory, FailedToolCallMayCarryNoObservation) {
  Trajectory t = well_formed();
  t.turns[1].observation = NoObservation{};
  EXPECT_TRUE(validate_trajectory(t).empty());
}

TEST(ValidateTrajectory, RanksMustBeContiguousFromOne) {
  Trajectory t = well_formed();
  std::get<SearchResults>(t.turns[0].observation).items[1].rank = 3;
  EXPECT_TRUE(has_violation(validate_trajectory(t), violation::kRankNotContiguous));
}

TEST(ValidateTrajectory, TokenTotalsMustAdd) {
  Trajectory t = well_formed();
  t.total_generated_tokens += 1;
  EXPECT_TRUE(has_violation(validate_trajectory(t), violation::kTokenSumMismatch));
}

TEST(ValidateTrajectory, ReportsEveryViolation) {
  Trajectory t = well_formed();
  t.outcome = 2;
  t.total_generated_tokens = 99;
  t.turns[0].index = 5;
  EXPECT_GE(validate_trajectory(t).size(), 3u);
}

TEST(RolloutLog, GroupsByQueryInFirstAppearanceOrder) {
  std::stringstream ss;
  std::vector<RolloutGroup> groups = {
      {"q1", {TrajectoryBuilder("a", "q1").answer(1),
              TrajectoryBuilder("b", "q1").answer(0),
              TrajectoryBuilder("c", "q1").answer(0),
              TrajectoryBuilder("d", "q1").answer(1)}}};
  write_rollout_log(groups, ss);
  const auto parsed = read_rollout_log(ss);
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].trajectories.size(), 4u);

  std::stringstream mixed;
  mixed << serialize_trajectory(TrajectoryBuilder("x", "q2").answer(0)) << "\n"
        << serialize_trajectory(TrajectoryBuilder("y", "q1").answer(0)) << "\n"
        << serialize_trajectory(TrajectoryBuilder("z", "q2").answer(1)) << "\n";
  const auto two = read_rollout_log(mixed);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].query_id, "q2");
  EXPECT_EQ(two[0].trajectories.size(), 2u);
  EXPECT_EQ(two[1].query_id, "q1");
}

TEST(RolloutLog, EmptyInputYieldsNoGroups) {
  std::stringstream ss;
  EXPECT_TRUE(read_rollout_log(ss).empty());
}

TEST(RolloutLog, FetchOutsidePreviousResultsIsInvariantViolation) {
  const Trajectory bad = TrajectoryBuilder("bad")
                             .search({"https://a.test/1"})
                             .fetch({"https://b.test/"})
                             .answer(0);
  std::stringstream ss(serialize_trajectory(bad) + "\n");
  try {
    read_rollout_log(ss);
    FAIL() << "expected INVARIANT_VIOLATION";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvariantViolation);
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(violation::kFetchNotFromPreviousResults),
              std::string::npos);
  }
}

TEST(RolloutLog, MalformedRecordsNameLineAndField) {
  const std::string good = serialize_trajectory(well_formed());
  std::string missing = good;
  missing.replace(missing.find("\"query_text\""), 12, "\"query_texx\"");
  std::stringstream ss(good + "\n" + missing + "\n");
  try {
    read_rollout_log(ss);
    FAIL() << "expected MALFORMED_RECORD";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("query_text"), std::string::npos);
  }

  for (const std::string& line :
       {std::string("not json"), std::string("[1,2]"),
        std::string(R"({"schema_version":9})")}) {
    EXPECT_THROW(parse_trajectory_record(line, 1), Error);
  }
  std::string bad_kind = good;
  bad_kind.replace(bad_kind.find("\"fetch\""), 7, "\"click\"");
  try {
    parse_trajectory_record(bad_kind, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("turns[1].action.kind"),
              std::string::npos);
  }
}

TEST(RolloutLog, RoundTripThroughFileWithUnicode) {
  Trajectory t = well_formed();
  t.query_text = "Qui a écrit «漢字» 🙂 \"quoted\"\n?";
  std::get<SearchResults>(t.turns[0].observation).items[0].snippet = "naïve ✓";
  Trajectory other = TrajectoryBuilder("t2").answer(0);
  other.query_text = t.query_text;
  const std::vector<RolloutGroup> groups = {{"q1", {t, other}}};
  const auto path = std::filesystem::temp_directory_path() / "ica_rt.jsonl";
  write_rollout_log(groups, path);
  const auto parsed = parse_rollout_log(path);
  EXPECT_EQ(parsed, groups);
  EXPECT_EQ(parsed[0].trajectories[0].query_text, t.query_text);
  std::filesystem::remove(path);
}

TEST(RolloutLog, UnwritablePathIsIoError) {
  try {
    write_rollout_log({}, "/nonexistent-dir/x/y.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
  try {
    parse_rollout_log("/nonexistent-dir/none.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(RolloutLogProperty, RandomGroupsRoundTripAndValidate) {
  Rng rng(20261019);
  for (int i = 0; i < 200; ++i) {
    const RolloutGroup g = testing::random_group(
        rng, "q" + std::to_string(i), 1 + static_cast<int>(rng.below(5)));
    for (const auto& t : g.trajectories) {
      ASSERT_TRUE(validate_trajectory(t).empty());
      // FETCH urls are a subset of the previous turn's result urls.
      for (std::size_t k = 1; k < t.turns.size(); ++k) {
        if (const auto* f = std::get_if<FetchAction>(&t.turns[k].action)) {
          const auto& prev = std::get<SearchResults>(t.turns[k - 1].observation);
          for (const auto& u : f->urls) {
            EXPECT_TRUE(std::any_of(prev.items.begin(), prev.items.end(),
                                    [&](const auto& it) { return it.url == u; }));
          }
        }
      }
    }
    std::stringstream ss;
    write_rollout_log({g}, ss);
    const auto back = read_rollout_log(ss);
    ASSERT_EQ(back.size(), 1u);
    ASSERT_EQ(back[0], g);
  }
}

}  // namespace
}  // namespace ica
