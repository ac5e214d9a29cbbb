#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "ptk/hungarian.hpp"
#include "ptk/tracker.hpp"

using namespace ptk;

namespace {

Pose person_at(double x, double y, int frame) {
  Pose p;
  for (int i = 0; i < kNumJoints; ++i) {
    p.keypoints[i].type_id = i + 1;
    p.keypoints[i].x = x + 12.0 * (i % 4);
    p.keypoints[i].y = y + 20.0 * (i / 4);
    p.keypoints[i].confidence = 1.0;
    p.keypoints[i].visible = true;
  }
  p.frame_index = frame;
  return p;
}

SequenceFile walking_sequence(int persons, int frames) {
  SequenceFile seq;
  seq.video_id = "tracker_unit";
  seq.frame_width = 1920;
  seq.frame_height = 1080;
  for (int t = 0; t < frames; ++t) {
    Frame f;
    f.index = t;
    f.width = seq.frame_width;
    f.height = seq.frame_height;
    for (int p = 0; p < persons; ++p)
      f.poses.push_back(person_at(150.0 + 400.0 * p + 6.0 * t, 500.0, t));
    seq.frames.push_back(f);
  }
  return seq;
}

MatcherConfig tiny_config() {
  MatcherConfig c;
  c.num_layers = 2;
  c.hidden = 16;
  c.intermediate = 16;
  c.heads = 2;
  return c;
}

// Exhaustive oracle: best one-to-one total over all column permutations.
double brute_force_best(const std::vector<std::vector<double>>& score) {
  const int rows = static_cast<int>(score.size());
  const int cols = static_cast<int>(score[0].size());
  const int n = std::max(rows, cols);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1e18;
  do {
    double total = 0.0;
    for (int r = 0; r < rows; ++r)
      if (perm[r] < cols) total += score[r][perm[r]];
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Globally score-sorted greedy, as used by frame assignment.
double greedy_total(const std::vector<std::vector<double>>& score) {
  struct Entry { double s; int r, c; };
  std::vector<Entry> entries;
  for (size_t r = 0; r < score.size(); ++r)
    for (size_t c = 0; c < score[r].size(); ++c)
      entries.push_back({score[r][c], static_cast<int>(r), static_cast<int>(c)});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.s > b.s; });
  std::set<int> used_r, used_c;
  double total = 0.0;
  for (const auto& e : entries) {
    if (used_r.count(e.r) || used_c.count(e.c)) continue;
    used_r.insert(e.r);
    used_c.insert(e.c);
    total += e.s;
  }
  return total;
}

}  // namespace

TEST_CASE("hungarian matches the exhaustive permutation oracle") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    int rows = dim(rng), cols = dim(rng);
    std::vector<std::vector<double>> score(rows, std::vector<double>(cols));
    for (auto& row : score)
      for (auto& v : row) v = u(rng);
    auto assign = hungarian_max(score);
    REQUIRE(static_cast<int>(assign.size()) == rows);
    double total = 0.0;
    std::set<int> cols_used;
    for (int r = 0; r < rows; ++r)
      if (assign[r] >= 0) {
        CHECK(assign[r] < cols);
        CHECK_FALSE(cols_used.count(assign[r]));
        cols_used.insert(assign[r]);
        total += score[r][assign[r]];
      }
    CHECK(total == doctest::Approx(brute_force_best(score)).epsilon(1e-9));
    CHECK(greedy_total(score) <= total + 1e-9);
  }
}

TEST_CASE("hand example: greedy and hungarian agree on the dominant pairing") {
  std::vector<std::vector<double>> score{{0.9, 0.2}, {0.8, 0.7}};
  auto assign = hungarian_max(score);
  CHECK(assign[0] == 0);
  CHECK(assign[1] == 1);
  CHECK(greedy_total(score) == doctest::Approx(1.6));
}

TEST_CASE("first frame spawns fresh consecutive ids") {
  MatcherConfig mc = tiny_config();
  ModelParams params = init_params(mc, 3);
  TrackerConfig tc;
  auto seq = walking_sequence(3, 1);
  TrackState state(tc.delta);
  auto assigns = assign_frame(seq.frames[0].poses, state, params, mc, tc, 1920, 1080);
  REQUIRE(assigns.size() == 3);
  std::set<int> ids;
  for (const auto& a : assigns) {
    CHECK(a.spawned);
    ids.insert(a.track_id);
  }
  CHECK(ids == std::set<int>{0, 1, 2});
}

TEST_CASE("no track id repeats within a frame") {
  MatcherConfig mc = tiny_config();
  ModelParams params = init_params(mc, 5);
  for (auto mode : {TrackerConfig::Assignment::kGreedy, TrackerConfig::Assignment::kHungarian}) {
    TrackerConfig tc;
    tc.assignment = mode;
    tc.min_match_score = 0.0;  // force association pressure
    auto seq = walking_sequence(4, 10);
    auto result = track_video(seq, params, mc, tc);
    for (const auto& f : result.tracked.frames) {
      std::set<int> ids;
      for (const auto& p : f.poses) {
        REQUIRE(p.track_id.has_value());
        CHECK_FALSE(ids.count(*p.track_id));
        ids.insert(*p.track_id);
      }
    }
  }
}

TEST_CASE("candidate list respects the n_nearest and delta bounds") {
  MatcherConfig mc = tiny_config();
  ModelParams params = init_params(mc, 7);
  TrackerConfig tc;
  tc.n_nearest = 6;
  TrackState state(tc.delta);
  // one past frame with 10 identified poses
  std::vector<Pose> past;
  for (int i = 0; i < 10; ++i) {
    Pose p = person_at(100.0 + 150.0 * i, 500.0, 0);
    p.track_id = i;
    past.push_back(p);
  }
  state.push_frame(past);
  Pose query = person_at(120.0, 500.0, 1);
  auto cands = score_candidates(query, state, params, mc, tc, 1920, 1080);
  CHECK(static_cast<int>(cands.size()) == 6);
  for (size_t i = 1; i < cands.size(); ++i) CHECK(cands[i - 1].score >= cands[i].score);

  // same poses at several gaps: bounded by delta * n_nearest
  state.push_frame(past);
  state.push_frame(past);
  auto more = score_candidates(query, state, params, mc, tc, 1920, 1080);
  CHECK(static_cast<int>(more.size()) <= tc.delta * tc.n_nearest);
}

TEST_CASE("online causality: truncating the video preserves earlier frames") {
  MatcherConfig mc = tiny_config();
  ModelParams params = init_params(mc, 11);
  TrackerConfig tc;
  auto seq = walking_sequence(3, 12);
  auto full = track_video(seq, params, mc, tc);
  SequenceFile head = seq;
  head.frames.resize(7);
  auto partial = track_video(head, params, mc, tc);
  for (int t = 0; t < 7; ++t) {
    REQUIRE(full.tracked.frames[t].poses.size() == partial.tracked.frames[t].poses.size());
    for (size_t p = 0; p < full.tracked.frames[t].poses.size(); ++p)
      CHECK(*full.tracked.frames[t].poses[p].track_id ==
            *partial.tracked.frames[t].poses[p].track_id);
  }
}

TEST_CASE("tracking is deterministic given the same inputs") {
  MatcherConfig mc = tiny_config();
  ModelParams params = init_params(mc, 13);
  TrackerConfig tc;
  auto seq = walking_sequence(4, 8);
  auto a = track_video(seq, params, mc, tc);
  auto b = track_video(seq, params, mc, tc);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].track_id == b.log[i].track_id);
    CHECK(a.log[i].best_score == b.log[i].best_score);
  }
}

TEST_CASE("a pose with no candidates above threshold spawns a new track") {
  MatcherConfig mc = tiny_config();
  ModelParams params = init_params(mc, 17);
  TrackerConfig tc;
  tc.min_match_score = 1.0;  // scores are strictly below 1: every pose must spawn
  auto seq = walking_sequence(2, 5);
  auto result = track_video(seq, params, mc, tc);
  std::set<int> ids;
  for (const auto& row : result.log) {
    CHECK(row.spawned);
    ids.insert(row.track_id);
  }
  CHECK(ids.size() == 10);  // every pose in every frame got a fresh id
}

TEST_CASE("iou baseline keeps ids on clean separated tracks") {
  auto seq = walking_sequence(3, 10);
  auto tracked = track_video_iou_baseline(seq);
  // each person moves 6 px/frame with 400 px separation: IoU association holds
  std::vector<std::set<int>> per_person(3);
  for (const auto& f : tracked.frames)
    for (size_t p = 0; p < f.poses.size(); ++p)
      per_person[p].insert(*f.poses[p].track_id);
  for (const auto& ids : per_person) CHECK(ids.size() == 1);
}

TEST_CASE("tracker config validation") {
  TrackerConfig c;
  c.delta = 0;
  CHECK_THROWS(c.validate());
  c = TrackerConfig{};
  c.n_nearest = 0;
  CHECK_THROWS(c.validate());
  CHECK_NOTHROW(TrackerConfig{}.validate());
}
