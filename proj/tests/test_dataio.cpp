#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ptk/dataio.hpp"

using namespace ptk;

namespace {

bool sequences_equal(const SequenceFile& a, const SequenceFile& b) {
  if (a.video_id != b.video_id || a.frame_width != b.frame_width ||
      a.frame_height != b.frame_height || a.frames.size() != b.frames.size())
    return false;
  for (size_t f = 0; f < a.frames.size(); ++f) {
    const auto& fa = a.frames[f];
    const auto& fb = b.frames[f];
    if (fa.index != fb.index || fa.poses.size() != fb.poses.size()) return false;
    for (size_t p = 0; p < fa.poses.size(); ++p) {
      const auto& pa = fa.poses[p];
      const auto& pb = fb.poses[p];
      if (pa.track_id != pb.track_id) return false;
      for (int k = 0; k < kNumJoints; ++k) {
        const auto& ka = pa.keypoints[k];
        const auto& kb = pb.keypoints[k];
        if (ka.x != kb.x || ka.y != kb.y || ka.confidence != kb.confidence ||
            ka.visible != kb.visible)
          return false;
      }
    }
  }
  return true;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("synthetic generation round-trips through save and load") {
  SynthConfig cfg;
  cfg.num_persons = 2;
  cfg.num_frames = 10;
  cfg.jitter_sigma = 1.5;
  cfg.seed = 3;
  auto result = generate_synthetic(cfg);
  REQUIRE(result.ground_truth.frames.size() == 10);

  std::string path = "roundtrip_unit.json";
  save_sequence(result.ground_truth, path);
  SequenceFile loaded = load_sequence(path);
  CHECK(sequences_equal(result.ground_truth, loaded));
  std::remove(path.c_str());
}

TEST_CASE("loading remaps a permuted joint order to canonical") {
  SynthConfig cfg;
  cfg.num_persons = 1;
  cfg.num_frames = 2;
  cfg.seed = 8;
  auto gt = generate_synthetic(cfg).ground_truth;
  std::string path = "permuted_unit.json";
  save_sequence(gt, path);

  auto j = nlohmann::ordered_json::parse(slurp(path));
  auto names = j["joint_names"].get<std::vector<std::string>>();
  // reverse the declared joint order and every keypoint array to match
  std::reverse(names.begin(), names.end());
  j["joint_names"] = names;
  for (auto& frame : j["frames"])
    for (auto& pose : frame["poses"]) {
      auto kps = pose["keypoints"];
      std::reverse(kps.begin(), kps.end());
      pose["keypoints"] = kps;
    }
  std::ofstream(path) << j.dump(1);

  SequenceFile loaded = load_sequence(path);
  CHECK(sequences_equal(gt, loaded));
  std::remove(path.c_str());
}

TEST_CASE("a 14-joint file is rejected naming the missing joint") {
  SynthConfig cfg;
  cfg.num_persons = 1;
  cfg.num_frames = 1;
  auto gt = generate_synthetic(cfg).ground_truth;
  std::string path = "missing_joint_unit.json";
  save_sequence(gt, path);

  auto j = nlohmann::ordered_json::parse(slurp(path));
  auto names = j["joint_names"].get<std::vector<std::string>>();
  names.pop_back();  // drops right_ankle
  j["joint_names"] = names;
  std::ofstream(path) << j.dump(1);

  CHECK_THROWS_WITH_AS(load_sequence(path), doctest::Contains("15"), std::runtime_error);

  // 15 names but the wrong one: error names the absent canonical joint
  names.push_back("tail");
  j["joint_names"] = names;
  std::ofstream(path) << j.dump(1);
  CHECK_THROWS_WITH_AS(load_sequence(path), doctest::Contains("right_ankle"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("missing file and non-contiguous frames are rejected") {
  CHECK_THROWS_WITH_AS(load_sequence("does_not_exist.json"),
                       doctest::Contains("does_not_exist.json"), std::runtime_error);

  SynthConfig cfg;
  cfg.num_persons = 1;
  cfg.num_frames = 3;
  auto gt = generate_synthetic(cfg).ground_truth;
  std::string path = "gap_unit.json";
  save_sequence(gt, path);
  auto j = nlohmann::ordered_json::parse(slurp(path));
  j["frames"][2]["index"] = 5;
  std::ofstream(path) << j.dump(1);
  CHECK_THROWS_WITH_AS(load_sequence(path), doctest::Contains("contiguous"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("zero noise detections equal ground truth without ids") {
  SynthConfig cfg;
  cfg.num_persons = 3;
  cfg.num_frames = 8;
  cfg.jitter_sigma = 0.0;
  cfg.keypoint_dropout_p = 0.0;
  cfg.seed = 12;
  auto r = generate_synthetic(cfg);
  REQUIRE(r.detected.frames.size() == r.ground_truth.frames.size());
  for (size_t f = 0; f < r.detected.frames.size(); ++f) {
    const auto& det = r.detected.frames[f];
    const auto& gt = r.ground_truth.frames[f];
    REQUIRE(det.poses.size() == gt.poses.size());
    for (const auto& p : det.poses) CHECK_FALSE(p.track_id.has_value());
    for (const auto& p : gt.poses) CHECK(p.track_id.has_value());
    for (const auto& dp : det.poses) {
      // order may be shuffled; find the matching GT pose by coordinates
      bool found = false;
      for (const auto& gp : gt.poses) {
        bool same = true;
        for (int k = 0; k < kNumJoints && same; ++k)
          same = dp.keypoints[k].x == gp.keypoints[k].x &&
                 dp.keypoints[k].y == gp.keypoints[k].y;
        found = found || same;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("missed-pose probability 1 empties all detections") {
  SynthConfig cfg;
  cfg.num_persons = 2;
  cfg.num_frames = 5;
  cfg.missed_pose_p = 1.0;
  auto r = generate_synthetic(cfg);
  for (const auto& f : r.detected.frames) CHECK(f.poses.empty());
  for (const auto& f : r.ground_truth.frames) CHECK_FALSE(f.poses.empty());
}

TEST_CASE("generation is bit-identical under a fixed seed") {
  SynthConfig cfg;
  cfg.num_persons = 2;
  cfg.num_frames = 50;
  cfg.jitter_sigma = 2.0;
  cfg.keypoint_dropout_p = 0.05;
  cfg.missed_pose_p = 0.1;
  cfg.duplicate_pose_p = 0.05;
  cfg.seed = 77;
  auto a = generate_synthetic(cfg);
  auto b = generate_synthetic(cfg);
  CHECK(sequences_equal(a.ground_truth, b.ground_truth));
  CHECK(sequences_equal(a.detected, b.detected));

  std::string pa = "det_a_unit.json", pb = "det_b_unit.json";
  save_sequence(a.detected, pa);
  save_sequence(b.detected, pb);
  CHECK(slurp(pa) == slurp(pb));
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("every generated keypoint is in frame or invisible") {
  SynthConfig cfg;
  cfg.num_persons = 4;
  cfg.num_frames = 40;
  cfg.jitter_sigma = 6.0;
  cfg.keypoint_dropout_p = 0.1;
  cfg.seed = 9;
  auto r = generate_synthetic(cfg);
  for (const auto& seq : {r.ground_truth, r.detected})
    for (const auto& f : seq.frames)
      for (const auto& p : f.poses)
        for (const auto& k : p.keypoints)
          if (k.visible) {
            CHECK(k.x >= 0);
            CHECK(k.x <= cfg.frame_width);
            CHECK(k.y >= 0);
            CHECK(k.y <= cfg.frame_height);
          }
}

TEST_CASE("occlusion hides a person for exactly the configured span") {
  SynthConfig cfg;
  cfg.num_persons = 2;
  cfg.num_frames = 30;
  cfg.occlusion_count = 1;
  cfg.occlusion_len = 3;
  cfg.seed = 21;
  auto r = generate_synthetic(cfg);
  // count, per track id, the frames it is absent from the ground truth
  std::map<int, int> absent;
  for (const auto& f : r.ground_truth.frames) {
    std::set<int> present;
    for (const auto& p : f.poses) present.insert(*p.track_id);
    for (int id = 0; id < cfg.num_persons; ++id)
      if (!present.count(id)) absent[id]++;
  }
  int total_absent = 0;
  for (auto [id, n] : absent) total_absent += n;
  CHECK(total_absent == cfg.occlusion_count * cfg.occlusion_len);
}

TEST_CASE("synth config validation") {
  SynthConfig c;
  c.missed_pose_p = 1.5;
  CHECK_THROWS(c.validate());
  c = SynthConfig{};
  c.num_persons = 0;
  CHECK_THROWS(c.validate());
  CHECK_NOTHROW(SynthConfig{}.validate());
}
