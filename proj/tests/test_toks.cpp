#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ptk/toks.hpp"

using namespace ptk;

namespace {

Pose person_at(double x, double y, double conf = 1.0, int frame = 0) {
  Pose p;
  for (int i = 0; i < kNumJoints; ++i) {
    p.keypoints[i].type_id = i + 1;
    p.keypoints[i].x = x + 15.0 * (i % 4);
    p.keypoints[i].y = y + 25.0 * (i / 4);
    p.keypoints[i].confidence = conf;
    p.keypoints[i].visible = true;
  }
  p.frame_index = frame;
  return p;
}

SequenceFile two_person_gt(int frames) {
  SequenceFile seq;
  seq.video_id = "toks_unit";
  seq.frame_width = 1920;
  seq.frame_height = 1080;
  for (int t = 0; t < frames; ++t) {
    Frame f;
    f.index = t;
    f.width = seq.frame_width;
    f.height = seq.frame_height;
    Pose a = person_at(300.0 + 4.0 * t, 400.0, 1.0, t);
    a.track_id = 0;
    Pose b = person_at(1100.0 + 4.0 * t, 500.0, 1.0, t);
    b.track_id = 1;
    f.poses = {a, b};
    seq.frames.push_back(f);
  }
  return seq;
}

// Test double: always reports failure, to exercise the skip path.
class ThrowingEstimator : public PoseEstimator {
 public:
  std::optional<Pose> estimate(const FrameRef&, const BBox&) override {
    throw std::runtime_error("estimator exploded");
  }
};

}  // namespace

TEST_CASE("empty previous frame leaves thresholded detections unchanged") {
  auto gt = two_person_gt(2);
  OracleJitterEstimator est(gt, 0.0, 0.0);
  ToksConfig cfg;
  std::vector<Pose> dets{person_at(300, 400, 0.9), person_at(1100, 500, 0.8)};
  FrameRef frame{0, 1920, 1080};
  auto out = toks_refine({}, dets, frame, est, cfg);
  REQUIRE(out.size() == 2);

  // below the box confidence floor: dropped
  std::vector<Pose> weak{person_at(300, 400, 0.15)};
  CHECK(toks_refine({}, weak, frame, est, cfg).empty());

  // weak individual keypoints are marked invisible
  std::vector<Pose> mixed{person_at(300, 400, 0.9)};
  mixed[0].keypoints[3].confidence = 0.05;
  auto floored = toks_refine({}, mixed, frame, est, cfg);
  REQUIRE(floored.size() == 1);
  CHECK_FALSE(floored[0].keypoints[3].visible);
}

TEST_CASE("a missed person is recovered through the previous frame's box") {
  auto gt = two_person_gt(2);
  OracleJitterEstimator est(gt, 0.5, 0.0, 4);
  ToksConfig cfg;
  // detector found only person 1 at t=1; person 0 exists at t=0
  std::vector<Pose> prev{person_at(300, 400, 0.95, 0), person_at(1100, 500, 0.95, 0)};
  std::vector<Pose> dets{person_at(1104, 500, 0.9, 1)};
  FrameRef frame{1, 1920, 1080};
  auto out = toks_refine(prev, dets, frame, est, cfg);
  REQUIRE(out.size() == 2);
  double best = 0.0;
  for (const auto& p : out)
    best = std::max(best, oks(p, gt.frames[1].poses[0], default_sigmas()).value);
  CHECK(best >= 0.9);
}

TEST_CASE("duplicate candidates merge keeping the higher mean confidence") {
  auto gt = two_person_gt(1);
  OracleJitterEstimator est(gt, 0.0, 0.0);
  ToksConfig cfg;
  Pose strong = person_at(300, 400, 0.9);
  Pose weak = person_at(302, 401, 0.6);  // same person, slight offset
  REQUIRE(oks(weak, strong, default_sigmas()).value >= cfg.oks_threshold);
  FrameRef frame{0, 1920, 1080};
  auto out = toks_refine({}, std::vector<Pose>{weak, strong}, frame, est, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].mean_confidence() == doctest::Approx(0.9));
}

TEST_CASE("output never contains two poses above the OKS threshold") {
  auto gt = two_person_gt(6);
  OracleJitterEstimator est(gt, 2.0, 0.05, 11);
  ToksConfig cfg;
  for (int t = 1; t < 6; ++t) {
    std::vector<Pose> prev = gt.frames[t - 1].poses;
    std::vector<Pose> dets;
    for (auto p : gt.frames[t].poses) {
      p.track_id.reset();
      dets.push_back(p);
      dets.push_back(p);  // deliberate duplicate
    }
    FrameRef frame{t, 1920, 1080};
    auto out = toks_refine(prev, dets, frame, est, cfg);
    for (size_t i = 0; i < out.size(); ++i)
      for (size_t j = i + 1; j < out.size(); ++j)
        CHECK(oks(out[i], out[j], default_sigmas()).value < cfg.oks_threshold);
  }
}

TEST_CASE("zero-noise oracle refinement never hurts mean OKS to ground truth") {
  auto gt = two_person_gt(8);
  OracleJitterEstimator est(gt, 0.0, 0.0);
  ToksConfig cfg;

  // degrade detections: jittered, and person 0 missing on odd frames
  SequenceFile detected = gt;
  std::uint64_t noise = 5;
  for (auto& f : detected.frames) {
    std::vector<Pose> kept;
    for (auto p : f.poses) {
      if (*p.track_id == 0 && f.index % 2 == 1) continue;
      p.track_id.reset();
      for (auto& k : p.keypoints) {
        noise = noise * 6364136223846793005ULL + 1442695040888963407ULL;
        k.x += static_cast<double>((noise >> 33) % 9) - 4.0;
        k.confidence = 0.8;
      }
      kept.push_back(p);
    }
    f.poses = kept;
  }

  auto mean_oks = [&](const SequenceFile& seq) {
    double acc = 0.0;
    int n = 0;
    for (size_t t = 0; t < seq.frames.size(); ++t)
      for (const auto& gp : gt.frames[t].poses) {
        double best = 0.0;
        for (const auto& p : seq.frames[t].poses)
          best = std::max(best, oks(p, gp, default_sigmas()).value);
        acc += best;
        ++n;
      }
    return acc / n;
  };

  auto refined = toks_refine_sequence(detected, est, cfg);
  CHECK(mean_oks(refined) >= mean_oks(detected));
}

TEST_CASE("alpha 1 with an exact oracle reduces to deduplicated thresholding") {
  auto gt = two_person_gt(2);
  OracleJitterEstimator est(gt, 0.0, 0.0);
  ToksConfig cfg;
  cfg.alpha = 1.0;
  std::vector<Pose> prev = gt.frames[0].poses;
  std::vector<Pose> dets = gt.frames[1].poses;
  for (auto& p : dets) p.track_id.reset();
  FrameRef frame{1, 1920, 1080};
  auto out = toks_refine(prev, dets, frame, est, cfg);
  CHECK(out.size() == 2);
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = i + 1; j < out.size(); ++j)
      CHECK(oks(out[i], out[j], default_sigmas()).value < cfg.oks_threshold);
}

TEST_CASE("estimator failures are skipped, never fatal") {
  ThrowingEstimator est;
  ToksConfig cfg;
  std::vector<Pose> prev{person_at(300, 400, 0.9)};
  std::vector<Pose> dets{person_at(500, 400, 0.9)};
  FrameRef frame{1, 1920, 1080};
  std::vector<Pose> out;
  CHECK_NOTHROW(out = toks_refine(prev, dets, frame, est, cfg));
  CHECK(out.size() == 1);
}

TEST_CASE("config validation") {
  ToksConfig c;
  c.alpha = 0.5;
  CHECK_THROWS(c.validate());
  c = ToksConfig{};
  c.oks_threshold = 1.5;
  CHECK_THROWS(c.validate());
  CHECK_NOTHROW(ToksConfig{}.validate());
}
