#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ptk/metrics.hpp"

using namespace ptk;

namespace {

// head_top to head_bottom distance is 12 px, so the PCKh@0.5 gate is 6 px.
Pose person_at(double x, double y, int track, int frame, double conf = 1.0) {
  Pose p;
  for (int i = 0; i < kNumJoints; ++i) {
    p.keypoints[i].type_id = i + 1;
    p.keypoints[i].x = x + 12.0 * (i % 4);
    p.keypoints[i].y = y + 20.0 * (i / 4);
    p.keypoints[i].confidence = conf;
    p.keypoints[i].visible = true;
  }
  p.track_id = track;
  p.frame_index = frame;
  return p;
}

std::vector<Frame> one_person_video(int frames, double step = 5.0) {
  std::vector<Frame> out;
  for (int t = 0; t < frames; ++t) {
    Frame f;
    f.index = t;
    f.width = 1920;
    f.height = 1080;
    f.poses.push_back(person_at(200.0 + step * t, 400.0, 0, t));
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_CASE("perfect predictions score MOTA 1 with zero switches") {
  auto gt = one_person_video(10);
  auto report = evaluate_mota(gt, gt);
  CHECK(report.total_mota() == doctest::Approx(1.0));
  CHECK(report.total_idsw_pct() == doctest::Approx(0.0));
  for (const auto& jc : report.per_joint) {
    CHECK(jc.fn == 0);
    CHECK(jc.fp == 0);
    CHECK(jc.idsw == 0);
    CHECK(jc.gt == 10);
  }
  auto ap = evaluate_ap(gt, gt);
  CHECK(ap.total == doctest::Approx(1.0));
}

TEST_CASE("one id switch over 10 frames gives MOTA 0.9") {
  auto gt = one_person_video(10);
  auto pred = gt;
  for (int t = 6; t < 10; ++t) pred[t].poses[0].track_id = 7;  // id changes once
  auto report = evaluate_mota(pred, gt);
  for (const auto& jc : report.per_joint) {
    CHECK(jc.idsw == 1);
    CHECK(jc.fn == 0);
    CHECK(jc.fp == 0);
    CHECK(jc.mota() == doctest::Approx(0.9));
  }
  CHECK(report.total_mota() == doctest::Approx(0.9));
  CHECK(report.total_idsw_pct() == doctest::Approx(10.0));
}

TEST_CASE("a missed pose counts one FN per joint") {
  auto gt = one_person_video(5);
  auto pred = gt;
  pred[2].poses.clear();
  auto report = evaluate_mota(pred, gt);
  for (const auto& jc : report.per_joint) {
    CHECK(jc.fn == 1);
    CHECK(jc.fp == 0);
    CHECK(jc.mota() == doctest::Approx(1.0 - 1.0 / 5.0));
  }
}

TEST_CASE("an hallucinated pose counts one FP per joint") {
  auto gt = one_person_video(5);
  auto pred = gt;
  pred[3].poses.push_back(person_at(1500, 800, 9, 3));
  auto report = evaluate_mota(pred, gt);
  for (const auto& jc : report.per_joint) {
    CHECK(jc.fp == 1);
    CHECK(jc.fn == 0);
  }
}

TEST_CASE("the distance gate is half the head size") {
  auto gt = one_person_video(1);
  auto inside = gt;
  for (auto& k : inside[0].poses[0].keypoints) k.x += 5.0;  // within the 6 px gate
  auto r1 = evaluate_mota(inside, gt);
  CHECK(r1.total_mota() == doctest::Approx(1.0));

  auto outside = gt;
  for (auto& k : outside[0].poses[0].keypoints) k.x += 7.0;  // beyond the gate
  auto r2 = evaluate_mota(outside, gt);
  for (const auto& jc : r2.per_joint) {
    CHECK(jc.fn == 1);
    CHECK(jc.fp == 1);
  }
}

TEST_CASE("relabeling predicted track ids never changes the report") {
  auto gt = one_person_video(8);
  Frame extra;  // second person to make ids meaningful
  for (int t = 0; t < 8; ++t) {
    gt[t].poses.push_back(person_at(900.0 + 5.0 * t, 600.0, 1, t));
  }
  auto pred = gt;
  for (int t = 4; t < 8; ++t) {  // swap the two ids midway: 2 switches
    pred[t].poses[0].track_id = 1;
    pred[t].poses[1].track_id = 0;
  }
  auto base = evaluate_mota(pred, gt);
  auto relabeled = pred;
  for (auto& f : relabeled)
    for (auto& p : f.poses) p.track_id = *p.track_id * 31 + 100;  // bijection
  auto again = evaluate_mota(relabeled, gt);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK(base.per_joint[j].idsw == again.per_joint[j].idsw);
    CHECK(base.per_joint[j].fn == again.per_joint[j].fn);
    CHECK(base.per_joint[j].fp == again.per_joint[j].fp);
  }
  CHECK(base.per_joint[0].idsw == 2);
}

TEST_CASE("stream mismatches and unlabeled ground truth are hard failures") {
  auto gt = one_person_video(4);
  auto pred = one_person_video(3);
  CHECK_THROWS(evaluate_mota(pred, gt));

  auto bad_gt = one_person_video(4);
  bad_gt[1].poses[0].track_id.reset();
  CHECK_THROWS(evaluate_mota(bad_gt, bad_gt));
}

TEST_CASE("AP is 0.5 when half the keypoints are missed and the rest perfect") {
  auto gt = one_person_video(10);
  auto pred = gt;
  for (int t = 0; t < 10; t += 2) pred[t].poses.clear();
  auto ap = evaluate_ap(pred, gt);
  for (double v : ap.per_joint) CHECK(v == doctest::Approx(0.5));
  CHECK(ap.total == doctest::Approx(0.5));
}

TEST_CASE("confidence threshold drops weak keypoints, FP count is monotone") {
  auto gt = one_person_video(6);
  auto pred = gt;
  // an hallucinated low-confidence pose per frame
  for (int t = 0; t < 6; ++t) pred[t].poses.push_back(person_at(1600, 900, 5, t, 0.3));
  long long prev_fp = -1;
  for (double thr : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    EvalConfig cfg;
    cfg.conf_threshold = thr;
    auto report = evaluate_mota(pred, gt, cfg);
    long long fp = report.summed().fp;
    if (prev_fp >= 0) CHECK(fp <= prev_fp);
    prev_fp = fp;
  }
  EvalConfig strict;
  strict.conf_threshold = 0.5;
  CHECK(evaluate_mota(pred, gt, strict).summed().fp == 0);
}

TEST_CASE("threshold sweep produces one row per threshold") {
  auto gt = one_person_video(5);
  auto rows = sweep_confidence_threshold(gt, gt, {0.0, 0.25, 0.5});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].threshold == 0.0);
  CHECK(rows[2].threshold == 0.5);
  for (const auto& r : rows) {
    CHECK(r.mota == doctest::Approx(1.0));
    CHECK(r.ap == doctest::Approx(1.0));
  }
}

TEST_CASE("report formatting carries the grouped column order") {
  auto gt = one_person_video(3);
  auto mota = evaluate_mota(gt, gt);
  auto ap = evaluate_ap(gt, gt);
  std::string text = format_report(mota, ap);
  for (const char* col : {"Head", "Shou", "Elb", "Wri", "Hip", "Knee", "Ankl", "Total"})
    CHECK(text.find(col) != std::string::npos);
}

TEST_CASE("total MOTA is the arithmetic mean over joints") {
  MotaReport r;
  for (int j = 0; j < kNumJoints; ++j) {
    r.per_joint[j].gt = 10;
    r.per_joint[j].fn = j % 2;  // alternating 1.0 and 0.9
  }
  double expected = 0.0;
  for (int j = 0; j < kNumJoints; ++j) expected += r.per_joint[j].mota();
  expected /= kNumJoints;
  CHECK(r.total_mota() == doctest::Approx(expected));
}
