#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ptk/geometry.hpp"

using namespace ptk;

namespace {

Pose make_pose(double x, double y, double spread = 10.0) {
  Pose p;
  for (int i = 0; i < kNumJoints; ++i) {
    p.keypoints[i].type_id = i + 1;
    p.keypoints[i].x = x + spread * (i % 4);
    p.keypoints[i].y = y + spread * (i / 4);
    p.keypoints[i].confidence = 1.0;
    p.keypoints[i].visible = true;
  }
  return p;
}

Sigmas uniform_sigmas(double v) {
  Sigmas s;
  s.fill(v);
  return s;
}

}  // namespace

TEST_CASE("oks of identical poses is 1") {
  Pose p = make_pose(100, 100);
  p.bbox = BBox{90, 90, 60, 60};
  auto r = oks(p, p, default_sigmas());
  CHECK(r.value == doctest::Approx(1.0));
  CHECK_FALSE(r.no_mutual_visibility);
}

TEST_CASE("oks single visible joint at d = s*sigma*sqrt(2) gives exp(-1)") {
  // Independent oracle: with one visible joint the mean collapses to a single
  // exponential; choosing d^2 = 2 s^2 sigma^2 makes the exponent exactly -1.
  const double sigma = 0.1;
  Pose ref;
  ref.keypoints[0] = {1, 50, 50, 1.0, true};
  for (int i = 1; i < kNumJoints; ++i) ref.keypoints[i] = {i + 1, 0, 0, 0.0, false};
  ref.bbox = BBox{0, 0, 10, 10};  // s^2 = 100, s = 10
  const double d = 10.0 * sigma * std::sqrt(2.0);
  Pose cand = ref;
  cand.keypoints[0].x += d;
  auto r = oks(cand, ref, uniform_sigmas(sigma));
  CHECK(r.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("oks with all joints displaced equally matches the closed form") {
  const double sigma = 0.08;
  Pose ref = make_pose(200, 200);
  ref.bbox = BBox{190, 190, 50, 50};
  const double d = 3.0;
  Pose cand = ref;
  for (auto& k : cand.keypoints) k.x += d;
  const double s2 = 50.0 * 50.0;
  const double expected = std::exp(-d * d / (2.0 * s2 * sigma * sigma));
  // Brute-force oracle: sum the per-joint exponentials explicitly.
  double acc = 0.0;
  for (int i = 0; i < kNumJoints; ++i)
    acc += std::exp(-(d * d) / (2.0 * s2 * sigma * sigma));
  CHECK(oks(cand, ref, uniform_sigmas(sigma)).value ==
        doctest::Approx(acc / kNumJoints).epsilon(1e-12));
  CHECK(oks(cand, ref, uniform_sigmas(sigma)).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("oks with no mutually visible keypoints flags, returns 0") {
  Pose a = make_pose(0, 0);
  Pose b = make_pose(0, 0);
  for (int i = 0; i < kNumJoints; ++i) {
    a.keypoints[i].visible = (i % 2 == 0);
    b.keypoints[i].visible = (i % 2 == 1);
  }
  auto r = oks(a, b, default_sigmas());
  CHECK(r.no_mutual_visibility);
  CHECK(r.value == 0.0);
}

TEST_CASE("oks invariant under joint rigid translation") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-200, 200);
  for (int trial = 0; trial < 20; ++trial) {
    Pose ref = make_pose(300, 300);
    Pose cand = ref;
    for (auto& k : cand.keypoints) {
      k.x += u(rng) * 0.01;
      k.y += u(rng) * 0.01;
    }
    double base = oks(cand, ref, default_sigmas()).value;
    double dx = u(rng), dy = u(rng);
    Pose ref2 = ref, cand2 = cand;
    for (auto& k : ref2.keypoints) { k.x += dx; k.y += dy; }
    for (auto& k : cand2.keypoints) { k.x += dx; k.y += dy; }
    if (ref2.bbox) { ref2.bbox->x += dx; ref2.bbox->y += dy; }
    CHECK(oks(cand2, ref2, default_sigmas()).value == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("oks non-increasing as one keypoint moves away") {
  Pose ref = make_pose(100, 100);
  ref.bbox = BBox{90, 90, 60, 60};
  double prev = 1.0;
  for (double d = 0.0; d <= 40.0; d += 2.0) {
    Pose cand = ref;
    cand.keypoints[5].x += d;
    double v = oks(cand, ref, default_sigmas()).value;
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("dilate_box worked examples") {
  BBox a = dilate_box({0, 0, 10, 10}, 1.25);
  CHECK(a.x == doctest::Approx(-1.25));
  CHECK(a.y == doctest::Approx(-1.25));
  CHECK(a.w == doctest::Approx(12.5));
  CHECK(a.h == doctest::Approx(12.5));

  BBox b = dilate_box({4, 4, 2, 2}, 2.0);
  CHECK(b.x == doctest::Approx(3.0));
  CHECK(b.y == doctest::Approx(3.0));
  CHECK(b.w == doctest::Approx(4.0));
  CHECK(b.h == doctest::Approx(4.0));

  BBox c = dilate_box({7, 9, 3, 5}, 1.0);
  CHECK(c.x == doctest::Approx(7.0));
  CHECK(c.w == doctest::Approx(3.0));
}

TEST_CASE("dilate_box rejects shrink factors") {
  CHECK_THROWS(dilate_box({0, 0, 10, 10}, 0.9));
}

TEST_CASE("dilate_box composes multiplicatively") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    BBox box{u(rng) * 10, u(rng) * 10, u(rng) * 20, u(rng) * 20};
    double fa = u(rng), fb = u(rng);
    BBox two = dilate_box(dilate_box(box, fa), fb);
    BBox one = dilate_box(box, fa * fb);
    CHECK(two.x == doctest::Approx(one.x).epsilon(1e-9));
    CHECK(two.y == doctest::Approx(one.y).epsilon(1e-9));
    CHECK(two.w == doctest::Approx(one.w).epsilon(1e-9));
    CHECK(two.h == doctest::Approx(one.h).epsilon(1e-9));
  }
}

TEST_CASE("nearest_pose_indices sorts by center distance with index tie-break") {
  Pose q = make_pose(0, 0, 0.0);
  q.bbox = BBox{-1, -1, 2, 2};  // center (0,0)
  auto at = [](double cx) {
    Pose p = make_pose(0, 0, 0.0);
    p.bbox = BBox{cx - 1, -1, 2, 2};
    return p;
  };
  std::vector<Pose> pool{at(5), at(2), at(9)};
  auto idx = nearest_pose_indices(q, pool, 2);
  REQUIRE(idx.size() == 2);
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 0);

  std::vector<Pose> tie{at(4), at(-4)};
  auto t = nearest_pose_indices(q, tie, 2);
  CHECK(t[0] == 0);
  CHECK(t[1] == 1);

  CHECK(nearest_pose_indices(q, std::vector<Pose>{}, 3).empty());
  auto one = nearest_poses(q, std::vector<Pose>{at(7)}, 5);
  REQUIRE(one.size() == 1);
}

TEST_CASE("nearest output is a prefix of the fully sorted pool") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 500);
  Pose q = make_pose(250, 250);
  std::vector<Pose> pool;
  for (int i = 0; i < 12; ++i) pool.push_back(make_pose(u(rng), u(rng)));
  auto full = nearest_pose_indices(q, pool, 12);
  for (int n = 1; n <= 12; ++n) {
    auto part = nearest_pose_indices(q, pool, n);
    REQUIRE(static_cast<int>(part.size()) == n);
    for (int i = 0; i < n; ++i) CHECK(part[i] == full[i]);
  }
}

TEST_CASE("iou basics") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == doctest::Approx(1.0));
  CHECK(iou({0, 0, 10, 10}, {20, 20, 5, 5}) == doctest::Approx(0.0));
  CHECK(iou({0, 0, 10, 10}, {5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
}

TEST_CASE("clamp_to_frame stays inside bounds") {
  BBox b = clamp_to_frame({-5, -5, 30, 30}, 20, 15);
  CHECK(b.x >= 0);
  CHECK(b.y >= 0);
  CHECK(b.x + b.w <= 20);
  CHECK(b.y + b.h <= 15);
}

TEST_CASE("bbox_or_hull falls back to visible keypoint hull") {
  Pose p = make_pose(100, 200, 10.0);
  BBox h = p.bbox_or_hull();
  CHECK(h.x == doctest::Approx(100));
  CHECK(h.y == doctest::Approx(200));
  CHECK(h.w == doctest::Approx(30));
  p.bbox = BBox{1, 2, 3, 4};
  CHECK(p.bbox_or_hull().x == doctest::Approx(1));
}

TEST_CASE("joint order and sigma table have 15 entries") {
  CHECK(joint_names().size() == 15);
  CHECK(joint_names()[0] == "head_top");
  CHECK(joint_names()[14] == "right_ankle");
  for (double s : default_sigmas()) CHECK(s > 0);
}
