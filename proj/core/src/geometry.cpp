#include "ptk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ptk {

const std::array<std::string, kNumJoints>& joint_names() {
  static const std::array<std::string, kNumJoints> names = {
      "head_top",    "head_bottom", "nose",       "left_shoulder", "right_shoulder",
      "left_elbow",  "right_elbow", "left_wrist", "right_wrist",   "left_hip",
      "right_hip",   "left_knee",   "right_knee", "left_ankle",    "right_ankle"};
  return names;
}

const Sigmas& default_sigmas() {
  // COCO constants mapped onto the 15-joint skeleton; the three head joints
  // use the nose/eye values averaged.
  static const Sigmas s = {0.026, 0.026, 0.026, 0.079, 0.079, 0.072, 0.072, 0.062,
                           0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089};
  return s;
}

Sigmas load_sigmas(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("sigma table: cannot open " + path);
  Sigmas s{};
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(in >> s[i])) {
      throw std::runtime_error("sigma table: expected 15 reals in " + path + ", got " +
                               std::to_string(i));
    }
    if (!(s[i] > 0.0)) {
      throw std::runtime_error("sigma table: entry " + std::to_string(i + 1) +
                               " must be positive in " + path);
    }
  }
  return s;
}

BBox Pose::bbox_or_hull() const {
  if (bbox) return *bbox;
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& kp : keypoints) {
    if (!kp.visible) continue;
    any = true;
    xmin = std::min(xmin, kp.x);
    ymin = std::min(ymin, kp.y);
    xmax = std::max(xmax, kp.x);
    ymax = std::max(ymax, kp.y);
  }
  if (!any) return BBox{};
  return BBox{xmin, ymin, xmax - xmin, ymax - ymin};
}

double Pose::mean_confidence() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& kp : keypoints) {
    if (kp.visible) {
      sum += kp.confidence;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

int Pose::num_visible() const {
  int n = 0;
  for (const auto& kp : keypoints)
    if (kp.visible) ++n;
  return n;
}

OksResult oks(const Pose& candidate, const Pose& reference, const Sigmas& sigmas) {
  const BBox ref_box = reference.bbox_or_hull();
  double scale_sq = ref_box.area();
  if (scale_sq <= 0.0) scale_sq = 1.0;  // degenerate reference, fall back to pixels
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < kNumJoints; ++i) {
    const Keypoint& a = candidate.keypoints[i];
    const Keypoint& b = reference.keypoints[i];
    if (!a.visible || !b.visible) continue;
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double d_sq = dx * dx + dy * dy;
    sum += std::exp(-d_sq / (2.0 * scale_sq * sigmas[i] * sigmas[i]));
    ++n;
  }
  if (n == 0) return {0.0, true};
  return {sum / n, false};
}

BBox dilate_box(const BBox& box, double factor) {
  if (factor < 1.0) throw std::invalid_argument("dilate_box: factor must be >= 1");
  if (!(box.w > 0.0) || !(box.h > 0.0))
    throw std::invalid_argument("dilate_box: box dimensions must be positive");
  const double nw = box.w * factor;
  const double nh = box.h * factor;
  return BBox{box.cx() - 0.5 * nw, box.cy() - 0.5 * nh, nw, nh};
}

BBox clamp_to_frame(const BBox& box, int frame_w, int frame_h) {
  const double x0 = std::clamp(box.x, 0.0, static_cast<double>(frame_w));
  const double y0 = std::clamp(box.y, 0.0, static_cast<double>(frame_h));
  const double x1 = std::clamp(box.x + box.w, 0.0, static_cast<double>(frame_w));
  const double y1 = std::clamp(box.y + box.h, 0.0, static_cast<double>(frame_h));
  return BBox{x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
}

double iou(const BBox& a, const BBox& b) {
  const double x0 = std::max(a.x, b.x);
  const double y0 = std::max(a.y, b.y);
  const double x1 = std::min(a.x + a.w, b.x + b.w);
  const double y1 = std::min(a.y + a.h, b.y + b.h);
  const double inter = std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
  const double uni = a.area() + b.area() - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

std::vector<int> nearest_pose_indices(const Pose& query, std::span<const Pose> pool, int n) {
  if (n < 1) throw std::invalid_argument("nearest_poses: n must be >= 1");
  const BBox qb = query.bbox_or_hull();
  std::vector<std::pair<double, int>> by_dist;
  by_dist.reserve(pool.size());
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
    const BBox pb = pool[i].bbox_or_hull();
    const double dx = qb.cx() - pb.cx();
    const double dy = qb.cy() - pb.cy();
    by_dist.emplace_back(dx * dx + dy * dy, i);
  }
  std::stable_sort(by_dist.begin(), by_dist.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<int> out;
  out.reserve(std::min<size_t>(n, by_dist.size()));
  for (int i = 0; i < static_cast<int>(by_dist.size()) && i < n; ++i)
    out.push_back(by_dist[i].second);
  return out;
}

std::vector<Pose> nearest_poses(const Pose& query, std::span<const Pose> pool, int n) {
  std::vector<Pose> out;
  for (int idx : nearest_pose_indices(query, pool, n)) out.push_back(pool[idx]);
  return out;
}

}  // namespace ptk
