#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptk {

inline constexpr int kNumJoints = 15;

/// Canonical joint order. External files declare their own name->index map
/// and are remapped to this order on load.
const std::array<std::string, kNumJoints>& joint_names();

struct Keypoint {
  int type_id = 1;  // joint identity, 1..15
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  bool visible = true;
};

struct BBox {
  double x = 0.0;  // top-left
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
};

struct Pose {
  std::array<Keypoint, kNumJoints> keypoints{};  // keypoints[i].type_id == i+1
  std::optional<BBox> bbox;
  std::optional<int> track_id;
  int frame_index = 0;

  /// Declared bbox, or the tight hull of visible keypoints when absent.
  BBox bbox_or_hull() const;
  /// Mean confidence over visible keypoints; 0 if none visible.
  double mean_confidence() const;
  int num_visible() const;
};

struct Frame {
  int index = 0;
  int width = 0;
  int height = 0;
  std::vector<Pose> poses;
};

using Sigmas = std::array<double, kNumJoints>;

/// Per-joint OKS falloff constants (COCO-derived, head joints averaged).
const Sigmas& default_sigmas();

/// Reads 15 whitespace-separated positive reals in joint order.
Sigmas load_sigmas(const std::string& path);

struct OksResult {
  double value = 0.0;
  bool no_mutual_visibility = false;  // warning, not an error
};

/// Object keypoint similarity of `candidate` against `reference`.
/// Scale is the reference bbox area (keypoint hull when bbox is absent).
OksResult oks(const Pose& candidate, const Pose& reference, const Sigmas& sigmas);

/// Center-preserving dilation. factor < 1 is rejected. No frame clamping here.
BBox dilate_box(const BBox& box, double factor);

BBox clamp_to_frame(const BBox& box, int frame_w, int frame_h);

double iou(const BBox& a, const BBox& b);

/// Indices into `pool` of the <= n poses nearest to `query` by bbox-center
/// distance, ascending; ties broken by lower index.
std::vector<int> nearest_pose_indices(const Pose& query, std::span<const Pose> pool, int n);

std::vector<Pose> nearest_poses(const Pose& query, std::span<const Pose> pool, int n);

}  // namespace ptk
