#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ptk/dataio.hpp"
#include "ptk/geometry.hpp"

namespace ptk {

struct ToksConfig {
  double alpha = 1.25;            // box dilation factor
  double oks_threshold = 0.35;    // duplicate-merge threshold
  double keypoint_conf_min = 0.1;
  double box_conf_min = 0.2;      // on mean visible-keypoint confidence
  bool propagate_next_frame = false;  // offline mode: also use t+1 boxes

  void validate() const;
};

struct FrameRef {
  int index = 0;
  int width = 0;
  int height = 0;
};

/// Estimator plug-in boundary: one call taking a frame reference and a box,
/// returning a 15-keypoint pose (or nothing when no person is found).
class PoseEstimator {
 public:
  virtual ~PoseEstimator() = default;
  virtual std::optional<Pose> estimate(const FrameRef& frame, const BBox& box) = 0;
};

/// Synthetic stand-in estimator: ground truth + Gaussian noise + per-keypoint
/// dropout, restricted to the queried box.
class OracleJitterEstimator : public PoseEstimator {
 public:
  OracleJitterEstimator(const SequenceFile& ground_truth, double noise_sigma,
                        double dropout_p, std::uint64_t seed = 0);
  std::optional<Pose> estimate(const FrameRef& frame, const BBox& box) override;

 private:
  const SequenceFile& gt_;
  double sigma_;
  double dropout_p_;
  std::uint64_t state_;
};

/// One step of temporal OKS refinement for the frame at `frame.index`:
/// previous-frame boxes are dilated and re-estimated, candidates are
/// confidence-thresholded and OKS-deduplicated keeping the higher mean
/// keypoint confidence. Estimator failures skip that candidate.
std::vector<Pose> toks_refine(std::span<const Pose> prev_frame_poses,
                              std::span<const Pose> current_detections, const FrameRef& frame,
                              PoseEstimator& estimator, const ToksConfig& config,
                              const Sigmas& sigmas = default_sigmas(),
                              std::span<const Pose> next_frame_poses = {});

/// Applies toks_refine over a whole detected sequence (online, t-1 only,
/// unless config.propagate_next_frame).
SequenceFile toks_refine_sequence(const SequenceFile& detected, PoseEstimator& estimator,
                                  const ToksConfig& config,
                                  const Sigmas& sigmas = default_sigmas());

}  // namespace ptk
