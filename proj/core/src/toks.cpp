#include "ptk/toks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptk {

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit(std::uint64_t& state) {
  return static_cast<double>(splitmix(state) >> 11) * (1.0 / 9007199254740992.0);
}

double gauss(std::uint64_t& state) {
  // Box-Muller
  const double u1 = std::max(unit(state), 1e-12);
  const double u2 = unit(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Confidence floors: invisible-ize weak keypoints; reject weak poses.
std::optional<Pose> apply_floors(Pose pose, const ToksConfig& cfg) {
  for (auto& kp : pose.keypoints) {
    if (kp.visible && kp.confidence < cfg.keypoint_conf_min) {
      kp.visible = false;
    }
  }
  if (pose.num_visible() == 0) return std::nullopt;
  if (pose.mean_confidence() < cfg.box_conf_min) return std::nullopt;
  return pose;
}

}  // namespace

void ToksConfig::validate() const {
  if (alpha < 1.0) throw std::invalid_argument("ToksConfig: alpha must be >= 1");
  for (double t : {oks_threshold, keypoint_conf_min, box_conf_min})
    if (t < 0.0 || t > 1.0)
      throw std::invalid_argument("ToksConfig: thresholds must lie in [0,1]");
}

OracleJitterEstimator::OracleJitterEstimator(const SequenceFile& ground_truth,
                                             double noise_sigma, double dropout_p,
                                             std::uint64_t seed)
    : gt_(ground_truth), sigma_(noise_sigma), dropout_p_(dropout_p),
      state_(seed ^ 0x6f7261636c65ULL) {}

std::optional<Pose> OracleJitterEstimator::estimate(const FrameRef& frame, const BBox& box) {
  if (frame.index < 0 || frame.index >= static_cast<int>(gt_.frames.size())) return std::nullopt;
  const Frame& gt_frame = gt_.frames[frame.index];
  // the GT person whose center lies in the box, nearest to the box center
  const Pose* best = nullptr;
  double best_dist = 0.0;
  for (const auto& p : gt_frame.poses) {
    const BBox hull = p.bbox_or_hull();
    const double cx = hull.cx(), cy = hull.cy();
    if (cx < box.x || cx > box.x + box.w || cy < box.y || cy > box.y + box.h) continue;
    const double d = std::hypot(cx - box.cx(), cy - box.cy());
    if (!best || d < best_dist) {
      best = &p;
      best_dist = d;
    }
  }
  if (!best) return std::nullopt;
  Pose out = *best;
  out.track_id.reset();
  for (auto& kp : out.keypoints) {
    if (!kp.visible) continue;
    if (dropout_p_ > 0 && unit(state_) < dropout_p_) {
      kp.visible = false;
      kp.confidence = 0.0;
      continue;
    }
    double conf = 1.0;
    if (sigma_ > 0) {
      const double dx = gauss(state_) * sigma_;
      const double dy = gauss(state_) * sigma_;
      kp.x += dx;
      kp.y += dy;
      const double r = std::hypot(dx, dy);
      conf = std::exp(-r * r / (2.0 * 9.0 * sigma_ * sigma_)) * (0.9 + 0.1 * unit(state_));
    }
    // estimator output is confined to the queried box
    kp.x = std::clamp(kp.x, box.x, box.x + box.w);
    kp.y = std::clamp(kp.y, box.y, box.y + box.h);
    kp.confidence = std::clamp(conf, 0.01, 1.0);
  }
  if (out.num_visible() == 0) return std::nullopt;
  out.bbox = out.bbox_or_hull();
  out.frame_index = frame.index;
  return out;
}

std::vector<Pose> toks_refine(std::span<const Pose> prev_frame_poses,
                              std::span<const Pose> current_detections, const FrameRef& frame,
                              PoseEstimator& estimator, const ToksConfig& config,
                              const Sigmas& sigmas, std::span<const Pose> next_frame_poses) {
  config.validate();
  std::vector<Pose> candidates;
  for (const auto& det : current_detections) {
    if (auto p = apply_floors(det, config)) candidates.push_back(std::move(*p));
  }
  auto propagate = [&](std::span<const Pose> source) {
    for (const auto& prev : source) {
      const BBox raw = prev.bbox_or_hull();
      if (!(raw.w > 0.0) || !(raw.h > 0.0)) continue;
      const BBox box = clamp_to_frame(dilate_box(raw, config.alpha), frame.width, frame.height);
      if (!(box.w > 0.0) || !(box.h > 0.0)) continue;
      std::optional<Pose> est;
      try {
        est = estimator.estimate(frame, box);
      } catch (const std::exception&) {
        continue;  // estimator failure skips this candidate
      }
      if (!est) continue;
      est->frame_index = frame.index;
      if (auto p = apply_floors(std::move(*est), config)) candidates.push_back(std::move(*p));
    }
  };
  propagate(prev_frame_poses);
  if (config.propagate_next_frame) propagate(next_frame_poses);

  // greedy highest-confidence-first suppression by pairwise OKS
  std::vector<int> order(candidates.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return candidates[a].mean_confidence() > candidates[b].mean_confidence();
  });
  std::vector<Pose> kept;
  for (int idx : order) {
    bool duplicate = false;
    for (const auto& k : kept) {
      if (oks(candidates[idx], k, sigmas).value >= config.oks_threshold) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(candidates[idx]);
  }
  return kept;
}

SequenceFile toks_refine_sequence(const SequenceFile& detected, PoseEstimator& estimator,
                                  const ToksConfig& config, const Sigmas& sigmas) {
  SequenceFile out = detected;
  std::vector<Pose> prev_refined;
  for (size_t t = 0; t < out.frames.size(); ++t) {
    const FrameRef ref{out.frames[t].index, detected.frame_width, detected.frame_height};
    std::span<const Pose> next{};
    if (config.propagate_next_frame && t + 1 < out.frames.size())
      next = detected.frames[t + 1].poses;
    out.frames[t].poses =
        toks_refine(prev_refined, detected.frames[t].poses, ref, estimator, config, sigmas, next);
    prev_refined = out.frames[t].poses;
  }
  return out;
}

}  // namespace ptk
