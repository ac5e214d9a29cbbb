#include <algorithm>
#include <cmath>
#include <random>

#include "ptk/dataio.hpp"

namespace ptk {

namespace {

// Articulated stick figure in person-local coordinates (y grows downward,
// hip center at the origin). Scaled by per-person height factor.
struct Figure {
  double scale = 1.0;
  double phase = 0.0;
  double omega = 0.35;  // articulation angular speed, rad/frame
  double swing = 1.0;   // limb swing amplitude multiplier
  double facing = 1.0;  // -1 mirrors the figure left-right

  std::array<Keypoint, kNumJoints> keypoints(double cx, double cy, int t) const {
    const double arm = 12.0 * swing * std::sin(omega * t + phase);
    const double leg = 16.0 * swing * std::sin(omega * t + phase);
    // canonical joint order: head_top, head_bottom, nose, l/r shoulder,
    // l/r elbow, l/r wrist, l/r hip, l/r knee, l/r ankle
    const double local[kNumJoints][2] = {
        {0.0, -95.0},          {0.0, -76.0},          {5.0, -82.0},
        {-18.0, -64.0},        {18.0, -64.0},         {-24.0 + 0.5 * arm, -40.0},
        {24.0 - 0.5 * arm, -40.0}, {-28.0 + arm, -18.0}, {28.0 - arm, -18.0},
        {-12.0, 0.0},          {12.0, 0.0},           {-11.0 + 0.5 * leg, 34.0},
        {11.0 - 0.5 * leg, 34.0},  {-12.0 + leg, 70.0},  {12.0 - leg, 70.0}};
    std::array<Keypoint, kNumJoints> out;
    for (int i = 0; i < kNumJoints; ++i) {
      out[i].type_id = i + 1;
      out[i].x = cx + scale * facing * local[i][0];
      out[i].y = cy + scale * local[i][1];
      out[i].confidence = 1.0;
      out[i].visible = true;
    }
    return out;
  }
};

BBox hull_box(const std::array<Keypoint, kNumJoints>& kps, int fw, int fh) {
  double xmin = kps[0].x, xmax = kps[0].x, ymin = kps[0].y, ymax = kps[0].y;
  for (const auto& kp : kps) {
    xmin = std::min(xmin, kp.x);
    xmax = std::max(xmax, kp.x);
    ymin = std::min(ymin, kp.y);
    ymax = std::max(ymax, kp.y);
  }
  const double pad_x = 0.1 * (xmax - xmin);
  const double pad_y = 0.1 * (ymax - ymin);
  return clamp_to_frame(BBox{xmin - pad_x, ymin - pad_y, (xmax - xmin) + 2 * pad_x,
                             (ymax - ymin) + 2 * pad_y},
                        fw, fh);
}

}  // namespace

SynthResult generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double margin_x = 60.0;
  const double margin_y = 110.0;

  struct Person {
    double x0, y0, vx, vy;
    int tshift = 0;  // evaluated at t + tshift on its trajectory
    Figure fig;
    int occl_start = -1, occl_len = 0;
  };
  std::vector<Person> persons(cfg.num_persons);

  if (cfg.uniform_motion) {
    // Persons [0, f) follow one shared trajectory, each shifted by `lag`
    // frames: person p is an exact time-shifted copy of the leader, so
    // appearance alone cannot reveal the temporal gap between two poses.
    // Persons [f, n) are mirror twins of persons [0, n-f), marching in the
    // same spot mirrored left-right. A twin occupies the same grid cells as
    // its source (the limb layout is antisymmetric), so telling the two
    // apart takes joint identity, not cell overlap; with cell-scale limb
    // swings that makes the Type channel load-bearing.
    const int lag = 2;
    const double speed = cfg.speed_max;
    const double y = cfg.frame_height / 2.0 + 40.0 * (unit(rng) - 0.5);
    const int f = (cfg.num_persons + 2) / 2;  // n < 3 gets no twins
    for (int p = 0; p < cfg.num_persons; ++p) {
      persons[p].x0 = margin_x;
      persons[p].y0 = y;
      persons[p].vx = speed;
      persons[p].vy = 0.0;
      persons[p].fig.scale = 1.0;
      persons[p].fig.swing = cfg.swing_scale;
      if (p < f) {
        persons[p].tshift = lag * (f - 1 - p);  // person 0 trails
      } else {
        persons[p].tshift = persons[p - f].tshift;
        persons[p].fig.facing = -1.0;
      }
      persons[p].fig.phase = persons[p].fig.omega * persons[p].tshift;
    }
  } else {
    for (int p = 0; p < cfg.num_persons; ++p) {
      persons[p].x0 = margin_x + unit(rng) * (cfg.frame_width - 2 * margin_x);
      persons[p].y0 = margin_y + unit(rng) * (cfg.frame_height - 2 * margin_y);
      const double speed = cfg.speed_min + (cfg.speed_max - cfg.speed_min) * unit(rng);
      const double dir = 2.0 * M_PI * unit(rng);
      persons[p].vx = speed * std::cos(dir);
      persons[p].vy = speed * std::sin(dir);
      persons[p].fig.scale = 0.9 + 0.2 * unit(rng);
      persons[p].fig.swing = cfg.swing_scale;
      persons[p].fig.phase = 2.0 * M_PI * unit(rng);
    }
  }

  for (int e = 0; e < cfg.occlusion_count; ++e) {
    const int p = static_cast<int>(unit(rng) * cfg.num_persons) % cfg.num_persons;
    const int latest = cfg.num_frames - cfg.occlusion_len - 1;
    if (latest < 1) break;
    persons[p].occl_start = 1 + static_cast<int>(unit(rng) * latest) % latest;
    persons[p].occl_len = cfg.occlusion_len;
  }

  auto center_at = [&](const Person& per, int t, double* cx, double* cy) {
    // reflect off frame margins so persons stay in frame
    auto bounce = [](double start, double v, int t, double lo, double hi) {
      const double range = hi - lo;
      double u = start - lo + v * t;
      u = std::fmod(u, 2.0 * range);
      if (u < 0) u += 2.0 * range;
      return lo + (u <= range ? u : 2.0 * range - u);
    };
    *cx = bounce(per.x0, per.vx, t + per.tshift, margin_x, cfg.frame_width - margin_x);
    *cy = bounce(per.y0, per.vy, t + per.tshift, margin_y, cfg.frame_height - margin_y);
  };

  SynthResult out;
  out.ground_truth.video_id = cfg.video_id;
  out.ground_truth.frame_width = cfg.frame_width;
  out.ground_truth.frame_height = cfg.frame_height;
  out.detected = out.ground_truth;

  for (int t = 0; t < cfg.num_frames; ++t) {
    Frame gt_frame{t, cfg.frame_width, cfg.frame_height, {}};
    Frame det_frame = gt_frame;
    for (int p = 0; p < cfg.num_persons; ++p) {
      const Person& per = persons[p];
      if (per.occl_start >= 0 && t >= per.occl_start && t < per.occl_start + per.occl_len)
        continue;  // hidden: absent from GT and detections
      double cx, cy;
      center_at(per, t, &cx, &cy);
      Pose gt;
      gt.frame_index = t;
      gt.track_id = p;
      gt.keypoints = per.fig.keypoints(cx, cy, t);
      gt.bbox = hull_box(gt.keypoints, cfg.frame_width, cfg.frame_height);
      gt_frame.poses.push_back(gt);

      auto emit_detection = [&](double sigma_mult, double conf_scale) {
        Pose det = gt;
        det.track_id.reset();
        for (auto& kp : det.keypoints) {
          if (cfg.keypoint_dropout_p > 0 && unit(rng) < cfg.keypoint_dropout_p) {
            kp.visible = false;
            kp.confidence = 0.0;
            continue;
          }
          double conf = 1.0;
          if (cfg.jitter_sigma > 0) {
            const double dx = gauss(rng) * cfg.jitter_sigma * sigma_mult;
            const double dy = gauss(rng) * cfg.jitter_sigma * sigma_mult;
            kp.x = std::clamp(kp.x + dx, 0.0, static_cast<double>(cfg.frame_width));
            kp.y = std::clamp(kp.y + dy, 0.0, static_cast<double>(cfg.frame_height));
            const double r = std::hypot(dx, dy);
            conf = std::exp(-r * r / (2.0 * 9.0 * cfg.jitter_sigma * cfg.jitter_sigma)) *
                   (0.9 + 0.1 * unit(rng));
          }
          kp.confidence = std::clamp(conf * conf_scale, 0.01, 1.0);
        }
        det.bbox = hull_box(det.keypoints, cfg.frame_width, cfg.frame_height);
        det_frame.poses.push_back(det);
      };

      if (!(cfg.missed_pose_p > 0 && unit(rng) < cfg.missed_pose_p)) emit_detection(1.0, 1.0);
      if (cfg.duplicate_pose_p > 0 && unit(rng) < cfg.duplicate_pose_p) emit_detection(2.0, 0.7);
    }
    // shuffle detection order so downstream code cannot rely on person index
    for (size_t i = det_frame.poses.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(unit(rng) * i) % i;
      std::swap(det_frame.poses[i - 1], det_frame.poses[j]);
    }
    out.ground_truth.frames.push_back(std::move(gt_frame));
    out.detected.frames.push_back(std::move(det_frame));
  }
  return out;
}

}  // namespace ptk
