#pragma once

#include <array>
#include <string>
#include <vector>

#include "ptk/dataio.hpp"
#include "ptk/geometry.hpp"

namespace ptk {

struct EvalConfig {
  /// PCKh-style distance gate: match if dist <= pckh_factor * GT head size.
  double pckh_factor = 0.5;
  /// Keypoints below this confidence are dropped before evaluation.
  double conf_threshold = 0.0;
};

struct JointCounts {
  long long fn = 0;
  long long fp = 0;
  long long idsw = 0;
  long long gt = 0;

  double mota() const {
    return gt == 0 ? 1.0 : 1.0 - static_cast<double>(fn + fp + idsw) / static_cast<double>(gt);
  }
  double idsw_pct() const {
    return gt == 0 ? 0.0 : 100.0 * static_cast<double>(idsw) / static_cast<double>(gt);
  }
};

struct MotaReport {
  std::array<JointCounts, kNumJoints> per_joint{};

  /// Mean of the per-joint MOTA scores.
  double total_mota() const;
  /// Sum of switches over sum of GT, in percent.
  double total_idsw_pct() const;
  JointCounts summed() const;
};

/// Per-joint multi-object tracking accuracy against track-annotated ground
/// truth. Both streams must cover the same frame indices.
MotaReport evaluate_mota(const std::vector<Frame>& predicted, const std::vector<Frame>& gt,
                         const EvalConfig& config = {});

struct ApReport {
  std::array<double, kNumJoints> per_joint{};
  double total = 0.0;  // mean over joints
};

/// Confidence-ranked keypoint AP within the PCKh gate.
ApReport evaluate_ap(const std::vector<Frame>& predicted, const std::vector<Frame>& gt,
                     const EvalConfig& config = {});

struct SweepRow {
  double threshold = 0.0;
  double ap = 0.0;
  double idsw_pct = 0.0;
  double mota = 0.0;
};

std::vector<SweepRow> sweep_confidence_threshold(const std::vector<Frame>& predicted,
                                                 const std::vector<Frame>& gt,
                                                 const std::vector<double>& thresholds,
                                                 const EvalConfig& base = {});

/// CSV + text summary in the conventional grouped column order
/// (Head, Shou, Elb, Wri, Hip, Knee, Ankl, Total).
void write_mota_report_csv(const MotaReport& mota, const ApReport& ap, const std::string& path);
std::string format_report(const MotaReport& mota, const ApReport& ap);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace ptk
