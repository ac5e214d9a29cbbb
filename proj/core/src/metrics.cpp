#include "ptk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ptk {

namespace {

double head_size(const Pose& gt_pose) {
  const Keypoint& top = gt_pose.keypoints[0];     // head_top
  const Keypoint& bottom = gt_pose.keypoints[1];  // head_bottom
  if (top.visible && bottom.visible) {
    const double d = std::hypot(top.x - bottom.x, top.y - bottom.y);
    if (d > 1e-9) return d;
  }
  const BBox hull = gt_pose.bbox_or_hull();
  return std::max(1.0, 0.25 * std::hypot(hull.w, hull.h));
}

struct GtPoint {
  double x, y;
  int track_id;
  double gate;
};

struct PredPoint {
  double x, y;
  int track_id;  // -1 when absent
  double confidence;
};

/// Greedy nearest-distance one-to-one matching inside the gate.
/// Returns per-prediction matched GT index (-1 = unmatched).
std::vector<int> match_joint(const std::vector<GtPoint>& gts, const std::vector<PredPoint>& preds) {
  struct Edge {
    double dist;
    int gi, pi;
  };
  std::vector<Edge> edges;
  for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi)
    for (int pi = 0; pi < static_cast<int>(preds.size()); ++pi) {
      const double d = std::hypot(gts[gi].x - preds[pi].x, gts[gi].y - preds[pi].y);
      if (d <= gts[gi].gate) edges.push_back(Edge{d, gi, pi});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.gi != b.gi) return a.gi < b.gi;
    return a.pi < b.pi;
  });
  std::vector<int> pred_match(preds.size(), -1);
  std::vector<bool> gt_done(gts.size(), false);
  for (const auto& e : edges) {
    if (gt_done[e.gi] || pred_match[e.pi] >= 0) continue;
    gt_done[e.gi] = true;
    pred_match[e.pi] = e.gi;
  }
  return pred_match;
}

void check_streams(const std::vector<Frame>& predicted, const std::vector<Frame>& gt) {
  if (predicted.size() != gt.size())
    throw std::runtime_error("evaluate: prediction stream has " +
                             std::to_string(predicted.size()) + " frames, ground truth has " +
                             std::to_string(gt.size()));
  for (size_t t = 0; t < gt.size(); ++t) {
    if (predicted[t].index != gt[t].index)
      throw std::runtime_error("evaluate: frame index mismatch at position " + std::to_string(t) +
                               " (" + std::to_string(predicted[t].index) + " vs " +
                               std::to_string(gt[t].index) + ")");
  }
}

}  // namespace

double MotaReport::total_mota() const {
  double sum = 0.0;
  for (const auto& j : per_joint) sum += j.mota();
  return sum / kNumJoints;
}

double MotaReport::total_idsw_pct() const {
  long long idsw = 0, gt = 0;
  for (const auto& j : per_joint) {
    idsw += j.idsw;
    gt += j.gt;
  }
  return gt == 0 ? 0.0 : 100.0 * static_cast<double>(idsw) / static_cast<double>(gt);
}

JointCounts MotaReport::summed() const {
  JointCounts s;
  for (const auto& j : per_joint) {
    s.fn += j.fn;
    s.fp += j.fp;
    s.idsw += j.idsw;
    s.gt += j.gt;
  }
  return s;
}

MotaReport evaluate_mota(const std::vector<Frame>& predicted, const std::vector<Frame>& gt,
                         const EvalConfig& config) {
  check_streams(predicted, gt);
  MotaReport report;
  for (int joint = 0; joint < kNumJoints; ++joint) {
    JointCounts& c = report.per_joint[joint];
    std::map<int, int> last_pred_id;  // GT track -> most recently associated predicted id
    for (size_t t = 0; t < gt.size(); ++t) {
      std::vector<GtPoint> gts;
      for (const auto& p : gt[t].poses) {
        const Keypoint& kp = p.keypoints[joint];
        if (!kp.visible) continue;
        if (!p.track_id)
          throw std::runtime_error("evaluate_mota: ground-truth pose without track id at frame " +
                                   std::to_string(gt[t].index));
        gts.push_back(GtPoint{kp.x, kp.y, *p.track_id, config.pckh_factor * head_size(p)});
      }
      std::vector<PredPoint> preds;
      for (const auto& p : predicted[t].poses) {
        const Keypoint& kp = p.keypoints[joint];
        if (!kp.visible || kp.confidence < config.conf_threshold) continue;
        preds.push_back(PredPoint{kp.x, kp.y, p.track_id ? *p.track_id : -1, kp.confidence});
      }
      c.gt += static_cast<long long>(gts.size());
      const auto pred_match = match_joint(gts, preds);
      std::vector<bool> gt_matched(gts.size(), false);
      for (size_t pi = 0; pi < preds.size(); ++pi) {
        const int gi = pred_match[pi];
        if (gi < 0) {
          ++c.fp;
          continue;
        }
        gt_matched[gi] = true;
        const int gt_track = gts[gi].track_id;
        const auto it = last_pred_id.find(gt_track);
        if (it != last_pred_id.end() && it->second != preds[pi].track_id) ++c.idsw;
        last_pred_id[gt_track] = preds[pi].track_id;
      }
      for (bool m : gt_matched)
        if (!m) ++c.fn;
    }
  }
  return report;
}

ApReport evaluate_ap(const std::vector<Frame>& predicted, const std::vector<Frame>& gt,
                     const EvalConfig& config) {
  check_streams(predicted, gt);
  ApReport report;
  double total = 0.0;
  int joints_with_gt = 0;
  for (int joint = 0; joint < kNumJoints; ++joint) {
    struct Pred {
      double conf;
      size_t frame;
      double x, y;
    };
    std::vector<Pred> preds;
    long long num_gt = 0;
    std::vector<std::vector<GtPoint>> gts_per_frame(gt.size());
    for (size_t t = 0; t < gt.size(); ++t) {
      for (const auto& p : gt[t].poses) {
        const Keypoint& kp = p.keypoints[joint];
        if (!kp.visible) continue;
        gts_per_frame[t].push_back(
            GtPoint{kp.x, kp.y, p.track_id.value_or(-1), config.pckh_factor * head_size(p)});
        ++num_gt;
      }
      for (const auto& p : predicted[t].poses) {
        const Keypoint& kp = p.keypoints[joint];
        if (!kp.visible || kp.confidence < config.conf_threshold) continue;
        preds.push_back(Pred{kp.confidence, t, kp.x, kp.y});
      }
    }
    if (num_gt == 0) {
      report.per_joint[joint] = preds.empty() ? 1.0 : 0.0;
      continue;
    }
    ++joints_with_gt;
    std::stable_sort(preds.begin(), preds.end(),
                     [](const Pred& a, const Pred& b) { return a.conf > b.conf; });
    std::vector<std::vector<bool>> gt_used(gt.size());
    for (size_t t = 0; t < gt.size(); ++t) gt_used[t].assign(gts_per_frame[t].size(), false);
    std::vector<bool> is_tp(preds.size(), false);
    for (size_t i = 0; i < preds.size(); ++i) {
      const auto& pr = preds[i];
      int best = -1;
      double best_d = 0.0;
      const auto& gts = gts_per_frame[pr.frame];
      for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi) {
        if (gt_used[pr.frame][gi]) continue;
        const double d = std::hypot(gts[gi].x - pr.x, gts[gi].y - pr.y);
        if (d <= gts[gi].gate && (best < 0 || d < best_d)) {
          best = gi;
          best_d = d;
        }
      }
      if (best >= 0) {
        gt_used[pr.frame][best] = true;
        is_tp[i] = true;
      }
    }
    // precision envelope over the ranked list
    std::vector<double> precision, recall;
    long long tp = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
      if (is_tp[i]) ++tp;
      precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
    }
    for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
      precision[i] = std::max(precision[i], precision[i + 1]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t i = 0; i < precision.size(); ++i) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
    report.per_joint[joint] = ap;
    total += ap;
  }
  report.total = joints_with_gt ? total / joints_with_gt : 0.0;
  return report;
}

std::vector<SweepRow> sweep_confidence_threshold(const std::vector<Frame>& predicted,
                                                 const std::vector<Frame>& gt,
                                                 const std::vector<double>& thresholds,
                                                 const EvalConfig& base) {
  std::vector<SweepRow> rows;
  for (double th : thresholds) {
    EvalConfig cfg = base;
    cfg.conf_threshold = th;
    const auto mota = evaluate_mota(predicted, gt, cfg);
    const auto ap = evaluate_ap(predicted, gt, cfg);
    rows.push_back(SweepRow{th, ap.total, mota.total_idsw_pct(), mota.total_mota()});
  }
  return rows;
}

namespace {

// Joint groups in the conventional reporting order.
const std::vector<std::pair<std::string, std::vector<int>>>& report_groups() {
  static const std::vector<std::pair<std::string, std::vector<int>>> groups = {
      {"Head", {0, 1, 2}}, {"Shou", {3, 4}},  {"Elb", {5, 6}},   {"Wri", {7, 8}},
      {"Hip", {9, 10}},    {"Knee", {11, 12}}, {"Ankl", {13, 14}}};
  return groups;
}

JointCounts group_counts(const MotaReport& r, const std::vector<int>& joints) {
  JointCounts c;
  for (int j : joints) {
    c.fn += r.per_joint[j].fn;
    c.fp += r.per_joint[j].fp;
    c.idsw += r.per_joint[j].idsw;
    c.gt += r.per_joint[j].gt;
  }
  return c;
}

double group_ap(const ApReport& r, const std::vector<int>& joints) {
  double s = 0.0;
  for (int j : joints) s += r.per_joint[j];
  return s / joints.size();
}

}  // namespace

void write_mota_report_csv(const MotaReport& mota, const ApReport& ap, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_mota_report_csv: cannot open " + path);
  os << "group,ap,idsw_pct,mota,fn,fp,idsw,gt\n";
  for (const auto& [name, joints] : report_groups()) {
    const JointCounts c = group_counts(mota, joints);
    os << name << "," << group_ap(ap, joints) << "," << c.idsw_pct() << "," << c.mota() << ","
       << c.fn << "," << c.fp << "," << c.idsw << "," << c.gt << "\n";
  }
  const JointCounts s = mota.summed();
  os << "Total," << ap.total << "," << mota.total_idsw_pct() << "," << mota.total_mota() << ","
     << s.fn << "," << s.fp << "," << s.idsw << "," << s.gt << "\n";
}

std::string format_report(const MotaReport& mota, const ApReport& ap) {
  std::ostringstream os;
  os << "group   AP      %IDSW   MOTA\n";
  auto line = [&os](const std::string& name, double apv, double idsw, double motav) {
    os << name;
    for (size_t i = name.size(); i < 8; ++i) os << ' ';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-8.3f%-8.3f%-8.3f\n", apv, idsw, motav);
    os << buf;
  };
  for (const auto& [name, joints] : report_groups()) {
    const JointCounts c = group_counts(mota, joints);
    line(name, group_ap(ap, joints), c.idsw_pct(), c.mota());
  }
  line("Total", ap.total, mota.total_idsw_pct(), mota.total_mota());
  return os.str();
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_sweep_csv: cannot open " + path);
  os << "threshold,ap,idsw_pct,mota\n";
  for (const auto& r : rows)
    os << r.threshold << "," << r.ap << "," << r.idsw_pct << "," << r.mota << "\n";
}

}  // namespace ptk
