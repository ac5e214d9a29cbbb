#include "ptk/tracker.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "ptk/hungarian.hpp"

namespace ptk {

void TrackerConfig::validate() const {
  if (delta < 1) throw std::invalid_argument("TrackerConfig: delta must be >= 1");
  if (n_nearest < 1) throw std::invalid_argument("TrackerConfig: n_nearest must be >= 1");
  if (min_match_score < 0.0 || min_match_score > 1.0)
    throw std::invalid_argument("TrackerConfig: min_match_score must lie in [0,1]");
}

void TrackState::push_frame(std::vector<Pose> assigned_poses) {
  frames_.push_front(std::move(assigned_poses));
  while (static_cast<int>(frames_.size()) > delta_) frames_.pop_back();
}

namespace {

struct PairRequest {
  int pose_index;  // query pose in the current frame
  int track_id;
  int gap;
  TokenizedPair tokens;
};

std::vector<PairRequest> gather_requests(const std::vector<Pose>& poses, const TrackState& state,
                                         const TrackerConfig& config, int frame_w, int frame_h) {
  std::vector<PairRequest> reqs;
  for (int pi = 0; pi < static_cast<int>(poses.size()); ++pi) {
    const Pose& pose = poses[pi];
    int gap = 0;
    for (const auto& past_frame : state.history()) {
      ++gap;
      if (gap > config.delta) break;
      if (past_frame.empty()) continue;
      const auto nearest = nearest_pose_indices(pose, past_frame, config.n_nearest);
      for (int ni : nearest) {
        const Pose& cand = past_frame[ni];
        if (!cand.track_id) continue;
        PairRequest r;
        r.pose_index = pi;
        r.track_id = *cand.track_id;
        r.gap = gap;
        r.tokens = config.relative_tokens
                       ? tokenize_pair_relative(pose, cand, gap, config.delta, frame_w, frame_h,
                                                config.grid)
                       : tokenize_pair(pose, cand, gap, config.delta, frame_w, frame_h,
                                       config.grid);
        reqs.push_back(std::move(r));
      }
    }
  }
  return reqs;
}

std::vector<double> score_requests(const std::vector<PairRequest>& reqs,
                                   const ModelParams& params, const MatcherConfig& mc) {
  std::vector<double> scores(reqs.size(), 0.0);
  const size_t chunk = 256;
  for (size_t start = 0; start < reqs.size(); start += chunk) {
    const size_t end = std::min(reqs.size(), start + chunk);
    std::vector<TokenizedPair> batch;
    batch.reserve(end - start);
    for (size_t i = start; i < end; ++i) batch.push_back(reqs[i].tokens);
    const auto s = match_scores(params, mc, batch);
    std::copy(s.begin(), s.end(), scores.begin() + start);
  }
  return scores;
}

void sort_candidates(std::vector<Candidate>& out) {
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.gap != b.gap) return a.gap < b.gap;
    return a.track_id < b.track_id;
  });
}

}  // namespace

std::vector<Candidate> score_candidates(const Pose& pose, const TrackState& state,
                                        const ModelParams& params, const MatcherConfig& mc,
                                        const TrackerConfig& config, int frame_w, int frame_h) {
  config.validate();
  const std::vector<Pose> single{pose};
  auto reqs = gather_requests(single, state, config, frame_w, frame_h);
  const auto scores = score_requests(reqs, params, mc);
  std::vector<Candidate> out;
  out.reserve(reqs.size());
  for (size_t i = 0; i < reqs.size(); ++i)
    out.push_back(Candidate{reqs[i].track_id, scores[i], reqs[i].gap});
  sort_candidates(out);
  return out;
}

std::vector<Assignment> assign_frame(const std::vector<Pose>& poses, TrackState& state,
                                     const ModelParams& params, const MatcherConfig& mc,
                                     const TrackerConfig& config, int frame_w, int frame_h) {
  config.validate();
  const auto reqs = gather_requests(poses, state, config, frame_w, frame_h);
  const auto scores = score_requests(reqs, params, mc);

  // per (pose, track): the maximum score over gaps, smaller gap on ties
  struct Best {
    double score = -1.0;
    int gap = 0;
  };
  std::vector<std::map<int, Best>> best_per_pose(poses.size());
  for (size_t i = 0; i < reqs.size(); ++i) {
    auto& b = best_per_pose[reqs[i].pose_index][reqs[i].track_id];
    if (scores[i] > b.score || (scores[i] == b.score && reqs[i].gap < b.gap)) {
      b.score = scores[i];
      b.gap = reqs[i].gap;
    }
  }

  std::vector<Assignment> result(poses.size());
  std::vector<bool> pose_done(poses.size(), false);
  std::vector<int> pose_track(poses.size(), -1);

  if (config.assignment == TrackerConfig::Assignment::kGreedy) {
    struct Entry {
      double score;
      int gap;
      int track;
      int pose;
    };
    std::vector<Entry> entries;
    for (size_t pi = 0; pi < poses.size(); ++pi)
      for (const auto& [track, b] : best_per_pose[pi])
        entries.push_back(Entry{b.score, b.gap, track, static_cast<int>(pi)});
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.gap != b.gap) return a.gap < b.gap;
      if (a.track != b.track) return a.track < b.track;
      return a.pose < b.pose;
    });
    std::map<int, bool> track_taken;
    for (const auto& e : entries) {
      if (pose_done[e.pose] || track_taken[e.track]) continue;
      if (e.score < config.min_match_score) break;  // sorted: nothing later qualifies
      pose_done[e.pose] = true;
      track_taken[e.track] = true;
      pose_track[e.pose] = e.track;
      result[e.pose] = Assignment{e.pose, e.track, e.score, e.gap, false};
    }
  } else {
    // Hungarian over poses x candidate tracks on best-score-per-track
    std::vector<int> tracks;
    for (const auto& m : best_per_pose)
      for (const auto& [track, b] : m)
        if (std::find(tracks.begin(), tracks.end(), track) == tracks.end())
          tracks.push_back(track);
    std::sort(tracks.begin(), tracks.end());
    if (!tracks.empty()) {
      const double kNoEdge = -1e6;
      std::vector<std::vector<double>> matrix(poses.size(),
                                              std::vector<double>(tracks.size(), kNoEdge));
      for (size_t pi = 0; pi < poses.size(); ++pi)
        for (const auto& [track, b] : best_per_pose[pi]) {
          const auto ti = std::lower_bound(tracks.begin(), tracks.end(), track) - tracks.begin();
          matrix[pi][ti] = b.score;
        }
      const auto assignment = hungarian_max(matrix);
      for (size_t pi = 0; pi < poses.size(); ++pi) {
        const int ti = assignment[pi];
        if (ti < 0 || matrix[pi][ti] <= kNoEdge) continue;
        if (matrix[pi][ti] < config.min_match_score) continue;  // spawn instead
        const int track = tracks[ti];
        pose_done[pi] = true;
        pose_track[pi] = track;
        result[pi] = Assignment{static_cast<int>(pi), track, matrix[pi][ti],
                                best_per_pose[pi][track].gap, false};
      }
    }
  }

  for (size_t pi = 0; pi < poses.size(); ++pi) {
    if (pose_done[pi]) continue;
    double best = 0.0;
    for (const auto& [track, b] : best_per_pose[pi]) best = std::max(best, b.score);
    const int id = state.fresh_id();
    pose_track[pi] = id;
    result[pi] = Assignment{static_cast<int>(pi), id, best, 0, true};
  }

  std::vector<Pose> assigned = poses;
  for (size_t pi = 0; pi < poses.size(); ++pi) assigned[pi].track_id = pose_track[pi];
  state.push_frame(std::move(assigned));
  return result;
}

TrackResult track_video(const SequenceFile& detected, const ModelParams& params,
                        const MatcherConfig& mc, const TrackerConfig& config,
                        PoseEstimator* estimator, const ToksConfig* toks_config,
                        const Sigmas& sigmas) {
  config.validate();
  TrackResult out;
  out.tracked = detected;
  TrackState state(config.delta);
  // first pass claims ids 0..n-1 on frame 0 in pose order
  std::vector<Pose> prev_refined;
  for (size_t t = 0; t < detected.frames.size(); ++t) {
    std::vector<Pose> poses = detected.frames[t].poses;
    if (estimator && toks_config) {
      const FrameRef ref{detected.frames[t].index, detected.frame_width, detected.frame_height};
      poses = toks_refine(prev_refined, poses, ref, *estimator, *toks_config, sigmas);
      prev_refined = poses;
    }
    const auto assignments =
        assign_frame(poses, state, params, mc, config, detected.frame_width,
                     detected.frame_height);
    for (const auto& a : assignments) {
      poses[a.pose_index].track_id = a.track_id;
      out.log.push_back(AssignmentLogRow{detected.frames[t].index, a.pose_index, a.track_id,
                                         a.best_score, a.gap_used, a.spawned});
    }
    out.tracked.frames[t].poses = poses;
  }
  return out;
}

void write_assignment_log_csv(const std::vector<AssignmentLogRow>& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_assignment_log_csv: cannot open " + path);
  os << "frame,pose_index,track_id,best_score,gap_used,spawned\n";
  for (const auto& r : log) {
    os << r.frame << "," << r.pose_index << "," << r.track_id << "," << r.best_score << ","
       << r.gap_used << "," << (r.spawned ? 1 : 0) << "\n";
  }
}

SequenceFile track_video_iou_baseline(const SequenceFile& detected, double iou_min) {
  SequenceFile out = detected;
  int next_id = 0;
  std::vector<Pose> prev;
  for (auto& frame : out.frames) {
    struct Entry {
      double overlap;
      int prev_idx;
      int cur_idx;
    };
    std::vector<Entry> entries;
    for (int ci = 0; ci < static_cast<int>(frame.poses.size()); ++ci)
      for (int pi = 0; pi < static_cast<int>(prev.size()); ++pi) {
        const double ov = iou(frame.poses[ci].bbox_or_hull(), prev[pi].bbox_or_hull());
        if (ov >= iou_min) entries.push_back(Entry{ov, pi, ci});
      }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.overlap > b.overlap; });
    std::vector<bool> cur_done(frame.poses.size(), false), prev_done(prev.size(), false);
    for (auto& p : frame.poses) p.track_id.reset();
    for (const auto& e : entries) {
      if (cur_done[e.cur_idx] || prev_done[e.prev_idx]) continue;
      cur_done[e.cur_idx] = true;
      prev_done[e.prev_idx] = true;
      frame.poses[e.cur_idx].track_id = prev[e.prev_idx].track_id;
    }
    for (auto& p : frame.poses)
      if (!p.track_id) p.track_id = next_id++;
    prev = frame.poses;
  }
  return out;
}

}  // namespace ptk
