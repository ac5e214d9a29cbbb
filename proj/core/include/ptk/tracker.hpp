#pragma once

#include <deque>
#include <string>
#include <vector>

#include "ptk/dataio.hpp"
#include "ptk/matcher.hpp"
#include "ptk/tokenizer.hpp"
#include "ptk/toks.hpp"

namespace ptk {

struct TrackerConfig {
  int delta = 4;       // lookback window, frames
  int n_nearest = 6;   // spatial candidate filter per past frame
  enum class Assignment { kGreedy, kHungarian };
  Assignment assignment = Assignment::kGreedy;
  double min_match_score = 0.5;  // below this a pose spawns a fresh track
  TokenGrid grid;
  bool relative_tokens = false;

  void validate() const;
};

/// Ring buffer of the last delta frames' identified poses plus the id counter.
class TrackState {
 public:
  explicit TrackState(int delta) : delta_(delta) {}

  void push_frame(std::vector<Pose> assigned_poses);
  /// history()[0] is one frame back, history()[1] two back, ...
  const std::deque<std::vector<Pose>>& history() const { return frames_; }
  int fresh_id() { return next_id_++; }
  int next_id() const { return next_id_; }

 private:
  int delta_;
  int next_id_ = 0;
  std::deque<std::vector<Pose>> frames_;  // most recent first
};

struct Candidate {
  int track_id = 0;
  double score = 0.0;
  int gap = 0;
};

/// Scores `pose` against up to n_nearest identified poses at each lookback
/// gap. Sorted by score descending, ties by smaller gap then smaller id.
std::vector<Candidate> score_candidates(const Pose& pose, const TrackState& state,
                                        const ModelParams& params,
                                        const MatcherConfig& model_config,
                                        const TrackerConfig& config, int frame_w, int frame_h);

struct Assignment {
  int pose_index = 0;
  int track_id = 0;
  double best_score = 0.0;  // 0 when no candidates existed
  int gap_used = 0;         // 0 when spawned
  bool spawned = false;
};

/// Assigns a track id to every pose of one frame and advances the state.
std::vector<Assignment> assign_frame(const std::vector<Pose>& poses, TrackState& state,
                                     const ModelParams& params,
                                     const MatcherConfig& model_config,
                                     const TrackerConfig& config, int frame_w, int frame_h);

struct AssignmentLogRow {
  int frame = 0;
  int pose_index = 0;
  int track_id = 0;
  double best_score = 0.0;
  int gap_used = 0;
  bool spawned = false;
};

struct TrackResult {
  SequenceFile tracked;
  std::vector<AssignmentLogRow> log;
};

/// Online tracking over a detected sequence. When `estimator` is non-null the
/// detections are first TOKS-refined frame by frame.
TrackResult track_video(const SequenceFile& detected, const ModelParams& params,
                        const MatcherConfig& model_config, const TrackerConfig& config,
                        PoseEstimator* estimator = nullptr, const ToksConfig* toks_config = nullptr,
                        const Sigmas& sigmas = default_sigmas());

void write_assignment_log_csv(const std::vector<AssignmentLogRow>& log, const std::string& path);

/// Spatial-consistency reference tracker: greedy bbox-IoU association against
/// the previous frame only.
SequenceFile track_video_iou_baseline(const SequenceFile& detected, double iou_min = 0.1);

}  // namespace ptk
