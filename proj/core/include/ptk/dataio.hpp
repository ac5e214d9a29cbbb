#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptk/geometry.hpp"

namespace ptk {

/// A whole keypoint stream for one video. On disk this is a JSON document
/// with an explicit schema version and a joint-name -> index map; files may
/// declare joints in any order and are remapped to the canonical order on load.
struct SequenceFile {
  int schema_version = 1;
  std::string video_id;
  int frame_width = 0;
  int frame_height = 0;
  std::vector<Frame> frames;
};

SequenceFile load_sequence(const std::string& path);
void save_sequence(const SequenceFile& seq, const std::string& path);

/// Converter shim for PoseTrack-style annotation JSON (images + annotations
/// arrays with 3*k keypoint triples). Not used by the core pipeline.
SequenceFile import_posetrack(const std::string& path, const std::vector<std::string>& joint_order);

struct SynthConfig {
  int num_persons = 4;
  int num_frames = 60;
  int frame_width = 1920;
  int frame_height = 1080;
  /// Everyone shares one velocity and articulation phase, marching in a
  /// single file line; spatial proximity alone cannot separate identities.
  bool uniform_motion = false;
  // trajectory speed, px/frame. Random per person in [min, max] for free
  // motion; uniform motion marches everyone at speed_max.
  double speed_min = 4.0;
  double speed_max = 9.0;
  // limb swing amplitude multiplier; >~5 makes swings span grid cells
  double swing_scale = 1.0;
  // detector noise model
  double jitter_sigma = 2.0;       // px, Gaussian keypoint displacement
  double keypoint_dropout_p = 0.0; // per-keypoint invisibility
  double missed_pose_p = 0.0;      // whole pose dropped from detections
  double duplicate_pose_p = 0.0;   // extra jittered copy emitted
  // occlusion events: person hidden (absent everywhere) for occlusion_len frames
  int occlusion_count = 0;
  int occlusion_len = 3;
  std::uint64_t seed = 0;
  std::string video_id = "synth";

  void validate() const;
};

struct SynthResult {
  SequenceFile ground_truth;  // carries track ids
  SequenceFile detected;      // noise applied, ids stripped
};

SynthResult generate_synthetic(const SynthConfig& config);

}  // namespace ptk
