#include "ptk/dataio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ptk {

using ordered_json = nlohmann::ordered_json;

namespace {

std::array<int, kNumJoints> joint_index_map(const std::vector<std::string>& file_joints,
                                            const std::string& path) {
  if (file_joints.size() != kNumJoints)
    throw std::runtime_error(path + ": joint map must list exactly 15 joints, found " +
                             std::to_string(file_joints.size()));
  // map canonical joint i -> index in the file's keypoint arrays
  std::array<int, kNumJoints> map{};
  map.fill(-1);
  const auto& names = joint_names();
  for (int i = 0; i < kNumJoints; ++i) {
    for (int j = 0; j < kNumJoints; ++j) {
      if (file_joints[j] == names[i]) {
        map[i] = j;
        break;
      }
    }
    if (map[i] < 0) throw std::runtime_error(path + ": joint map is missing '" + names[i] + "'");
  }
  return map;
}

}  // namespace

SequenceFile load_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_sequence: cannot open " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": JSON parse error: " + e.what());
  }
  SequenceFile seq;
  try {
    seq.schema_version = j.at("schema_version").get<int>();
    if (seq.schema_version != 1)
      throw std::runtime_error("unsupported schema_version " +
                               std::to_string(seq.schema_version));
    seq.video_id = j.at("video_id").get<std::string>();
    seq.frame_width = j.at("frame_width").get<int>();
    seq.frame_height = j.at("frame_height").get<int>();
    if (seq.frame_width <= 0 || seq.frame_height <= 0)
      throw std::runtime_error("frame dimensions must be positive");
    const auto map = joint_index_map(j.at("joint_names").get<std::vector<std::string>>(), path);
    int expected_index = -1;
    for (const auto& jf : j.at("frames")) {
      Frame f;
      f.index = jf.at("index").get<int>();
      if (expected_index >= 0 && f.index != expected_index + 1)
        throw std::runtime_error("frame indices not contiguous at index " +
                                 std::to_string(f.index));
      expected_index = f.index;
      f.width = seq.frame_width;
      f.height = seq.frame_height;
      for (const auto& jp : jf.at("poses")) {
        Pose p;
        p.frame_index = f.index;
        if (jp.contains("track_id") && !jp.at("track_id").is_null()) {
          const int id = jp.at("track_id").get<int>();
          if (id < 0) throw std::runtime_error("track_id must be non-negative");
          p.track_id = id;
        }
        if (jp.contains("bbox") && !jp.at("bbox").is_null()) {
          const auto& bb = jp.at("bbox");
          if (bb.size() != 4) throw std::runtime_error("bbox must have 4 entries");
          BBox box{bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                   bb[3].get<double>()};
          if (box.w <= 0 || box.h <= 0)
            throw std::runtime_error("bbox width and height must be positive");
          p.bbox = box;
        }
        const auto& kps = jp.at("keypoints");
        if (kps.size() != kNumJoints)
          throw std::runtime_error("pose must have exactly 15 keypoints, found " +
                                   std::to_string(kps.size()));
        for (int i = 0; i < kNumJoints; ++i) {
          const auto& kj = kps[map[i]];
          if (kj.size() != 4) throw std::runtime_error("keypoint must be [x,y,conf,visible]");
          Keypoint kp;
          kp.type_id = i + 1;
          kp.x = kj[0].get<double>();
          kp.y = kj[1].get<double>();
          kp.confidence = kj[2].get<double>();
          kp.visible = kj[3].get<int>() != 0;
          if (!std::isfinite(kp.x) || !std::isfinite(kp.y))
            throw std::runtime_error("keypoint coordinates must be finite");
          p.keypoints[i] = kp;
        }
        f.poses.push_back(p);
      }
      seq.frames.push_back(std::move(f));
    }
  } catch (const ordered_json::exception& e) {
    throw std::runtime_error(path + ": schema error: " + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return seq;
}

void save_sequence(const SequenceFile& seq, const std::string& path) {
  ordered_json j;
  j["schema_version"] = seq.schema_version;
  j["video_id"] = seq.video_id;
  j["frame_width"] = seq.frame_width;
  j["frame_height"] = seq.frame_height;
  j["joint_names"] = joint_names();
  ordered_json frames = ordered_json::array();
  for (const auto& f : seq.frames) {
    ordered_json jf;
    jf["index"] = f.index;
    ordered_json poses = ordered_json::array();
    for (const auto& p : f.poses) {
      ordered_json jp;
      if (p.track_id)
        jp["track_id"] = *p.track_id;
      else
        jp["track_id"] = nullptr;
      if (p.bbox)
        jp["bbox"] = {p.bbox->x, p.bbox->y, p.bbox->w, p.bbox->h};
      else
        jp["bbox"] = nullptr;
      ordered_json kps = ordered_json::array();
      for (const auto& kp : p.keypoints)
        kps.push_back({kp.x, kp.y, kp.confidence, kp.visible ? 1 : 0});
      jp["keypoints"] = kps;
      poses.push_back(std::move(jp));
    }
    jf["poses"] = std::move(poses);
    frames.push_back(std::move(jf));
  }
  j["frames"] = std::move(frames);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_sequence: cannot open " + path);
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("save_sequence: write failed for " + path);
}

SequenceFile import_posetrack(const std::string& path,
                              const std::vector<std::string>& joint_order) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_posetrack: cannot open " + path);
  ordered_json j;
  in >> j;
  const auto map = joint_index_map(joint_order, path);
  SequenceFile seq;
  seq.video_id = path;
  // image id -> frame position
  std::vector<long long> image_ids;
  for (const auto& im : j.at("images")) {
    Frame f;
    f.index = static_cast<int>(seq.frames.size());
    if (im.contains("vid_id")) seq.video_id = im.at("vid_id").get<std::string>();
    image_ids.push_back(im.at("id").get<long long>());
    seq.frames.push_back(std::move(f));
  }
  for (const auto& an : j.at("annotations")) {
    const long long image_id = an.at("image_id").get<long long>();
    int fi = -1;
    for (size_t i = 0; i < image_ids.size(); ++i)
      if (image_ids[i] == image_id) fi = static_cast<int>(i);
    if (fi < 0)
      throw std::runtime_error("import_posetrack: annotation references unknown image id " +
                               std::to_string(image_id));
    const auto& kps = an.at("keypoints");
    if (kps.size() < 3 * kNumJoints)
      throw std::runtime_error("import_posetrack: expected >= 45 keypoint values");
    Pose p;
    p.frame_index = fi;
    if (an.contains("track_id")) p.track_id = an.at("track_id").get<int>();
    if (an.contains("bbox")) {
      const auto& bb = an.at("bbox");
      if (bb.size() == 4 && bb[2].get<double>() > 0 && bb[3].get<double>() > 0)
        p.bbox = BBox{bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                      bb[3].get<double>()};
    }
    for (int i = 0; i < kNumJoints; ++i) {
      const int src = map[i];
      Keypoint kp;
      kp.type_id = i + 1;
      kp.x = kps[3 * src].get<double>();
      kp.y = kps[3 * src + 1].get<double>();
      const double vflag = kps[3 * src + 2].get<double>();
      kp.visible = vflag > 0;
      kp.confidence = kp.visible ? 1.0 : 0.0;
      p.keypoints[i] = kp;
    }
    seq.frames[fi].poses.push_back(std::move(p));
    seq.frame_width = std::max(seq.frame_width, 1);
  }
  // frame dims unknown in many annotation files; fall back to the keypoint hull
  double maxx = 1.0, maxy = 1.0;
  for (const auto& f : seq.frames)
    for (const auto& p : f.poses)
      for (const auto& kp : p.keypoints) {
        maxx = std::max(maxx, kp.x);
        maxy = std::max(maxy, kp.y);
      }
  seq.frame_width = static_cast<int>(maxx) + 1;
  seq.frame_height = static_cast<int>(maxy) + 1;
  for (auto& f : seq.frames) {
    f.width = seq.frame_width;
    f.height = seq.frame_height;
  }
  return seq;
}

void SynthConfig::validate() const {
  if (num_persons < 1 || num_frames < 1 || frame_width < 1 || frame_height < 1)
    throw std::invalid_argument("SynthConfig: counts and dimensions must be positive");
  for (double p : {keypoint_dropout_p, missed_pose_p, duplicate_pose_p}) {
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("SynthConfig: probabilities must lie in [0,1]");
  }
  if (jitter_sigma < 0.0) throw std::invalid_argument("SynthConfig: jitter_sigma must be >= 0");
  if (speed_min <= 0.0 || speed_max < speed_min)
    throw std::invalid_argument("SynthConfig: need 0 < speed_min <= speed_max");
  if (swing_scale <= 0.0) throw std::invalid_argument("SynthConfig: swing_scale must be > 0");
  if (occlusion_count < 0 || occlusion_len < 1)
    throw std::invalid_argument("SynthConfig: bad occlusion parameters");
}

}  // namespace ptk
