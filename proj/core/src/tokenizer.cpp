#include "ptk/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptk {

namespace {

int cell_index(double v, double extent, int cells, bool* clamped) {
  int c = static_cast<int>(std::floor(v / extent * cells));
  if (c < 0) {
    c = 0;
    if (clamped) *clamped = true;
  } else if (c >= cells) {
    // v == extent lands exactly on the far edge; fold into the last cell
    if (v > extent && clamped) *clamped = true;
    c = cells - 1;
  }
  return c;
}

void fill_type_and_segment(TokenizedPair& p, int gap) {
  for (int i = 0; i < kNumJoints; ++i) {
    p.type[i] = i + 1;
    p.type[kNumJoints + i] = i + 1;
    p.segment[i] = 1;
    p.segment[kNumJoints + i] = gap;
  }
}

void check_gap(int gap, int max_gap) {
  if (gap < 1 || gap > max_gap) {
    throw std::invalid_argument("tokenize_pair: temporal gap " + std::to_string(gap) +
                                " outside [1, " + std::to_string(max_gap) + "]");
  }
}

}  // namespace

PositionToken position_token(double x, double y, double frame_w, double frame_h,
                             const TokenGrid& grid) {
  PositionToken out;
  bool clamped = false;
  const int col = cell_index(x, frame_w, grid.grid_w, &clamped);
  const int row = cell_index(y, frame_h, grid.grid_h, &clamped);
  out.token = row * grid.grid_w + col + 1;
  out.clamped = clamped;
  return out;
}

TokenizedPair tokenize_pair(const Pose& current, const Pose& past, int gap, int max_gap,
                            double frame_w, double frame_h, const TokenGrid& grid) {
  check_gap(gap, max_gap);
  TokenizedPair p;
  fill_type_and_segment(p, gap);
  const Pose* poses[2] = {&current, &past};
  for (int half = 0; half < 2; ++half) {
    for (int i = 0; i < kNumJoints; ++i) {
      const Keypoint& kp = poses[half]->keypoints[i];
      const int at = half * kNumJoints + i;
      if (!kp.visible) {
        p.position[at] = 1;  // don't-care, masked out below
        p.attn_mask[at] = false;
        continue;
      }
      p.position[at] = position_token(kp.x, kp.y, frame_w, frame_h, grid).token;
      p.attn_mask[at] = true;
    }
  }
  return p;
}

TokenizedPair tokenize_pair_relative(const Pose& current, const Pose& past, int gap, int max_gap,
                                     double frame_w, double frame_h, const TokenGrid& grid) {
  check_gap(gap, max_gap);
  TokenizedPair p;
  fill_type_and_segment(p, gap);
  const Pose* poses[2] = {&current, &past};
  for (int half = 0; half < 2; ++half) {
    // centroid of visible keypoints
    double cx = 0.0, cy = 0.0;
    int n = 0;
    for (const auto& kp : poses[half]->keypoints) {
      if (kp.visible) {
        cx += kp.x;
        cy += kp.y;
        ++n;
      }
    }
    if (n > 0) {
      cx /= n;
      cy /= n;
    }
    for (int i = 0; i < kNumJoints; ++i) {
      const Keypoint& kp = poses[half]->keypoints[i];
      const int at = half * kNumJoints + i;
      if (!kp.visible) {
        p.position[at] = 1;
        p.attn_mask[at] = false;
        continue;
      }
      // cells centered on zero offset, so a keypoint sitting exactly on the
      // centroid is stable against rounding of the centroid itself
      const int dcol = static_cast<int>(std::floor((kp.x - cx) / frame_w * grid.grid_w + 0.5));
      const int drow = static_cast<int>(std::floor((kp.y - cy) / frame_h * grid.grid_h + 0.5));
      const int col = std::clamp(grid.grid_w / 2 + dcol, 0, grid.grid_w - 1);
      const int row = std::clamp(grid.grid_h / 2 + drow, 0, grid.grid_h - 1);
      p.position[at] = row * grid.grid_w + col + 1;
      p.attn_mask[at] = true;
    }
  }
  return p;
}

}  // namespace ptk
