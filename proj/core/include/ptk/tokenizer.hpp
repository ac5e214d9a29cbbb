#pragma once

#include <array>
#include <optional>

#include "ptk/geometry.hpp"

namespace ptk {

inline constexpr int kPairTokens = 2 * kNumJoints;  // 30

struct TokenGrid {
  int grid_w = 24;
  int grid_h = 18;

  int vocab() const { return grid_w * grid_h; }  // 432 at the default
};

/// Token sequences for one (current, past) pose pair. Ordering is the 15
/// keypoints of the current pose followed by the 15 of the past pose.
struct TokenizedPair {
  std::array<int, kPairTokens> position{};  // 1..grid vocab
  std::array<int, kPairTokens> type{};      // 1..15, repeated per half
  std::array<int, kPairTokens> segment{};   // 1 over first half, gap d over second
  std::array<bool, kPairTokens> attn_mask{};  // false where keypoint invisible
  std::optional<bool> label;                  // match / non-match, training only
};

struct PositionToken {
  int token = 1;
  bool clamped = false;  // input was outside the frame
};

/// Row-major 1-indexed cell of (x, y) on the downsampled grid.
/// Right/bottom edge coordinates fall into the last cell.
PositionToken position_token(double x, double y, double frame_w, double frame_h,
                             const TokenGrid& grid);

/// Absolute tokenization. Invisible keypoints get position token 1 and a
/// false attention mask entry.
TokenizedPair tokenize_pair(const Pose& current, const Pose& past, int gap, int max_gap,
                            double frame_w, double frame_h, const TokenGrid& grid);

/// Ablation variant: positions are offsets from the pose's visible-keypoint
/// centroid, quantized on the same grid centered at the grid midpoint.
TokenizedPair tokenize_pair_relative(const Pose& current, const Pose& past, int gap, int max_gap,
                                     double frame_w, double frame_h, const TokenGrid& grid);

}  // namespace ptk
