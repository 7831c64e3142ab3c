#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfr/frame.hpp"

namespace mfr {

/**
 * Per-pixel running accumulator over a short window of frames.
 *
 * Color is averaged over every frame. Depth is averaged over the valid samples,
 * but any pixel that was unavailable in at least one frame of the window is
 * reported unavailable by finalize(): the output validity mask is the
 * intersection of the per-frame masks.
 */
class FrameAccumulator
{
public:
  static constexpr int kDefaultWindow = 10;

  FrameAccumulator(int width, int height, int window_size = kDefaultWindow);

  /// Adds one frame. Throws DimensionError on a size mismatch and RangeError
  /// once the window is full.
  void accumulate(const RGBDFrame& frame);

  /// Rounded (half up) averages; throws EmptyAccumulatorError before the first frame.
  RGBDFrame finalize() const;

  void reset();

  int width() const { return width_; }
  int height() const { return height_; }
  int window_size() const { return window_size_; }
  int frames_seen() const { return frames_seen_; }
  bool full() const { return frames_seen_ >= window_size_; }

  /// CV_8UC1, 255 where the pixel was unavailable at least once.
  cv::Mat nan_union_mask() const;

private:
  int width_;
  int height_;
  int window_size_;
  int frames_seen_ = 0;
  std::vector<std::uint32_t> rgb_sum_;
  std::vector<std::uint32_t> depth_sum_;
  std::vector<std::uint16_t> depth_count_;
  std::vector<std::uint8_t> nan_union_;
  CameraIntrinsics intrinsics_;
  std::uint64_t last_frame_id_ = 0;
};

/// Accumulates every frame of the span (which must fit one window) and finalizes.
RGBDFrame stabilize(std::span<const RGBDFrame> frames);

/// Fraction of pixels whose depth availability is not constant across the frames.
double unstable_fraction(std::span<const RGBDFrame> frames);

}  // namespace mfr
