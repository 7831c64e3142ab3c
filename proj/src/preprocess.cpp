#include "mfr/preprocess.hpp"

#include "mfr/error.hpp"

namespace mfr {

FrameAccumulator::FrameAccumulator(int width, int height, int window_size)
    : width_(width), height_(height), window_size_(window_size)
{
  if (width <= 0 || height <= 0)
    throw DimensionError("accumulator needs a positive frame size");
  if (window_size < 1)
    throw RangeError("window size must be at least 1");
  reset();
}

void FrameAccumulator::reset()
{
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  rgb_sum_.assign(3 * n, 0);
  depth_sum_.assign(n, 0);
  depth_count_.assign(n, 0);
  nan_union_.assign(n, 0);
  frames_seen_ = 0;
}

void FrameAccumulator::accumulate(const RGBDFrame& frame)
{
  frame.validate();
  if (frame.width() != width_ || frame.height() != height_)
    throw DimensionError("frame size does not match the accumulator");
  if (full())
    throw RangeError("accumulator window is full");

  for (int v = 0; v < height_; ++v) {
    const auto* rgb = frame.rgb.ptr<cv::Vec3b>(v);
    const auto* depth = frame.depth.ptr<std::uint16_t>(v);
    for (int u = 0; u < width_; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * width_ + u;
      rgb_sum_[3 * i + 0] += rgb[u][0];
      rgb_sum_[3 * i + 1] += rgb[u][1];
      rgb_sum_[3 * i + 2] += rgb[u][2];
      if (depth[u] == kDepthUnavailable) {
        nan_union_[i] = 1;
      } else {
        depth_sum_[i] += depth[u];
        ++depth_count_[i];
      }
    }
  }
  intrinsics_ = frame.intrinsics;
  last_frame_id_ = frame.frame_id;
  ++frames_seen_;
}

RGBDFrame FrameAccumulator::finalize() const
{
  if (frames_seen_ == 0)
    throw EmptyAccumulatorError("finalize called before any frame was accumulated");

  RGBDFrame out;
  out.rgb.create(height_, width_, CV_8UC3);
  out.depth.create(height_, width_, CV_16UC1);
  out.intrinsics = intrinsics_;
  out.frame_id = last_frame_id_;

  const auto n = static_cast<std::uint32_t>(frames_seen_);
  for (int v = 0; v < height_; ++v) {
    auto* rgb = out.rgb.ptr<cv::Vec3b>(v);
    auto* depth = out.depth.ptr<std::uint16_t>(v);
    for (int u = 0; u < width_; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * width_ + u;
      for (int c = 0; c < 3; ++c)
        rgb[u][c] = static_cast<std::uint8_t>((2 * rgb_sum_[3 * i + c] + n) / (2 * n));
      if (nan_union_[i] || depth_count_[i] == 0) {
        depth[u] = kDepthUnavailable;
      } else {
        const std::uint32_t k = depth_count_[i];
        depth[u] = static_cast<std::uint16_t>((2 * depth_sum_[i] + k) / (2 * k));
      }
    }
  }
  return out;
}

cv::Mat FrameAccumulator::nan_union_mask() const
{
  cv::Mat mask(height_, width_, CV_8UC1);
  for (int v = 0; v < height_; ++v) {
    auto* row = mask.ptr<std::uint8_t>(v);
    for (int u = 0; u < width_; ++u)
      row[u] = nan_union_[static_cast<std::size_t>(v) * width_ + u] ? 255 : 0;
  }
  return mask;
}

RGBDFrame stabilize(std::span<const RGBDFrame> frames)
{
  if (frames.empty())
    throw EmptyAccumulatorError("no frames to stabilize");
  FrameAccumulator acc(frames.front().width(), frames.front().height(),
                       static_cast<int>(frames.size()));
  for (const auto& f : frames)
    acc.accumulate(f);
  return acc.finalize();
}

double unstable_fraction(std::span<const RGBDFrame> frames)
{
  if (frames.size() < 2)
    throw RangeError("unstable_fraction needs at least two frames");
  const cv::Size size = frames.front().depth.size();
  for (const auto& f : frames)
    if (f.depth.size() != size)
      throw DimensionError("frames differ in size");

  std::size_t unstable = 0;
  for (int v = 0; v < size.height; ++v) {
    for (int u = 0; u < size.width; ++u) {
      const bool first = frames.front().depth_available(u, v);
      for (std::size_t k = 1; k < frames.size(); ++k) {
        if (frames[k].depth_available(u, v) != first) {
          ++unstable;
          break;
        }
      }
    }
  }
  return static_cast<double>(unstable) / (static_cast<double>(size.width) * size.height);
}

}  // namespace mfr
