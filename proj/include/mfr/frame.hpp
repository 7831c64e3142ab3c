#pragma once

#include <cstdint>
#include <filesystem>

#include <opencv2/core.hpp>

namespace mfr {

/// Depth value marking a pixel the sensor could not measure.
inline constexpr std::uint16_t kDepthUnavailable = 0;

struct CameraIntrinsics
{
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;

  /// Throws ConfigError unless focal lengths are positive and the principal
  /// point lies inside a width x height image.
  void validate(int width, int height) const;

  bool operator==(const CameraIntrinsics&) const = default;
};

struct Point3D
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Point3D&) const = default;
};

/**
 * Registered color + depth pair.
 *
 * rgb is CV_8UC3 in R,G,B channel order; depth is CV_16UC1 in millimeters with
 * kDepthUnavailable marking missing measurements. Both share one size.
 */
struct RGBDFrame
{
  cv::Mat rgb;
  cv::Mat depth;
  CameraIntrinsics intrinsics;
  std::uint64_t frame_id = 0;

  int width() const { return rgb.cols; }
  int height() const { return rgb.rows; }

  bool depth_available(int u, int v) const
  {
    return depth.at<std::uint16_t>(v, u) != kDepthUnavailable;
  }

  /// Throws DimensionError / FormatError if the pair is not registered or has
  /// the wrong element types.
  void validate() const;
};

/// Returns a fresh, process-wide increasing frame id.
std::uint64_t next_frame_id();

/// BT.601 luma, round(0.299 R + 0.587 G + 0.114 B).
std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Per-pixel luminance of an RGB image (CV_8UC1 result).
cv::Mat luminance(const cv::Mat& rgb);

/// Pinhole backprojection of pixel (u, v) at depth_mm into camera-frame meters.
Point3D backproject(double u, double v, std::uint16_t depth_mm, const CameraIntrinsics& intrinsics);

/// Reads rgb.png, depth.png and meta.txt from a frame directory.
RGBDFrame load_frame(const std::filesystem::path& directory);

/// Writes a frame in the layout load_frame() reads, creating the directory.
void save_frame(const RGBDFrame& frame, const std::filesystem::path& directory);

CameraIntrinsics parse_intrinsics(const std::string& text);
std::string format_intrinsics(const CameraIntrinsics& intrinsics);

}  // namespace mfr
