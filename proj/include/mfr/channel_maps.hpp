#pragma once

#include <array>
#include <optional>

#include "mfr/config.hpp"
#include "mfr/frame.hpp"
#include "mfr/modalities.hpp"
#include "mfr/response_maps.hpp"

namespace mfr {

/// Every raw cue of one frame, computed once and shared by all channel sets.
struct FrameCues
{
  cv::Mat nan;           ///< 255 where depth is unavailable
  cv::Mat filled_depth;  ///< scanline-filled depth
  std::optional<OrientationMap> gradients;          ///< M1
  std::optional<NormalMap> normals;                 ///< M2, measured depth
  std::optional<NormalMap> extruded;                ///< M3 geometry cue
  std::optional<OrientationMap> nan_contours;       ///< M3 contour cue
  cv::Mat specular;                                 ///< M4 filtered highlight mask
  std::optional<OrientationMap> specular_contours;  ///< M4
};

FrameCues analyze_frame(const RGBDFrame& frame, const PipelineConfig& config, ChannelSet needed);

/// Quantized cue of one channel plus the keys used to rank feature candidates:
/// lower tier first, then larger magnitude.
struct ChannelMap
{
  QuantizedMap quantized;
  cv::Mat magnitude;  ///< CV_32F
  cv::Mat tier;       ///< CV_8U
};

/**
 * Quantized maps for a channel set. With M3 enabled the M2 channel also carries
 * the extruded normals, at a lower selection tier than measured normals.
 */
struct FrameChannels
{
  ChannelSet channels;
  std::array<std::optional<ChannelMap>, kChannelCount> maps;
  cv::Mat nan;
  cv::Mat filled_depth;
  CameraIntrinsics intrinsics;

  const ChannelMap& operator[](ChannelId id) const;
  int width() const { return nan.cols; }
  int height() const { return nan.rows; }
};

FrameChannels select_channels(const FrameCues& cues, const PipelineConfig& config, ChannelSet channels,
                              const CameraIntrinsics& intrinsics);

/// analyze_frame() + select_channels() for config.channels.
FrameChannels compute_channels(const RGBDFrame& frame, const PipelineConfig& config);

}  // namespace mfr
