#include "mfr/channel_maps.hpp"

#include <cmath>

#include "mfr/error.hpp"
#include "mfr/localization.hpp"

namespace mfr {

FrameCues analyze_frame(const RGBDFrame& frame, const PipelineConfig& config, ChannelSet needed)
{
  frame.validate();
  FrameCues cues;
  cues.nan = nan_mask(frame.depth);
  cues.filled_depth = scanline_depth_fill(frame.depth);

  if (needed.contains(ChannelId::M1))
    cues.gradients = intensity_gradients(frame.rgb, config.magnitude_threshold);
  if (needed.contains(ChannelId::M2))
    cues.normals = depth_normals(frame.depth, frame.intrinsics, config.patch_radius);
  if (needed.contains(ChannelId::M3)) {
    cues.nan_contours = mask_contour_orientations(cues.nan, config.magnitude_threshold);
    if (needed.contains(ChannelId::M2))
      cues.extruded = extruded_normals(cues.filled_depth, cues.nan, frame.intrinsics, config.patch_radius);
  }
  if (needed.contains(ChannelId::M4)) {
    const cv::Mat candidates = specular_candidates(frame.rgb, static_cast<std::uint8_t>(config.specular_threshold));
    cues.specular = crossmodal_specular_filter(candidates, cues.nan);
    cues.specular_contours = mask_contour_orientations(cues.specular, config.magnitude_threshold);
  }
  return cues;
}

namespace {

ChannelMap orientation_channel(const OrientationMap& map, ChannelId id, int n_bins)
{
  ChannelMap out;
  out.quantized = quantize(map, id, n_bins);
  out.magnitude = map.magnitude.clone();
  out.magnitude.setTo(0.0f, map.valid == 0);
  out.tier = cv::Mat::zeros(map.valid.size(), CV_8U);
  return out;
}

void normal_priority(const NormalMap& map, cv::Mat& magnitude, std::uint8_t tier_value, cv::Mat& tier)
{
  for (int v = 0; v < map.valid.rows; ++v) {
    const auto* val = map.valid.ptr<std::uint8_t>(v);
    const auto* n = map.normals.ptr<cv::Vec3f>(v);
    auto* mag = magnitude.ptr<float>(v);
    auto* t = tier.ptr<std::uint8_t>(v);
    for (int u = 0; u < map.valid.cols; ++u) {
      if (!val[u])
        continue;
      // 1 - cos(inclination): tilted surfaces rank before fronto-parallel ones
      mag[u] = 1.0f - std::abs(n[u][2]);
      t[u] = tier_value;
    }
  }
}

}  // namespace

const ChannelMap& FrameChannels::operator[](ChannelId id) const
{
  const auto& m = maps[static_cast<std::size_t>(id)];
  if (!m)
    throw ConfigError("channel " + std::string(channel_name(id)) + " was not computed");
  return *m;
}

FrameChannels select_channels(const FrameCues& cues, const PipelineConfig& config, ChannelSet channels,
                              const CameraIntrinsics& intrinsics)
{
  FrameChannels out;
  out.channels = channels;
  out.nan = cues.nan;
  out.filled_depth = cues.filled_depth;
  out.intrinsics = intrinsics;

  auto require = [](const auto& opt, ChannelId id) -> const auto& {
    if (!opt)
      throw ConfigError("cue for " + std::string(channel_name(id)) + " missing from frame analysis");
    return *opt;
  };

  if (channels.contains(ChannelId::M1))
    out.maps[0] = orientation_channel(require(cues.gradients, ChannelId::M1), ChannelId::M1, config.orientation_bins);

  if (channels.contains(ChannelId::M2)) {
    const NormalMap& measured = require(cues.normals, ChannelId::M2);
    ChannelMap m2;
    m2.magnitude = cv::Mat::zeros(measured.valid.size(), CV_32F);
    m2.tier = cv::Mat::zeros(measured.valid.size(), CV_8U);
    if (channels.contains(ChannelId::M3)) {
      const NormalMap& extruded = require(cues.extruded, ChannelId::M3);
      normal_priority(extruded, m2.magnitude, 1, m2.tier);
      normal_priority(measured, m2.magnitude, 0, m2.tier);
      m2.quantized = quantize(merge_normals(measured, extruded), ChannelId::M2, config.normal_bins);
    } else {
      normal_priority(measured, m2.magnitude, 0, m2.tier);
      m2.quantized = quantize(measured, ChannelId::M2, config.normal_bins);
    }
    out.maps[1] = std::move(m2);
  }

  if (channels.contains(ChannelId::M3))
    out.maps[2] = orientation_channel(require(cues.nan_contours, ChannelId::M3), ChannelId::M3, config.orientation_bins);
  if (channels.contains(ChannelId::M4))
    out.maps[3] = orientation_channel(require(cues.specular_contours, ChannelId::M4), ChannelId::M4,
                                      config.orientation_bins);
  return out;
}

FrameChannels compute_channels(const RGBDFrame& frame, const PipelineConfig& config)
{
  return select_channels(analyze_frame(frame, config, config.channels), config, config.channels, frame.intrinsics);
}

}  // namespace mfr
