#pragma once

#include <cstdint>
#include <vector>

#include <opencv2/core.hpp>

#include "mfr/modalities.hpp"

namespace mfr {

inline constexpr std::uint8_t kNoBin = 0xFF;
inline constexpr int kDefaultOrientationBins = 8;
/// 8 azimuth sectors plus one "flat" bin.
inline constexpr int kDefaultNormalBins = 9;
inline constexpr int kMaxBins = 16;
inline constexpr double kFlatInclinationDeg = 15.0;

/// Bin of an undirected orientation in [0, pi]; pi wraps to bin 0.
int quantize_orientation(double theta, int n_bins = kDefaultOrientationBins);

/// Bin of a camera-facing unit normal: the last bin when the normal is within
/// 15 degrees of the optical axis, otherwise its azimuth sector.
int quantize_normal(const cv::Vec3f& normal, int n_bins = kDefaultNormalBins);

/// Per-pixel bin index (CV_8U, kNoBin where undefined).
struct QuantizedMap
{
  cv::Mat bins;
  int n_bins = kDefaultOrientationBins;
  ChannelId channel = ChannelId::M1;
};

QuantizedMap quantize(const OrientationMap& map, ChannelId channel, int n_bins = kDefaultOrientationBins);
QuantizedMap quantize(const NormalMap& map, ChannelId channel, int n_bins = kDefaultNormalBins);

/// Per-pixel bitmask (CV_16U): bit b set iff bin b occurs within Chebyshev
/// distance `radius` in the source map.
struct SpreadMap
{
  cv::Mat masks;
  int n_bins = kDefaultOrientationBins;
  int radius = 0;
  ChannelId channel = ChannelId::M1;
};

SpreadMap spread(const QuantizedMap& q, int radius);

/// Precomputed similarity of a bin against every possible spread bitmask:
/// the best similarity between the bin and any set bit.
class ResponseLUT
{
public:
  ResponseLUT() = default;

  /// |cos| of the difference between bin centers over [0, pi).
  static ResponseLUT orientation(int n_bins = kDefaultOrientationBins);
  /// Azimuth sectors compare by max(0, cos) of their center difference; the
  /// flat bin matches only itself.
  static ResponseLUT normal(int n_bins = kDefaultNormalBins);
  static ResponseLUT for_channel(ChannelId channel, int n_bins);

  int n_bins() const { return n_bins_; }
  float pairwise(int a, int b) const { return pair_[static_cast<std::size_t>(a * n_bins_ + b)]; }
  float operator()(int bin, std::uint32_t mask) const
  {
    return table_[(static_cast<std::size_t>(bin) << n_bins_) | mask];
  }

private:
  explicit ResponseLUT(int n_bins, std::vector<float> pair);

  int n_bins_ = 0;
  std::vector<float> pair_;
  std::vector<float> table_;
};

/**
 * One response image per bin, each stored row-major in a flat buffer, so the
 * response of bin b at pixel (x, y) is the single read bins[b][y * width + x].
 */
struct ResponseMaps
{
  int width = 0;
  int height = 0;
  ChannelId channel = ChannelId::M1;
  std::vector<std::vector<float>> bins;

  float at(int bin, int x, int y) const
  {
    return bins[static_cast<std::size_t>(bin)][static_cast<std::size_t>(y) * width + x];
  }
  const float* row(int bin, int y) const
  {
    return bins[static_cast<std::size_t>(bin)].data() + static_cast<std::size_t>(y) * width;
  }
};

ResponseMaps build_response_maps(const SpreadMap& spread, const ResponseLUT& lut);

}  // namespace mfr
