#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <opencv2/core.hpp>

#include "mfr/frame.hpp"

namespace mfr {

/// The four cue channels.
enum class ChannelId : std::uint8_t { M1 = 0, M2 = 1, M3 = 2, M4 = 3 };

inline constexpr int kChannelCount = 4;

/// Descriptive record for a modality: which physical property it hypothesizes
/// and the value range of its interpretation f(V).
struct ModalityChannel
{
  ChannelId id;
  std::string_view name;
  std::string_view physical_property;
  std::string_view transform;
  std::string_view value_range;
};

const std::array<ModalityChannel, kChannelCount>& modality_channels();
const ModalityChannel& modality(ChannelId id);
std::string_view channel_name(ChannelId id);

/// Undirected per-pixel orientation field. orientation (CV_32F) is in [0, pi)
/// and meaningful only where valid (CV_8U, 255) is set.
struct OrientationMap
{
  cv::Mat orientation;
  cv::Mat magnitude;
  cv::Mat valid;
};

/// Unit surface normals (CV_32FC3, nz <= 0) with a validity mask.
struct NormalMap
{
  cv::Mat normals;
  cv::Mat valid;
};

inline constexpr float kDefaultMagnitudeThreshold = 30.0f;
inline constexpr int kDefaultPatchRadius = 2;
inline constexpr std::uint8_t kDefaultSpecularThreshold = 251;

/// M1: 3x3 Sobel on every color channel, keeping the strongest channel per pixel.
OrientationMap intensity_gradients(const cv::Mat& rgb, float magnitude_threshold = kDefaultMagnitudeThreshold);

/// Same dominant-gradient pipeline for any 8-bit image with 1..4 channels.
OrientationMap dominant_gradients(const cv::Mat& image, float magnitude_threshold);

/// M2: least-squares plane z = a x + b y + c over the backprojected patch.
NormalMap depth_normals(const cv::Mat& depth, const CameraIntrinsics& intrinsics,
                        int patch_radius = kDefaultPatchRadius);

/// 255 exactly where depth is unavailable.
cv::Mat nan_mask(const cv::Mat& depth);

/// M3 contour cue: the M1 pipeline applied to a {0,255} mask.
OrientationMap mask_contour_orientations(const cv::Mat& mask,
                                         float magnitude_threshold = kDefaultMagnitudeThreshold);

/// M3 geometry cue: normals of the scanline-filled depth, kept only where the
/// original depth was unavailable.
NormalMap extruded_normals(const cv::Mat& depth_filled, const cv::Mat& original_nan_mask,
                           const CameraIntrinsics& intrinsics, int patch_radius = kDefaultPatchRadius);

/// M4 stage 1: luminance >= threshold (the last five 8-bit bins by default).
cv::Mat specular_candidates(const cv::Mat& rgb, std::uint8_t threshold = kDefaultSpecularThreshold);

/// M4 stage 2: keep candidates that also lack depth.
cv::Mat crossmodal_specular_filter(const cv::Mat& candidates, const cv::Mat& nan);

/// Pointwise merge: b's normals fill pixels where a is invalid.
NormalMap merge_normals(const NormalMap& a, const NormalMap& b);

}  // namespace mfr
