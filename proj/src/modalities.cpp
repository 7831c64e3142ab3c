#include "mfr/modalities.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "mfr/error.hpp"

namespace mfr {

const std::array<ModalityChannel, kChannelCount>& modality_channels()
{
  static const std::array<ModalityChannel, kChannelCount> table{{
      {ChannelId::M1, "m1", "2D shape", "max. intensity gradients", "[0,pi]"},
      {ChannelId::M2, "m2", "3D geometry", "max. normal vectors", "[0,pi]^2"},
      {ChannelId::M3, "m3", "transparency", "unavailable depth", "{0,1}"},
      {ChannelId::M4, "m4", "specular reflection", "max. intensity", "{0,1}"},
  }};
  return table;
}

const ModalityChannel& modality(ChannelId id)
{
  return modality_channels()[static_cast<std::size_t>(id)];
}

std::string_view channel_name(ChannelId id)
{
  return modality(id).name;
}

OrientationMap dominant_gradients(const cv::Mat& image, float magnitude_threshold)
{
  if (image.depth() != CV_8U || image.channels() < 1 || image.channels() > 4)
    throw FormatError("gradient input must be an 8-bit image with 1..4 channels");
  if (image.rows < 3 || image.cols < 3)
    throw DimensionError("gradient input smaller than 3x3");

  std::vector<cv::Mat> planes;
  cv::split(image, planes);
  std::vector<cv::Mat> gx(planes.size()), gy(planes.size());
  for (std::size_t c = 0; c < planes.size(); ++c) {
    cv::Sobel(planes[c], gx[c], CV_16S, 1, 0, 3, 1.0, 0.0, cv::BORDER_REPLICATE);
    cv::Sobel(planes[c], gy[c], CV_16S, 0, 1, 3, 1.0, 0.0, cv::BORDER_REPLICATE);
  }

  OrientationMap out;
  out.orientation = cv::Mat::zeros(image.size(), CV_32F);
  out.magnitude = cv::Mat::zeros(image.size(), CV_32F);
  out.valid = cv::Mat::zeros(image.size(), CV_8U);
  constexpr double pi = std::numbers::pi;

  for (int v = 0; v < image.rows; ++v) {
    auto* ori = out.orientation.ptr<float>(v);
    auto* mag = out.magnitude.ptr<float>(v);
    auto* val = out.valid.ptr<std::uint8_t>(v);
    for (int u = 0; u < image.cols; ++u) {
      int best_dx = 0, best_dy = 0, best_sq = -1;
      for (std::size_t c = 0; c < planes.size(); ++c) {
        const int dx = gx[c].at<std::int16_t>(v, u);
        const int dy = gy[c].at<std::int16_t>(v, u);
        const int sq = dx * dx + dy * dy;
        if (sq > best_sq) {
          best_sq = sq;
          best_dx = dx;
          best_dy = dy;
        }
      }
      const double m = std::sqrt(static_cast<double>(best_sq));
      mag[u] = static_cast<float>(m);
      if (best_sq == 0 || m < magnitude_threshold)
        continue;
      double theta = std::atan2(static_cast<double>(best_dy), static_cast<double>(best_dx));
      if (theta < 0.0)
        theta += pi;
      if (theta >= pi)
        theta -= pi;
      ori[u] = static_cast<float>(theta);
      // float rounding can land exactly on pi
      if (ori[u] >= static_cast<float>(pi))
        ori[u] = 0.0f;
      val[u] = 255;
    }
  }
  return out;
}

OrientationMap intensity_gradients(const cv::Mat& rgb, float magnitude_threshold)
{
  if (rgb.type() != CV_8UC3)
    throw FormatError("intensity_gradients expects an 8-bit, 3-channel image");
  return dominant_gradients(rgb, magnitude_threshold);
}

NormalMap depth_normals(const cv::Mat& depth, const CameraIntrinsics& intrinsics, int patch_radius)
{
  if (depth.type() != CV_16UC1)
    throw FormatError("depth_normals expects a 16-bit depth image");
  if (patch_radius < 1)
    throw RangeError("patch radius must be at least 1");

  const int w = depth.cols, h = depth.rows;
  std::vector<cv::Vec3d> points(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v) {
    const auto* d = depth.ptr<std::uint16_t>(v);
    for (int u = 0; u < w; ++u) {
      if (d[u] == kDepthUnavailable)
        continue;
      const Point3D p = backproject(u, v, d[u], intrinsics);
      points[static_cast<std::size_t>(v) * w + u] = {p.x, p.y, p.z};
    }
  }

  NormalMap out;
  out.normals = cv::Mat::zeros(depth.size(), CV_32FC3);
  out.valid = cv::Mat::zeros(depth.size(), CV_8U);
  constexpr int kMinSamples = 6;

  std::vector<cv::Vec3d> patch;
  patch.reserve(static_cast<std::size_t>((2 * patch_radius + 1) * (2 * patch_radius + 1)));
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (depth.at<std::uint16_t>(v, u) == kDepthUnavailable)
        continue;
      patch.clear();
      cv::Vec3d mean(0, 0, 0);
      for (int dv = -patch_radius; dv <= patch_radius; ++dv) {
        const int y = v + dv;
        if (y < 0 || y >= h)
          continue;
        const auto* d = depth.ptr<std::uint16_t>(y);
        for (int du = -patch_radius; du <= patch_radius; ++du) {
          const int x = u + du;
          if (x < 0 || x >= w || d[x] == kDepthUnavailable)
            continue;
          patch.push_back(points[static_cast<std::size_t>(y) * w + x]);
          mean += patch.back();
        }
      }
      if (static_cast<int>(patch.size()) < kMinSamples)
        continue;
      mean /= static_cast<double>(patch.size());

      double sxx = 0, sxy = 0, syy = 0, sxz = 0, syz = 0;
      for (const auto& p : patch) {
        const double dx = p[0] - mean[0], dy = p[1] - mean[1], dz = p[2] - mean[2];
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
      }
      const double det = sxx * syy - sxy * sxy;
      if (!(det > 1e-12 * sxx * syy))
        continue;
      const double a = (sxz * syy - syz * sxy) / det;
      const double b = (syz * sxx - sxz * sxy) / det;
      const double norm = std::sqrt(a * a + b * b + 1.0);
      out.normals.at<cv::Vec3f>(v, u) = cv::Vec3f(static_cast<float>(a / norm),
                                                  static_cast<float>(b / norm),
                                                  static_cast<float>(-1.0 / norm));
      out.valid.at<std::uint8_t>(v, u) = 255;
    }
  }
  return out;
}

cv::Mat nan_mask(const cv::Mat& depth)
{
  if (depth.type() != CV_16UC1)
    throw FormatError("nan_mask expects a 16-bit depth image");
  cv::Mat mask;
  cv::compare(depth, cv::Scalar(kDepthUnavailable), mask, cv::CMP_EQ);
  return mask;
}

OrientationMap mask_contour_orientations(const cv::Mat& mask, float magnitude_threshold)
{
  if (mask.type() != CV_8UC1)
    throw FormatError("mask must be CV_8UC1");
  cv::Mat binary;
  cv::compare(mask, cv::Scalar(0), binary, cv::CMP_NE);
  return dominant_gradients(binary, magnitude_threshold);
}

NormalMap extruded_normals(const cv::Mat& depth_filled, const cv::Mat& original_nan_mask,
                           const CameraIntrinsics& intrinsics, int patch_radius)
{
  if (depth_filled.size() != original_nan_mask.size())
    throw DimensionError("filled depth and nan mask differ in size");
  NormalMap out = depth_normals(depth_filled, intrinsics, patch_radius);
  cv::Mat keep;
  cv::bitwise_and(out.valid, original_nan_mask, keep);
  out.valid = keep;
  out.normals.setTo(cv::Scalar::all(0), out.valid == 0);
  return out;
}

cv::Mat specular_candidates(const cv::Mat& rgb, std::uint8_t threshold)
{
  if (rgb.type() != CV_8UC3)
    throw FormatError("specular_candidates expects an 8-bit, 3-channel image");
  cv::Mat mask;
  cv::compare(luminance(rgb), cv::Scalar(threshold), mask, cv::CMP_GE);
  return mask;
}

cv::Mat crossmodal_specular_filter(const cv::Mat& candidates, const cv::Mat& nan)
{
  if (candidates.size() != nan.size())
    throw DimensionError("specular candidates and nan mask differ in size");
  if (candidates.type() != CV_8UC1 || nan.type() != CV_8UC1)
    throw FormatError("masks must be CV_8UC1");
  cv::Mat a, b, out;
  cv::compare(candidates, cv::Scalar(0), a, cv::CMP_NE);
  cv::compare(nan, cv::Scalar(0), b, cv::CMP_NE);
  cv::bitwise_and(a, b, out);
  return out;
}

NormalMap merge_normals(const NormalMap& a, const NormalMap& b)
{
  if (a.normals.size() != b.normals.size())
    throw DimensionError("normal maps differ in size");
  NormalMap out{a.normals.clone(), a.valid.clone()};
  cv::Mat fill = (a.valid == 0) & (b.valid != 0);
  b.normals.copyTo(out.normals, fill);
  out.valid.setTo(255, fill);
  return out;
}

}  // namespace mfr
