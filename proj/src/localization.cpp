#include "mfr/localization.hpp"

#include <cmath>
#include <numeric>

#include "mfr/error.hpp"
#include "mfr/matcher.hpp"
#include "mfr/template_db.hpp"

namespace mfr {

cv::Mat scanline_depth_fill(const cv::Mat& depth)
{
  if (depth.type() != CV_16UC1)
    throw FormatError("scanline_depth_fill expects a 16-bit depth image");
  cv::Mat out = depth.clone();
  const int w = out.cols;
  std::vector<std::uint16_t> below(static_cast<std::size_t>(w), kDepthUnavailable);
  // bottom-up, left to right
  for (int v = out.rows - 1; v >= 0; --v) {
    auto* row = out.ptr<std::uint16_t>(v);
    for (int u = 0; u < w; ++u) {
      if (row[u] == kDepthUnavailable)
        row[u] = below[static_cast<std::size_t>(u)];
      else
        below[static_cast<std::size_t>(u)] = row[u];
    }
  }
  return out;
}

Point3D centroid(const std::vector<Point3D>& points)
{
  Point3D c;
  for (const auto& p : points) {
    c.x += p.x;
    c.y += p.y;
    c.z += p.z;
  }
  const double n = static_cast<double>(points.size());
  return {c.x / n, c.y / n, c.z / n};
}

std::vector<Point3D> statistical_outlier_filter(const std::vector<Point3D>& points)
{
  constexpr std::size_t kFloor = 3;
  constexpr int kPasses = 2;
  std::vector<Point3D> current = points;
  for (int pass = 0; pass < kPasses && current.size() > kFloor; ++pass) {
    const Point3D c = centroid(current);
    std::vector<double> dist(current.size());
    for (std::size_t i = 0; i < current.size(); ++i)
      dist[i] = std::sqrt((current[i].x - c.x) * (current[i].x - c.x) + (current[i].y - c.y) * (current[i].y - c.y) +
                          (current[i].z - c.z) * (current[i].z - c.z));
    const double n = static_cast<double>(dist.size());
    const double mean = std::accumulate(dist.begin(), dist.end(), 0.0) / n;
    double var = 0.0;
    for (double d : dist)
      var += (d - mean) * (d - mean);
    const double limit = mean + 2.0 * std::sqrt(var / n);

    std::vector<Point3D> kept;
    kept.reserve(current.size());
    for (std::size_t i = 0; i < current.size(); ++i)
      if (dist[i] <= limit)
        kept.push_back(current[i]);
    if (kept.size() < kFloor || kept.size() == current.size())
      break;
    current = std::move(kept);
  }
  return current;
}

ObjectLocation locate(const Detection& detection, const Template& templ, const cv::Mat& filled_depth,
                      const CameraIntrinsics& intrinsics)
{
  if (filled_depth.type() != CV_16UC1)
    throw FormatError("locate expects a 16-bit depth image");
  if (detection.x < 0 || detection.y < 0 || detection.x + templ.width > filled_depth.cols ||
      detection.y + templ.height > filled_depth.rows)
    throw RangeError("detection anchor does not fit the template");

  std::vector<Point3D> points;
  points.reserve(templ.features.size());
  for (const auto& f : templ.features) {
    const int u = detection.x + f.x, v = detection.y + f.y;
    const auto d = filled_depth.at<std::uint16_t>(v, u);
    if (d != kDepthUnavailable)
      points.push_back(backproject(u, v, d, intrinsics));
  }
  if (points.empty())
    throw LocalizationError("no feature of the detection has depth");

  const auto inliers = statistical_outlier_filter(points);
  ObjectLocation loc;
  loc.object_id = detection.object_id;
  loc.centroid = centroid(inliers);
  loc.inlier_count = static_cast<int>(inliers.size());
  loc.used_feature_count = static_cast<int>(points.size());
  return loc;
}

}  // namespace mfr
