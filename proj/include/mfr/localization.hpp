#pragma once

#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "mfr/frame.hpp"

namespace mfr {

struct Detection;
struct Template;

struct ObjectLocation
{
  std::string object_id;
  Point3D centroid;
  int inlier_count = 0;
  int used_feature_count = 0;
};

/**
 * Column-wise extrusion: each unavailable pixel takes the nearest valid depth
 * strictly below it in its column. Pixels with nothing valid below stay
 * unavailable and valid pixels are never modified.
 */
cv::Mat scanline_depth_fill(const cv::Mat& depth);

/// Two passes of dropping points farther than mean + 2 sigma from the centroid,
/// never going below three points.
std::vector<Point3D> statistical_outlier_filter(const std::vector<Point3D>& points);

Point3D centroid(const std::vector<Point3D>& points);

/// Backprojects the detection's feature positions through the filled depth,
/// filters outliers and reports the mean. Throws LocalizationError when no
/// feature has depth.
ObjectLocation locate(const Detection& detection, const Template& templ, const cv::Mat& filled_depth,
                      const CameraIntrinsics& intrinsics);

}  // namespace mfr
