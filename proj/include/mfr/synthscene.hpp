#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "mfr/frame.hpp"

namespace mfr {

enum class Category : std::uint8_t { Diffuse, Transparent, Composite };
enum class Shape : std::uint8_t { Box, Cylinder, GlassProfile };

std::string_view to_string(Category c);
std::string_view to_string(Shape s);
Category parse_category(const std::string& text);
Shape parse_shape(const std::string& text);

/// (height above the table, radius), meters.
struct ProfilePoint
{
  double height = 0.0;
  double radius = 0.0;
};

/**
 * One object standing on the table. Positions are table coordinates in
 * meters: `x` lateral (positive to the right), `y` forward from the point of
 * the table directly below the camera. `rotation` turns the object about its
 * vertical axis.
 */
struct ObjectSpec
{
  std::string id = "object";
  Category category = Category::Diffuse;
  Shape shape = Shape::Box;
  double x = 0.0;
  double y = 0.8;
  double rotation = 0.0;
  /// Box footprint and height.
  double size_x = 0.06;
  double size_y = 0.06;
  double height = 0.12;
  /// Cylinder radius.
  double radius = 0.035;
  /// Glass profile, bottom to top.
  std::vector<ProfilePoint> profile;
  std::uint64_t texture_seed = 1;
  /// Composite objects: the height band rendered diffuse.
  double label_from = 0.0;
  double label_to = 0.0;
  /// Bright cap on the top face of a diffuse object.
  bool white_cap = false;
  /// Frosted emblem on a transparent part; fixed to the object, so it turns with it.
  bool emblem = false;

  /// Profile actually used for round shapes (a cylinder becomes two points).
  std::vector<ProfilePoint> effective_profile() const;
  double top() const;
};

/// Camera pose over the table and the room behind it.
struct TableSpec
{
  double camera_height = 0.22;  ///< camera above the table plane, meters
  double tilt = 0.20943951023931956;  ///< downward camera pitch, radians (12 degrees)
  double wall_distance = 1.9;   ///< forward distance of the back wall
  std::uint64_t texture_seed = 7;
};

/// The fixed LED next to the sensor, as an offset in the sensor plane (meters).
struct LightSpec
{
  double x = 0.08;
  double y = -0.05;
  double intensity = 1.0;
};

struct NoiseSpec
{
  double rgb_sigma = 0.0;
  /// Per-frame probability that an edge-band pixel loses its depth.
  double flicker_rate = 0.0;
  /// Chebyshev width, in pixels, of the band around silhouettes where depth flickers.
  int edge_band = 0;
};

struct SceneSpec
{
  int width = 640;
  int height = 480;
  CameraIntrinsics intrinsics{525.0, 525.0, 319.5, 239.5};
  TableSpec table;
  LightSpec light;
  NoiseSpec noise;
  double brightness = 1.0;
  int frames = 10;
  /// Largest tolerated fraction of the smaller silhouette hidden by another object.
  double max_occlusion = 0.1;
  std::uint64_t seed = 1;
  std::vector<ObjectSpec> objects;

  /// Throws SceneSpecError.
  void validate() const;
};

struct ObjectTruth
{
  std::string id;
  Category category = Category::Diffuse;
  cv::Mat silhouette;    ///< visible pixels of the object
  cv::Mat transparency;  ///< visible pixels rendered without depth
  cv::Mat highlight;     ///< specular blob pixels
  Point3D centroid;      ///< solid centroid, camera frame
};

struct GroundTruth
{
  std::vector<ObjectTruth> objects;
  /// Pixels where depth may flicker between frames.
  cv::Mat edge_band;
};

struct RenderedScene
{
  std::vector<RGBDFrame> frames;
  GroundTruth truth;
};

/// Ground truth plus `frames` copies of the image, each with its own sensor noise.
RenderedScene render(const SceneSpec& spec);

/// n_views copies of spec, object `object_index` turned by 2*pi*i/n_views.
std::vector<SceneSpec> rotate_views(const SceneSpec& spec, std::size_t object_index, int n_views);

/**
 * Depth flicker on a fixed frame: a seeded `region_fraction` of the valid
 * pixels drop out independently with probability `rate` in each of the n
 * frames. Color is copied unchanged.
 */
std::vector<RGBDFrame> flicker_sequence(const RGBDFrame& base, double region_fraction, double rate, int n,
                                        std::uint64_t seed);

/// Analytic solid centroid of an object, camera frame.
Point3D object_centroid(const ObjectSpec& object, const TableSpec& table);

/// Camera-frame position of a point given in table coordinates
/// (lateral, height above the table, forward).
Point3D table_to_camera(double lateral, double up, double forward, const TableSpec& table);

/// The built-in evaluation objects, three per category. Transparent profiles
/// never widen with height: scanline fill under an overhang reads the table
/// behind the object instead of the support in front of its base.
std::vector<ObjectSpec> catalog();
ObjectSpec catalog_object(const std::string& id);

std::string format_scene(const SceneSpec& spec);
SceneSpec parse_scene(const std::string& text);
SceneSpec load_scene(const std::filesystem::path& path);
void save_scene(const SceneSpec& spec, const std::filesystem::path& path);

}  // namespace mfr
