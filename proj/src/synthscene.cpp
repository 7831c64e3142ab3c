#include "mfr/synthscene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include <opencv2/imgproc.hpp>

#include "mfr/error.hpp"

namespace mfr {

namespace {

using Vec3 = cv::Vec3d;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

// Scene coordinates are (lateral, up, forward) with the table at up = 0 and
// the camera at (0, camera_height, 0).
struct Basis
{
  Vec3 ex;  // scene lateral axis, camera frame
  Vec3 eu;  // scene up
  Vec3 ef;  // scene forward
  double camera_height;
};

Basis make_basis(const TableSpec& table)
{
  const double c = std::cos(table.tilt);
  const double s = std::sin(table.tilt);
  return {{1.0, 0.0, 0.0}, {0.0, -c, -s}, {0.0, -s, c}, table.camera_height};
}

Vec3 to_scene(const Basis& b, const Vec3& cam) { return {cam.dot(b.ex), cam.dot(b.eu), cam.dot(b.ef)}; }
Vec3 to_camera(const Basis& b, const Vec3& scene) { return scene[0] * b.ex + scene[1] * b.eu + scene[2] * b.ef; }

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash3(std::uint64_t seed, std::int64_t i, std::int64_t j)
{
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) * 0x632be59bd9b4e019ULL ^
                                      splitmix64(static_cast<std::uint64_t>(j))));
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

Vec3 palette_color(std::uint64_t seed, int index)
{
  const std::uint64_t h = hash3(seed, 0x70a1e77e, index);
  return {40.0 + 180.0 * unit(splitmix64(h)), 40.0 + 180.0 * unit(splitmix64(h + 1)),
          40.0 + 180.0 * unit(splitmix64(h + 2))};
}

// Mosaic of cells drawn from a four-color palette; albedo stays below 221.
Vec3 cell_texture(std::uint64_t seed, double a, double b, double cell)
{
  const auto i = static_cast<std::int64_t>(std::floor(a / cell));
  const auto j = static_cast<std::int64_t>(std::floor(b / cell));
  const std::uint64_t h = hash3(seed, i, j);
  return palette_color(seed, static_cast<int>(h & 3)) * (0.8 + 0.2 * unit(splitmix64(h)));
}

// Print cell size on object surfaces, meters.
constexpr double kPrintCell = 0.028;

// Object print: the mosaic grid turned by a per-seed angle in [20, 66] degrees so
// that different products carry edges at different orientations.
Vec3 print_texture(std::uint64_t seed, double a, double b, double cell)
{
  const double angle = 0.35 + 0.8 * unit(hash3(seed, 0xa9, 0x1e));
  const double c = std::cos(angle), s = std::sin(angle);
  return cell_texture(seed, c * a - s * b, s * a + c * b, cell);
}

double frac(double x) { return x - std::floor(x); }

Vec3 wall_albedo(std::uint64_t seed, double s, double h)
{
  for (int k = 0; k < 6; ++k) {
    const std::uint64_t p = hash3(seed, 0x9057e5, k);
    const double cs = -1.2 + 2.4 * unit(splitmix64(p));
    const double ch = 0.1 + 0.8 * unit(splitmix64(p + 1));
    const double hw = 0.06 + 0.12 * unit(splitmix64(p + 2));
    const double hh = 0.06 + 0.09 * unit(splitmix64(p + 3));
    if (std::abs(s - cs) <= hw && std::abs(h - ch) <= hh) {
      if (std::abs(s - cs) > hw - 0.01 || std::abs(h - ch) > hh - 0.01)
        return {40.0, 38.0, 36.0};
      return cell_texture(p, s, h, 0.035);
    }
  }
  Vec3 base{178.0, 170.0, 152.0};
  if (frac(s / 0.3) < 0.03 || frac(h / 0.3) < 0.03)
    base *= 0.75;
  return base;
}

Vec3 table_albedo(double s, double f)
{
  Vec3 base{150.0, 112.0, 76.0};
  base *= 0.92 + 0.08 * std::sin(2.0 * kPi * s / 0.045 + 1.5 * std::sin(2.0 * kPi * f / 0.37));
  if (frac(s / 0.13 + 0.05 * std::sin(f * 7.0)) < 0.05)
    base *= 0.75;
  return base;
}

enum class Surface : std::uint8_t { Side, Top, Step, Face };

struct Hit
{
  double t = kInf;
  Vec3 local;         // (lateral, up, forward) in the object frame
  Vec3 normal_local;  // unit
  Surface surface = Surface::Side;
  int index = -1;     // profile segment or box face
};

struct Placed
{
  const ObjectSpec* spec;
  std::vector<ProfilePoint> profile;
  double c;
  double s;
};

Vec3 scene_to_local(const Placed& p, const Vec3& v)
{
  return {v[0] * p.c + v[2] * p.s, v[1], -v[0] * p.s + v[2] * p.c};
}

Vec3 local_to_scene(const Placed& p, const Vec3& v)
{
  return {v[0] * p.c - v[2] * p.s, v[1], v[0] * p.s + v[2] * p.c};
}

Hit intersect_box(const ObjectSpec& o, const Vec3& org, const Vec3& dir)
{
  const double lo[3] = {-o.size_x / 2, 0.0, -o.size_y / 2};
  const double hi[3] = {o.size_x / 2, o.height, o.size_y / 2};
  double tmin = -kInf;
  double tmax = kInf;
  int axis = -1;
  double sign = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-15) {
      if (org[i] < lo[i] || org[i] > hi[i])
        return {};
      continue;
    }
    double t0 = (lo[i] - org[i]) / dir[i];
    double t1 = (hi[i] - org[i]) / dir[i];
    double s = -1.0;
    if (t0 > t1) {
      std::swap(t0, t1);
      s = 1.0;
    }
    if (t0 > tmin) {
      tmin = t0;
      axis = i;
      sign = s;
    }
    tmax = std::min(tmax, t1);
  }
  if (tmin > tmax || tmin <= 0.0 || axis < 0)
    return {};
  Hit hit;
  hit.t = tmin;
  hit.local = org + tmin * dir;
  hit.normal_local = Vec3{0, 0, 0};
  hit.normal_local[axis] = sign;
  hit.surface = axis == 1 ? Surface::Top : Surface::Face;
  hit.index = axis * 2 + (sign > 0 ? 1 : 0);
  return hit;
}

Hit intersect_revolution(const std::vector<ProfilePoint>& profile, const Vec3& org, const Vec3& dir)
{
  Hit best;
  auto consider = [&](double t, Surface surface, int index, const Vec3& normal) {
    if (t > 1e-9 && t < best.t) {
      best.t = t;
      best.local = org + t * dir;
      best.normal_local = normal;
      best.surface = surface;
      best.index = index;
    }
  };

  for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
    const double h0 = profile[k].height;
    const double h1 = profile[k + 1].height;
    const double r0 = profile[k].radius;
    const double r1 = profile[k + 1].radius;
    if (h1 - h0 < 1e-12) {
      // Horizontal annulus between the two radii.
      if (std::abs(dir[1]) < 1e-15)
        continue;
      const double t = (h0 - org[1]) / dir[1];
      const Vec3 p = org + t * dir;
      const double rr = std::hypot(p[0], p[2]);
      if (rr >= std::min(r0, r1) && rr <= std::max(r0, r1))
        consider(t, Surface::Step, static_cast<int>(k), Vec3{0.0, r1 < r0 ? 1.0 : -1.0, 0.0});
      continue;
    }
    const double slope = (r1 - r0) / (h1 - h0);
    const double rb = r0 + slope * (org[1] - h0);
    const double a = dir[0] * dir[0] + dir[2] * dir[2] - slope * slope * dir[1] * dir[1];
    const double b = 2.0 * (org[0] * dir[0] + org[2] * dir[2]) - 2.0 * slope * dir[1] * rb;
    const double c = org[0] * org[0] + org[2] * org[2] - rb * rb;
    double roots[2];
    int n_roots = 0;
    if (std::abs(a) < 1e-15) {
      if (std::abs(b) > 1e-15)
        roots[n_roots++] = -c / b;
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0)
        continue;
      const double sq = std::sqrt(disc);
      roots[n_roots++] = (-b - sq) / (2.0 * a);
      roots[n_roots++] = (-b + sq) / (2.0 * a);
    }
    for (int i = 0; i < n_roots; ++i) {
      const Vec3 p = org + roots[i] * dir;
      if (p[1] < h0 || p[1] > h1)
        continue;
      const double r = r0 + slope * (p[1] - h0);
      if (r < 0.0)
        continue;
      Vec3 n{p[0], -r * slope, p[2]};
      const double len = cv::norm(n);
      if (len < 1e-15)
        continue;
      consider(roots[i], Surface::Side, static_cast<int>(k), n / len);
    }
  }

  const ProfilePoint& top = profile.back();
  if (top.radius > 0.0 && std::abs(dir[1]) > 1e-15) {
    const double t = (top.height - org[1]) / dir[1];
    const Vec3 p = org + t * dir;
    if (p[0] * p[0] + p[2] * p[2] <= top.radius * top.radius)
      consider(t, Surface::Top, -1, Vec3{0.0, 1.0, 0.0});
  }
  return best;
}

double max_radius(const Placed& p)
{
  if (p.spec->shape == Shape::Box)
    return 0.5 * std::hypot(p.spec->size_x, p.spec->size_y);
  double r = 0.0;
  for (const auto& q : p.profile)
    r = std::max(r, q.radius);
  return r;
}

bool is_transparent_part(const ObjectSpec& o, const Hit& hit)
{
  switch (o.category) {
    case Category::Diffuse:
      return false;
    case Category::Transparent:
      return true;
    case Category::Composite:
      break;
  }
  const double h = hit.local[1];
  if (hit.surface == Surface::Top)
    return !(o.label_to >= o.top() - 1e-9);
  return h < o.label_from || h > o.label_to;
}

Vec3 object_albedo(const ObjectSpec& o, const Hit& hit)
{
  const Vec3& p = hit.local;
  if (o.shape == Shape::Box) {
    const std::uint64_t seed = o.texture_seed ^ splitmix64(static_cast<std::uint64_t>(hit.index));
    switch (hit.index / 2) {
      case 0: return print_texture(seed, p[2], p[1], kPrintCell);
      case 1: return print_texture(seed, p[0], p[2], kPrintCell);
      default: return print_texture(seed, p[0], p[1], kPrintCell);
    }
  }
  if (hit.surface != Surface::Side)
    return print_texture(o.texture_seed ^ 0x70f, p[0], p[2], kPrintCell);
  double rmax = 0.0;
  for (const auto& q : o.effective_profile())
    rmax = std::max(rmax, q.radius);
  // arc length around the widest circumference; the print has a single seam
  const double phi = std::atan2(p[2], p[0]) + kPi;
  return print_texture(o.texture_seed, phi * rmax, p[1], kPrintCell);
}

// Profile segments that carry a specular blob: the three longest that are not thin.
std::vector<int> highlight_segments(const std::vector<ProfilePoint>& profile)
{
  std::vector<std::pair<double, int>> candidates;
  for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
    const double len = profile[k + 1].height - profile[k].height;
    if (len >= 0.02 && std::min(profile[k].radius, profile[k + 1].radius) >= 0.008)
      candidates.emplace_back(len, static_cast<int>(k));
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> out;
  for (std::size_t i = 0; i < candidates.size() && i < 3; ++i)
    out.push_back(candidates[i].second);
  return out;
}

// Longest transparent side segment; the emblem sits at its middle.
int emblem_segment(const ObjectSpec& o, const std::vector<ProfilePoint>& profile)
{
  int best = -1;
  double best_len = 0.0;
  for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
    const double h0 = profile[k].height;
    const double h1 = profile[k + 1].height;
    if (o.category == Category::Composite && h1 > o.label_from && h0 < o.label_to)
      continue;
    if (h1 - h0 > best_len && std::min(profile[k].radius, profile[k + 1].radius) >= 0.008) {
      best_len = h1 - h0;
      best = static_cast<int>(k);
    }
  }
  return best;
}

// Rounded N(0, sigma) quantiles at 65536 equally spaced probabilities: one
// 16-bit slice of a random word draws one sample.
std::vector<std::int16_t> gaussian_table(double sigma)
{
  static const std::vector<double> unit_quantiles = [] {
    std::vector<double> q(1u << 16);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(q.size());
      double lo = -10.0, hi = 10.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::numbers::sqrt2) < p ? lo : hi) = mid;
      }
      q[i] = 0.5 * (lo + hi);
    }
    return q;
  }();
  std::vector<std::int16_t> table(unit_quantiles.size(), 0);
  if (sigma > 0.0)
    for (std::size_t i = 0; i < table.size(); ++i)
      table[i] = static_cast<std::int16_t>(std::lround(sigma * unit_quantiles[i]));
  return table;
}

struct PixelRay
{
  Vec3 cam;    // direction with unit z
  Vec3 scene;  // same direction, scene coordinates
};

double segment_moment(double h0, double h1, double r0, double r1, double* volume)
{
  const double len = h1 - h0;
  const double d = r1 - r0;
  const double v = len * (r0 * r0 + r0 * r1 + r1 * r1) / 3.0;
  *volume = v;
  return h0 * v + len * len * (r0 * r0 / 2.0 + 2.0 * r0 * d / 3.0 + d * d / 4.0);
}

}  // namespace

std::string_view to_string(Category c)
{
  switch (c) {
    case Category::Diffuse: return "diffuse";
    case Category::Transparent: return "transparent";
    case Category::Composite: return "composite";
  }
  return "?";
}

std::string_view to_string(Shape s)
{
  switch (s) {
    case Shape::Box: return "box";
    case Shape::Cylinder: return "cylinder";
    case Shape::GlassProfile: return "glass-profile";
  }
  return "?";
}

Category parse_category(const std::string& text)
{
  if (text == "diffuse")
    return Category::Diffuse;
  if (text == "transparent")
    return Category::Transparent;
  if (text == "composite")
    return Category::Composite;
  throw SceneSpecError("unknown object category '" + text + "'");
}

Shape parse_shape(const std::string& text)
{
  if (text == "box")
    return Shape::Box;
  if (text == "cylinder")
    return Shape::Cylinder;
  if (text == "glass-profile")
    return Shape::GlassProfile;
  throw SceneSpecError("unknown object shape '" + text + "'");
}

std::vector<ProfilePoint> ObjectSpec::effective_profile() const
{
  if (shape == Shape::Cylinder)
    return {{0.0, radius}, {height, radius}};
  return profile;
}

double ObjectSpec::top() const
{
  if (shape == Shape::GlassProfile)
    return profile.empty() ? 0.0 : profile.back().height;
  return height;
}

void SceneSpec::validate() const
{
  if (width < 8 || height < 8)
    throw SceneSpecError("frame must be at least 8x8");
  try {
    intrinsics.validate(width, height);
  } catch (const Error& e) {
    throw SceneSpecError(e.what());
  }
  if (frames < 1)
    throw SceneSpecError("frame count must be at least 1");
  if (!(noise.rgb_sigma >= 0.0))
    throw SceneSpecError("rgb noise sigma must be non-negative");
  if (!(noise.flicker_rate >= 0.0 && noise.flicker_rate <= 1.0))
    throw SceneSpecError("flicker rate must lie in [0, 1]");
  if (noise.edge_band < 0)
    throw SceneSpecError("edge band must be non-negative");
  if (!(brightness > 0.0))
    throw SceneSpecError("brightness must be positive");
  if (!(max_occlusion >= 0.0 && max_occlusion <= 1.0))
    throw SceneSpecError("occlusion limit must lie in [0, 1]");
  if (!(table.camera_height > 0.0) || !(table.tilt > 0.0 && table.tilt < kPi / 2) || !(table.wall_distance > 0.0))
    throw SceneSpecError("invalid table geometry");
  if (!(light.intensity >= 0.0))
    throw SceneSpecError("light intensity must be non-negative");

  std::set<std::string> ids;
  for (const auto& o : objects) {
    if (o.id.empty() || !ids.insert(o.id).second)
      throw SceneSpecError("object ids must be non-empty and unique");
    switch (o.shape) {
      case Shape::Box:
        if (!(o.size_x > 0.0 && o.size_y > 0.0 && o.height > 0.0))
          throw SceneSpecError("box '" + o.id + "' needs positive dimensions");
        break;
      case Shape::Cylinder:
        if (!(o.radius > 0.0 && o.height > 0.0))
          throw SceneSpecError("cylinder '" + o.id + "' needs positive dimensions");
        break;
      case Shape::GlassProfile:
        if (o.profile.size() < 2 || o.profile.front().height != 0.0)
          throw SceneSpecError("profile of '" + o.id + "' needs two points starting at height 0");
        for (std::size_t k = 0; k < o.profile.size(); ++k) {
          if (!(o.profile[k].radius >= 0.0))
            throw SceneSpecError("profile of '" + o.id + "' has a negative radius");
          if (k > 0 && !(o.profile[k].height >= o.profile[k - 1].height))
            throw SceneSpecError("profile of '" + o.id + "' must not descend");
        }
        if (!(o.profile.back().height > 0.0))
          throw SceneSpecError("profile of '" + o.id + "' has no height");
        break;
    }
    if (o.category == Category::Composite) {
      if (o.shape == Shape::Box)
        throw SceneSpecError("composite '" + o.id + "' must be round");
      if (!(o.label_from >= 0.0 && o.label_to > o.label_from))
        throw SceneSpecError("composite '" + o.id + "' needs a label band");
    }
  }
}

Point3D table_to_camera(double lateral, double up, double forward, const TableSpec& table)
{
  const Basis b = make_basis(table);
  const Vec3 p = to_camera(b, Vec3{lateral, up - b.camera_height, forward});
  return {p[0], p[1], p[2]};
}

Point3D object_centroid(const ObjectSpec& o, const TableSpec& table)
{
  double h = 0.0;
  if (o.shape == Shape::Box) {
    h = o.height / 2.0;
  } else {
    const auto profile = o.effective_profile();
    double volume = 0.0;
    double moment = 0.0;
    for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
      double v = 0.0;
      moment += segment_moment(profile[k].height, profile[k + 1].height, profile[k].radius,
                               profile[k + 1].radius, &v);
      volume += v;
    }
    if (volume <= 0.0)
      throw SceneSpecError("object '" + o.id + "' has no volume");
    h = moment / volume;
  }
  return table_to_camera(o.x, h, o.y, table);
}

RenderedScene render(const SceneSpec& spec)
{
  spec.validate();
  const int W = spec.width;
  const int H = spec.height;
  const CameraIntrinsics& K = spec.intrinsics;
  const Basis basis = make_basis(spec.table);
  const Vec3 origin{0.0, basis.camera_height, 0.0};
  const Vec3 light_pos{spec.light.x, spec.light.y, 0.0};

  std::vector<PixelRay> rays(static_cast<std::size_t>(W) * H);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const Vec3 d{(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
      rays[static_cast<std::size_t>(v) * W + u] = {d, to_scene(basis, d)};
    }

  auto shade = [&](const Vec3& p_cam, Vec3 n_cam, const Vec3& d_cam) {
    if (n_cam.dot(d_cam) > 0.0)
      n_cam = -n_cam;
    Vec3 l = light_pos - p_cam;
    l /= cv::norm(l);
    return 0.35 + 0.45 * spec.light.intensity * std::max(0.0, n_cam.dot(l)) +
           0.2 * std::max(0.0, n_cam.dot(basis.eu));
  };
  auto to_pixel = [&](const Vec3& c) {
    return cv::Vec3b(cv::saturate_cast<std::uint8_t>(c[0] * spec.brightness),
                     cv::saturate_cast<std::uint8_t>(c[1] * spec.brightness),
                     cv::saturate_cast<std::uint8_t>(c[2] * spec.brightness));
  };
  auto to_depth = [](double z) {
    return static_cast<std::uint16_t>(std::clamp(std::lround(z * 1000.0), 1L, 65535L));
  };

  // Background: table plane up to the wall, wall beyond.
  cv::Mat background(H, W, CV_8UC3);
  cv::Mat depth(H, W, CV_16UC1);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const PixelRay& r = rays[static_cast<std::size_t>(v) * W + u];
      double t = kInf;
      Vec3 albedo;
      Vec3 normal;
      if (r.scene[1] < 0.0) {
        const double tt = -basis.camera_height / r.scene[1];
        const Vec3 p = origin + tt * r.scene;
        if (p[2] <= spec.table.wall_distance) {
          t = tt;
          albedo = table_albedo(p[0], p[2]);
          normal = basis.eu;
        }
      }
      if (t == kInf) {
        t = r.scene[2] > 1e-9 ? spec.table.wall_distance / r.scene[2] : 1e3;
        const Vec3 p = origin + t * r.scene;
        albedo = wall_albedo(spec.table.texture_seed, p[0], p[1]);
        normal = -basis.ef;
      }
      background.at<cv::Vec3b>(v, u) = to_pixel(albedo * shade(t * r.cam, normal, r.cam));
      depth.at<std::uint16_t>(v, u) = t < 65.0 ? to_depth(t) : kDepthUnavailable;
    }

  // Per-object unoccluded hit maps, restricted to the projected bounding volume.
  const std::size_t n_obj = spec.objects.size();
  std::vector<Placed> placed;
  placed.reserve(n_obj);
  for (const auto& o : spec.objects)
    placed.push_back({&o, o.effective_profile(), std::cos(o.rotation), std::sin(o.rotation)});

  std::vector<cv::Rect> boxes(n_obj);
  std::vector<std::vector<Hit>> hits(n_obj);
  std::vector<cv::Mat> own(n_obj);
  for (std::size_t i = 0; i < n_obj; ++i) {
    const ObjectSpec& o = spec.objects[i];
    const double rad = max_radius(placed[i]);
    double umin = kInf, umax = -kInf, vmin = kInf, vmax = -kInf;
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 p{o.x + ((corner & 1) ? rad : -rad), (corner & 2) ? o.top() : 0.0,
                   o.y + ((corner & 4) ? rad : -rad)};
      const Vec3 c = to_camera(basis, p - origin);
      if (c[2] <= 0.01)
        throw SceneSpecError("object '" + o.id + "' is behind the camera");
      const double u = K.fx * c[0] / c[2] + K.cx;
      const double v = K.fy * c[1] / c[2] + K.cy;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    const cv::Rect full(0, 0, W, H);
    const cv::Rect box = cv::Rect(cv::Point(static_cast<int>(std::floor(umin)) - 2, static_cast<int>(std::floor(vmin)) - 2),
                                  cv::Point(static_cast<int>(std::ceil(umax)) + 3, static_cast<int>(std::ceil(vmax)) + 3)) &
                         full;
    boxes[i] = box;
    hits[i].assign(static_cast<std::size_t>(box.area()), Hit{});
    own[i] = cv::Mat::zeros(H, W, CV_8UC1);
    const Vec3 org = scene_to_local(placed[i], origin - Vec3{o.x, 0.0, o.y});
    for (int v = box.y; v < box.y + box.height; ++v)
      for (int u = box.x; u < box.x + box.width; ++u) {
        const Vec3 dir = scene_to_local(placed[i], rays[static_cast<std::size_t>(v) * W + u].scene);
        const Hit hit = o.shape == Shape::Box ? intersect_box(o, org, dir) : intersect_revolution(placed[i].profile, org, dir);
        if (hit.t < kInf) {
          hits[i][static_cast<std::size_t>(v - box.y) * box.width + (u - box.x)] = hit;
          own[i].at<std::uint8_t>(v, u) = 255;
        }
      }
    const int area = cv::countNonZero(own[i]);
    if (area == 0)
      throw SceneSpecError("object '" + o.id + "' is not visible");
    const cv::Rect extent = cv::boundingRect(own[i]);
    if (extent.x == 0 || extent.y == 0 || extent.x + extent.width == W || extent.y + extent.height == H)
      throw SceneSpecError("object '" + o.id + "' leaves the frame");
  }

  for (std::size_t i = 0; i < n_obj; ++i)
    for (std::size_t j = i + 1; j < n_obj; ++j) {
      const int overlap = cv::countNonZero(own[i] & own[j]);
      const int smaller = std::min(cv::countNonZero(own[i]), cv::countNonZero(own[j]));
      if (overlap > spec.max_occlusion * smaller)
        throw SceneSpecError("objects '" + spec.objects[i].id + "' and '" + spec.objects[j].id +
                             "' overlap beyond the occlusion limit");
    }

  auto hit_at = [&](std::size_t i, int u, int v) -> const Hit* {
    const cv::Rect& b = boxes[i];
    if (!b.contains(cv::Point(u, v)))
      return nullptr;
    const Hit& h = hits[i][static_cast<std::size_t>(v - b.y) * b.width + (u - b.x)];
    return h.t < kInf ? &h : nullptr;
  };

  // Visible object per pixel: nearest hit.
  cv::Mat label(H, W, CV_32SC1, cv::Scalar(-1));
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double best = kInf;
      for (std::size_t i = 0; i < n_obj; ++i) {
        const Hit* h = hit_at(i, u, v);
        if (h && h->t < best) {
          best = h->t;
          label.at<int>(v, u) = static_cast<int>(i);
        }
      }
    }

  RenderedScene out;
  cv::Mat rgb = background.clone();
  const Vec3 tint{205.0, 212.0, 218.0};
  const double cos_blob = std::cos(7.0 * kPi / 180.0);

  for (std::size_t i = 0; i < n_obj; ++i) {
    const ObjectSpec& o = spec.objects[i];
    ObjectTruth truth;
    truth.id = o.id;
    truth.category = o.category;
    truth.silhouette = cv::Mat::zeros(H, W, CV_8UC1);
    truth.transparency = cv::Mat::zeros(H, W, CV_8UC1);
    truth.highlight = cv::Mat::zeros(H, W, CV_8UC1);
    truth.centroid = object_centroid(o, spec.table);

    const std::vector<int> blob_segments =
        o.shape == Shape::Box ? std::vector<int>{} : highlight_segments(placed[i].profile);
    const int emblem_at = o.emblem && o.shape != Shape::Box ? emblem_segment(o, placed[i].profile) : -1;

    const cv::Rect& box = boxes[i];
    for (int v = box.y; v < box.y + box.height; ++v)
      for (int u = box.x; u < box.x + box.width; ++u) {
        if (label.at<int>(v, u) != static_cast<int>(i))
          continue;
        const Hit& hit = *hit_at(i, u, v);
        const PixelRay& r = rays[static_cast<std::size_t>(v) * W + u];
        const Vec3 p_cam = hit.t * r.cam;
        const Vec3 n_scene = local_to_scene(placed[i], hit.normal_local);
        const Vec3 n_cam = to_camera(basis, n_scene);
        truth.silhouette.at<std::uint8_t>(v, u) = 255;

        if (!is_transparent_part(o, hit)) {
          const double s = shade(p_cam, n_cam, r.cam);
          Vec3 color;
          if (o.white_cap && hit.surface == Surface::Top)
            color = Vec3{255.0, 255.0, 252.0} * std::min(1.0, 1.35 * s);
          else
            color = object_albedo(o, hit) * s;
          rgb.at<cv::Vec3b>(v, u) = to_pixel(color);
          depth.at<std::uint16_t>(v, u) = to_depth(p_cam[2]);
          continue;
        }

        truth.transparency.at<std::uint8_t>(v, u) = 255;
        depth.at<std::uint16_t>(v, u) = kDepthUnavailable;
        const cv::Vec3b bg = background.at<cv::Vec3b>(v, u);
        Vec3 color = 0.72 * Vec3{static_cast<double>(bg[0]), static_cast<double>(bg[1]), static_cast<double>(bg[2])} +
                     0.28 * spec.brightness * tint;

        bool rim = false;
        for (int dv = -1; dv <= 1 && !rim; ++dv)
          for (int du = -1; du <= 1; ++du) {
            const int uu = u + du;
            const int vv = v + dv;
            if (uu < 0 || vv < 0 || uu >= W || vv >= H || !own[i].at<std::uint8_t>(vv, uu)) {
              rim = true;
              break;
            }
          }
        if (rim)
          color *= 0.82;

        if (hit.surface == Surface::Side && hit.index == emblem_at) {
          const double h0 = placed[i].profile[hit.index].height;
          const double h1 = placed[i].profile[hit.index + 1].height;
          const double mid = 0.5 * (h0 + h1);
          const double rr = std::hypot(hit.local[0], hit.local[2]);
          const double arc = rr * std::atan2(hit.local[2], hit.local[0]);
          const double dh = hit.local[1] - mid;
          const bool stroke = std::abs(dh) <= 0.016 && std::abs(arc) <= 0.012 &&
                              (std::abs(frac((dh + 0.016) / 0.016) - 0.5) > 0.32 || std::abs(arc) < 0.0015);
          if (stroke)
            color = 0.65 * color + 0.35 * Vec3{245.0, 245.0, 245.0};
        }

        if (hit.surface == Surface::Side &&
            std::find(blob_segments.begin(), blob_segments.end(), hit.index) != blob_segments.end()) {
          const double h0 = placed[i].profile[hit.index].height;
          const double h1 = placed[i].profile[hit.index + 1].height;
          const double rel = (hit.local[1] - h0) / (h1 - h0);
          Vec3 l = light_pos - p_cam;
          l /= cv::norm(l);
          Vec3 half = l - p_cam / cv::norm(p_cam);
          const Vec3 half_scene = to_scene(basis, half);
          const double hn = std::hypot(half_scene[0], half_scene[2]);
          const double nn = std::hypot(n_scene[0], n_scene[2]);
          if (rel >= 0.35 && rel <= 0.65 && hn > 1e-12 && nn > 1e-12 &&
              (half_scene[0] * n_scene[0] + half_scene[2] * n_scene[2]) / (hn * nn) >= cos_blob) {
            truth.highlight.at<std::uint8_t>(v, u) = 255;
            rgb.at<cv::Vec3b>(v, u) = cv::Vec3b(255, 255, 255);
            continue;
          }
        }
        rgb.at<cv::Vec3b>(v, u) = to_pixel(color / spec.brightness);
      }
    out.truth.objects.push_back(std::move(truth));
  }

  // Boundaries between differently labeled pixels, widened into the flicker band.
  cv::Mat boundary = cv::Mat::zeros(H, W, CV_8UC1);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const int l = label.at<int>(v, u);
      if ((u + 1 < W && label.at<int>(v, u + 1) != l) || (v + 1 < H && label.at<int>(v + 1, u) != l)) {
        boundary.at<std::uint8_t>(v, u) = 255;
        if (u + 1 < W && label.at<int>(v, u + 1) != l)
          boundary.at<std::uint8_t>(v, u + 1) = 255;
        if (v + 1 < H && label.at<int>(v + 1, u) != l)
          boundary.at<std::uint8_t>(v + 1, u) = 255;
      }
    }
  if (spec.noise.edge_band > 0) {
    const int k = 2 * spec.noise.edge_band - 1;
    cv::dilate(boundary, out.truth.edge_band, cv::getStructuringElement(cv::MORPH_RECT, cv::Size(k, k)));
  } else {
    out.truth.edge_band = cv::Mat::zeros(H, W, CV_8UC1);
  }

  std::mt19937_64 rng(splitmix64(spec.seed));
  std::bernoulli_distribution drop(spec.noise.flicker_rate);
  const std::vector<std::int16_t> gauss = gaussian_table(spec.noise.rgb_sigma);
  for (int k = 0; k < spec.frames; ++k) {
    RGBDFrame f;
    f.rgb = rgb.clone();
    f.depth = depth.clone();
    f.intrinsics = K;
    f.frame_id = next_frame_id();
    if (spec.noise.rgb_sigma > 0.0) {
      for (int v = 0; v < H; ++v) {
        auto* row = f.rgb.ptr<std::uint8_t>(v);
        std::uint64_t bits = 0;
        for (int x = 0; x < 3 * W; ++x) {
          if ((x & 3) == 0)
            bits = rng();
          row[x] = cv::saturate_cast<std::uint8_t>(row[x] + gauss[bits & 0xFFFF]);
          bits >>= 16;
        }
      }
    }
    if (spec.noise.flicker_rate > 0.0 && spec.noise.edge_band > 0) {
      for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u)
          if (out.truth.edge_band.at<std::uint8_t>(v, u) && f.depth.at<std::uint16_t>(v, u) != kDepthUnavailable &&
              drop(rng))
            f.depth.at<std::uint16_t>(v, u) = kDepthUnavailable;
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

std::vector<SceneSpec> rotate_views(const SceneSpec& spec, std::size_t object_index, int n_views)
{
  if (n_views < 1)
    throw RangeError("rotate_views needs at least one view");
  if (object_index >= spec.objects.size())
    throw RangeError("rotate_views: object index out of range");
  std::vector<SceneSpec> out;
  out.reserve(static_cast<std::size_t>(n_views));
  const double base = spec.objects[object_index].rotation;
  for (int i = 0; i < n_views; ++i) {
    SceneSpec s = spec;
    if (i > 0)
      s.objects[object_index].rotation = base + 2.0 * kPi * i / n_views;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RGBDFrame> flicker_sequence(const RGBDFrame& base, double region_fraction, double rate, int n,
                                        std::uint64_t seed)
{
  base.validate();
  if (!(region_fraction >= 0.0 && region_fraction <= 1.0) || !(rate >= 0.0 && rate <= 1.0) || n < 1)
    throw RangeError("flicker_sequence: fraction and rate must lie in [0, 1], n >= 1");
  std::mt19937_64 rng(splitmix64(seed));
  std::bernoulli_distribution in_region(region_fraction);
  std::bernoulli_distribution drop(rate);
  cv::Mat region = cv::Mat::zeros(base.depth.size(), CV_8UC1);
  for (int v = 0; v < region.rows; ++v)
    for (int u = 0; u < region.cols; ++u)
      if (base.depth_available(u, v) && in_region(rng))
        region.at<std::uint8_t>(v, u) = 1;

  std::vector<RGBDFrame> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    RGBDFrame f;
    f.rgb = base.rgb.clone();
    f.depth = base.depth.clone();
    f.intrinsics = base.intrinsics;
    f.frame_id = next_frame_id();
    for (int v = 0; v < region.rows; ++v)
      for (int u = 0; u < region.cols; ++u)
        if (region.at<std::uint8_t>(v, u) && drop(rng))
          f.depth.at<std::uint16_t>(v, u) = kDepthUnavailable;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<ObjectSpec> catalog()
{
  std::vector<ObjectSpec> out;
  auto add = [&](ObjectSpec o) { out.push_back(std::move(o)); };

  ObjectSpec o;
  o.id = "cereal_box";
  o.category = Category::Diffuse;
  o.shape = Shape::Box;
  o.size_x = 0.07;
  o.size_y = 0.045;
  o.height = 0.14;
  o.texture_seed = 101;
  add(o);

  o = {};
  o.id = "soup_can";
  o.category = Category::Diffuse;
  o.shape = Shape::Cylinder;
  o.radius = 0.034;
  o.height = 0.11;
  o.texture_seed = 202;
  add(o);

  o = {};
  o.id = "detergent";
  o.category = Category::Diffuse;
  o.shape = Shape::GlassProfile;
  o.profile = {{0.0, 0.04}, {0.09, 0.04}, {0.115, 0.018}, {0.135, 0.018}};
  o.texture_seed = 303;
  o.white_cap = true;
  add(o);

  o = {};
  o.id = "water_glass";
  o.category = Category::Transparent;
  o.shape = Shape::GlassProfile;
  o.profile = {{0.0, 0.033}, {0.10, 0.030}};
  o.emblem = true;
  add(o);

  o = {};
  o.id = "flask";
  o.category = Category::Transparent;
  o.shape = Shape::GlassProfile;
  o.profile = {{0.0, 0.045}, {0.10, 0.016}, {0.14, 0.016}};
  o.emblem = true;
  add(o);

  o = {};
  o.id = "vase";
  o.category = Category::Transparent;
  o.shape = Shape::GlassProfile;
  o.profile = {{0.0, 0.038}, {0.06, 0.036}, {0.10, 0.026}, {0.17, 0.018}};
  o.emblem = true;
  add(o);

  constexpr std::uint64_t kLabelSeed = 4242;
  o = {};
  o.id = "soda_bottle";
  o.category = Category::Composite;
  o.shape = Shape::GlassProfile;
  o.profile = {{0.0, 0.033}, {0.16, 0.033}, {0.21, 0.013}, {0.24, 0.013}};
  o.texture_seed = kLabelSeed;
  o.label_from = 0.11;
  o.label_to = 0.155;
  add(o);

  o = {};
  o.id = "jar";
  o.category = Category::Composite;
  o.shape = Shape::GlassProfile;
  o.profile = {{0.0, 0.04}, {0.11, 0.04}, {0.11, 0.036}, {0.14, 0.036}};
  o.texture_seed = kLabelSeed;
  o.label_from = 0.11;
  o.label_to = 0.14;
  add(o);

  o = {};
  o.id = "spray_bottle";
  o.category = Category::Composite;
  o.shape = Shape::GlassProfile;
  o.profile = {{0.0, 0.03}, {0.15, 0.03}, {0.17, 0.012}, {0.20, 0.012}};
  o.texture_seed = kLabelSeed;
  o.label_from = 0.0;
  o.label_to = 0.04;
  add(o);

  return out;
}

ObjectSpec catalog_object(const std::string& id)
{
  for (auto& o : catalog())
    if (o.id == id)
      return o;
  throw SceneSpecError("no catalog object named '" + id + "'");
}

}  // namespace mfr
