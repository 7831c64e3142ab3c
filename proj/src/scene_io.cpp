#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mfr/error.hpp"
#include "mfr/synthscene.hpp"

namespace mfr {

namespace {

std::string fmt(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text)
{
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw SceneSpecError("bad number for '" + key + "': '" + text + "'");
  return v;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text)
{
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw SceneSpecError("bad integer for '" + key + "': '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
  if (text == "1" || text == "true")
    return true;
  if (text == "0" || text == "false")
    return false;
  throw SceneSpecError("bad flag for '" + key + "': '" + text + "'");
}

// "h:r,h:r,..."
std::vector<ProfilePoint> parse_profile(const std::string& key, const std::string& text)
{
  std::vector<ProfilePoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw SceneSpecError("profile point for '" + key + "' must be height:radius");
    out.push_back({parse_double(key, trim(item.substr(0, colon))), parse_double(key, trim(item.substr(colon + 1)))});
  }
  return out;
}

void set_object_field(ObjectSpec& o, const std::string& field, const std::string& key, const std::string& value)
{
  if (field == "id")
    o.id = value;
  else if (field == "category")
    o.category = parse_category(value);
  else if (field == "shape")
    o.shape = parse_shape(value);
  else if (field == "x")
    o.x = parse_double(key, value);
  else if (field == "y")
    o.y = parse_double(key, value);
  else if (field == "rotation")
    o.rotation = parse_double(key, value);
  else if (field == "size_x")
    o.size_x = parse_double(key, value);
  else if (field == "size_y")
    o.size_y = parse_double(key, value);
  else if (field == "height")
    o.height = parse_double(key, value);
  else if (field == "radius")
    o.radius = parse_double(key, value);
  else if (field == "profile")
    o.profile = parse_profile(key, value);
  else if (field == "texture_seed")
    o.texture_seed = parse_integer<std::uint64_t>(key, value);
  else if (field == "label_from")
    o.label_from = parse_double(key, value);
  else if (field == "label_to")
    o.label_to = parse_double(key, value);
  else if (field == "white_cap")
    o.white_cap = parse_bool(key, value);
  else if (field == "emblem")
    o.emblem = parse_bool(key, value);
  else
    throw SceneSpecError("unknown scene key '" + key + "'");
}

}  // namespace

std::string format_scene(const SceneSpec& spec)
{
  std::ostringstream os;
  os << "width=" << spec.width << '\n'
     << "height=" << spec.height << '\n'
     << "fx=" << fmt(spec.intrinsics.fx) << '\n'
     << "fy=" << fmt(spec.intrinsics.fy) << '\n'
     << "cx=" << fmt(spec.intrinsics.cx) << '\n'
     << "cy=" << fmt(spec.intrinsics.cy) << '\n'
     << "table.camera_height=" << fmt(spec.table.camera_height) << '\n'
     << "table.tilt=" << fmt(spec.table.tilt) << '\n'
     << "table.wall_distance=" << fmt(spec.table.wall_distance) << '\n'
     << "table.texture_seed=" << spec.table.texture_seed << '\n'
     << "light.x=" << fmt(spec.light.x) << '\n'
     << "light.y=" << fmt(spec.light.y) << '\n'
     << "light.intensity=" << fmt(spec.light.intensity) << '\n'
     << "noise.rgb_sigma=" << fmt(spec.noise.rgb_sigma) << '\n'
     << "noise.flicker_rate=" << fmt(spec.noise.flicker_rate) << '\n'
     << "noise.edge_band=" << spec.noise.edge_band << '\n'
     << "brightness=" << fmt(spec.brightness) << '\n'
     << "frames=" << spec.frames << '\n'
     << "max_occlusion=" << fmt(spec.max_occlusion) << '\n'
     << "seed=" << spec.seed << '\n';
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& o = spec.objects[i];
    const std::string p = "object." + std::to_string(i) + ".";
    os << p << "id=" << o.id << '\n'
       << p << "category=" << to_string(o.category) << '\n'
       << p << "shape=" << to_string(o.shape) << '\n'
       << p << "x=" << fmt(o.x) << '\n'
       << p << "y=" << fmt(o.y) << '\n'
       << p << "rotation=" << fmt(o.rotation) << '\n';
    switch (o.shape) {
      case Shape::Box:
        os << p << "size_x=" << fmt(o.size_x) << '\n'
           << p << "size_y=" << fmt(o.size_y) << '\n'
           << p << "height=" << fmt(o.height) << '\n';
        break;
      case Shape::Cylinder:
        os << p << "radius=" << fmt(o.radius) << '\n' << p << "height=" << fmt(o.height) << '\n';
        break;
      case Shape::GlassProfile: {
        os << p << "profile=";
        for (std::size_t k = 0; k < o.profile.size(); ++k)
          os << (k ? "," : "") << fmt(o.profile[k].height) << ':' << fmt(o.profile[k].radius);
        os << '\n';
        break;
      }
    }
    os << p << "texture_seed=" << o.texture_seed << '\n';
    if (o.category == Category::Composite)
      os << p << "label_from=" << fmt(o.label_from) << '\n' << p << "label_to=" << fmt(o.label_to) << '\n';
    if (o.white_cap)
      os << p << "white_cap=1\n";
    if (o.emblem)
      os << p << "emblem=1\n";
  }
  return os.str();
}

SceneSpec parse_scene(const std::string& text)
{
  SceneSpec spec;
  std::map<std::size_t, ObjectSpec> objects;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SceneSpecError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key.rfind("object.", 0) == 0) {
      const auto dot = key.find('.', 7);
      if (dot == std::string::npos)
        throw SceneSpecError("line " + std::to_string(line_no) + ": expected object.N.field");
      const auto index = parse_integer<std::size_t>(key, key.substr(7, dot - 7));
      set_object_field(objects[index], key.substr(dot + 1), key, value);
    } else if (key == "width") {
      spec.width = parse_integer<int>(key, value);
    } else if (key == "height") {
      spec.height = parse_integer<int>(key, value);
    } else if (key == "fx") {
      spec.intrinsics.fx = parse_double(key, value);
    } else if (key == "fy") {
      spec.intrinsics.fy = parse_double(key, value);
    } else if (key == "cx") {
      spec.intrinsics.cx = parse_double(key, value);
    } else if (key == "cy") {
      spec.intrinsics.cy = parse_double(key, value);
    } else if (key == "table.camera_height") {
      spec.table.camera_height = parse_double(key, value);
    } else if (key == "table.tilt") {
      spec.table.tilt = parse_double(key, value);
    } else if (key == "table.wall_distance") {
      spec.table.wall_distance = parse_double(key, value);
    } else if (key == "table.texture_seed") {
      spec.table.texture_seed = parse_integer<std::uint64_t>(key, value);
    } else if (key == "light.x") {
      spec.light.x = parse_double(key, value);
    } else if (key == "light.y") {
      spec.light.y = parse_double(key, value);
    } else if (key == "light.intensity") {
      spec.light.intensity = parse_double(key, value);
    } else if (key == "noise.rgb_sigma") {
      spec.noise.rgb_sigma = parse_double(key, value);
    } else if (key == "noise.flicker_rate") {
      spec.noise.flicker_rate = parse_double(key, value);
    } else if (key == "noise.edge_band") {
      spec.noise.edge_band = parse_integer<int>(key, value);
    } else if (key == "brightness") {
      spec.brightness = parse_double(key, value);
    } else if (key == "frames") {
      spec.frames = parse_integer<int>(key, value);
    } else if (key == "max_occlusion") {
      spec.max_occlusion = parse_double(key, value);
    } else if (key == "seed") {
      spec.seed = parse_integer<std::uint64_t>(key, value);
    } else {
      throw SceneSpecError("unknown scene key '" + key + "'");
    }
  }
  std::size_t expected = 0;
  for (auto& [index, o] : objects) {
    if (index != expected++)
      throw SceneSpecError("object indices must be consecutive from 0");
    spec.objects.push_back(std::move(o));
  }
  spec.validate();
  return spec;
}

SceneSpec load_scene(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read scene spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

void save_scene(const SceneSpec& spec, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write scene spec " + path.string());
  out << format_scene(spec);
  if (!out)
    throw IoError("failed writing scene spec " + path.string());
}

}  // namespace mfr
