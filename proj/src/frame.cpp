#include "mfr/frame.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mfr/error.hpp"

namespace mfr {

void CameraIntrinsics::validate(int width, int height) const
{
  if (!(fx > 0.0) || !(fy > 0.0))
    throw ConfigError("focal lengths must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw ConfigError("principal point outside the image");
}

void RGBDFrame::validate() const
{
  if (rgb.empty() || depth.empty())
    throw FormatError("frame has an empty image");
  if (rgb.type() != CV_8UC3)
    throw FormatError("rgb image must be 8-bit, 3-channel");
  if (depth.type() != CV_16UC1)
    throw FormatError("depth image must be 16-bit, 1-channel");
  if (rgb.size() != depth.size())
    throw DimensionError("rgb and depth sizes differ");
}

std::uint64_t next_frame_id()
{
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
  // Integer weights in thousandths; +500 rounds half up.
  const unsigned sum = 299u * r + 587u * g + 114u * b + 500u;
  return static_cast<std::uint8_t>(std::min(255u, sum / 1000u));
}

cv::Mat luminance(const cv::Mat& rgb)
{
  CV_Assert(rgb.type() == CV_8UC3);
  cv::Mat out(rgb.size(), CV_8UC1);
  for (int v = 0; v < rgb.rows; ++v) {
    const auto* src = rgb.ptr<cv::Vec3b>(v);
    auto* dst = out.ptr<std::uint8_t>(v);
    for (int u = 0; u < rgb.cols; ++u)
      dst[u] = luminance(src[u][0], src[u][1], src[u][2]);
  }
  return out;
}

Point3D backproject(double u, double v, std::uint16_t depth_mm, const CameraIntrinsics& intrinsics)
{
  if (depth_mm == kDepthUnavailable)
    throw UnavailableDepthError("cannot backproject a pixel without depth");
  const double z = depth_mm / 1000.0;
  return {(u - intrinsics.cx) * z / intrinsics.fx, (v - intrinsics.cy) * z / intrinsics.fy, z};
}

CameraIntrinsics parse_intrinsics(const std::string& text)
{
  std::map<std::string, double> values;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("meta.txt: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    double parsed = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw FormatError("meta.txt: bad number for " + key);
    values[key] = parsed;
  }
  CameraIntrinsics k;
  for (auto [name, field] : {std::pair{"fx", &k.fx}, {"fy", &k.fy}, {"cx", &k.cx}, {"cy", &k.cy}}) {
    auto it = values.find(name);
    if (it == values.end())
      throw FormatError(std::string("meta.txt: missing ") + name);
    *field = it->second;
  }
  return k;
}

namespace {

std::string shortest(double value)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string read_text(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_intrinsics(const CameraIntrinsics& intrinsics)
{
  return "fx=" + shortest(intrinsics.fx) + "\nfy=" + shortest(intrinsics.fy) + "\ncx=" +
         shortest(intrinsics.cx) + "\ncy=" + shortest(intrinsics.cy) + "\n";
}

RGBDFrame load_frame(const std::filesystem::path& directory)
{
  const auto rgb_path = directory / "rgb.png";
  const auto depth_path = directory / "depth.png";
  const auto meta_path = directory / "meta.txt";
  for (const auto& p : {rgb_path, depth_path, meta_path})
    if (!std::filesystem::is_regular_file(p))
      throw IoError("missing frame file " + p.string());

  cv::Mat bgr = cv::imread(rgb_path.string(), cv::IMREAD_UNCHANGED);
  cv::Mat depth = cv::imread(depth_path.string(), cv::IMREAD_UNCHANGED);
  if (bgr.empty())
    throw IoError("cannot decode " + rgb_path.string());
  if (depth.empty())
    throw IoError("cannot decode " + depth_path.string());
  if (bgr.type() != CV_8UC3)
    throw FormatError(rgb_path.string() + " is not 8-bit, 3-channel");
  if (depth.type() != CV_16UC1)
    throw FormatError(depth_path.string() + " is not 16-bit, 1-channel");
  if (bgr.size() != depth.size())
    throw FormatError("rgb and depth dimensions differ in " + directory.string());

  RGBDFrame frame;
  cv::cvtColor(bgr, frame.rgb, cv::COLOR_BGR2RGB);
  frame.depth = depth;
  frame.intrinsics = parse_intrinsics(read_text(meta_path));
  frame.intrinsics.validate(frame.width(), frame.height());
  frame.frame_id = next_frame_id();
  return frame;
}

void save_frame(const RGBDFrame& frame, const std::filesystem::path& directory)
{
  frame.validate();
  std::filesystem::create_directories(directory);
  cv::Mat bgr;
  cv::cvtColor(frame.rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite((directory / "rgb.png").string(), bgr))
    throw IoError("cannot write rgb.png in " + directory.string());
  if (!cv::imwrite((directory / "depth.png").string(), frame.depth))
    throw IoError("cannot write depth.png in " + directory.string());
  std::ofstream meta(directory / "meta.txt");
  if (!meta)
    throw IoError("cannot write meta.txt in " + directory.string());
  meta << format_intrinsics(frame.intrinsics);
}

}  // namespace mfr
