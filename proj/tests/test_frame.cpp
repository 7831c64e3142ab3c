#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <opencv2/imgcodecs.hpp>

#include "mfr/error.hpp"
#include "mfr/frame.hpp"
#include "support/oracles.hpp"

using namespace mfr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("mfr_test_frame_" + name);
  fs::remove_all(p);
  return p;
}

RGBDFrame random_frame(int w, int h, std::mt19937& rng)
{
  RGBDFrame f;
  f.rgb = oracle::random_image(h, w, CV_8UC3, rng);
  f.depth.create(h, w, CV_16UC1);
  std::uniform_int_distribution<int> d(0, 65535);
  for (auto it = f.depth.begin<std::uint16_t>(); it != f.depth.end<std::uint16_t>(); ++it)
    *it = static_cast<std::uint16_t>(d(rng) % 5 == 0 ? 0 : d(rng));
  f.intrinsics = {500.0, 510.0, w / 2.0, h / 2.0};
  return f;
}

}  // namespace

TEST_CASE("luminance fixed points")
{
  CHECK(luminance(255, 255, 255) == 255);
  CHECK(luminance(0, 0, 0) == 0);
  // round(0.299 * 255) = round(76.245)
  CHECK(luminance(255, 0, 0) == 76);
  CHECK(luminance(0, 255, 0) == 150);
  CHECK(luminance(0, 0, 255) == 29);
}

TEST_CASE("luminance matches the exactly rounded weighted sum and is monotone per channel")
{
  for (int r = 0; r < 256; r += 5)
    for (int g = 0; g < 256; g += 7)
      for (int b = 0; b < 256; b += 11) {
        const auto L = luminance(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                 static_cast<std::uint8_t>(b));
        // exact rational rounding, half up
        const int n = 299 * r + 587 * g + 114 * b;
        CHECK(static_cast<int>(L) == n / 1000 + (n % 1000 >= 500 ? 1 : 0));
        if (r < 255)
          CHECK(luminance(static_cast<std::uint8_t>(r + 1), static_cast<std::uint8_t>(g),
                          static_cast<std::uint8_t>(b)) >= L);
        if (g < 255)
          CHECK(luminance(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g + 1),
                          static_cast<std::uint8_t>(b)) >= L);
        if (b < 255)
          CHECK(luminance(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                          static_cast<std::uint8_t>(b + 1)) >= L);
      }
}

TEST_CASE("luminance image agrees with the scalar form")
{
  std::mt19937 rng(3);
  const cv::Mat rgb = oracle::random_image(7, 9, CV_8UC3, rng);
  const cv::Mat L = luminance(rgb);
  REQUIRE(L.type() == CV_8UC1);
  for (int v = 0; v < rgb.rows; ++v)
    for (int u = 0; u < rgb.cols; ++u) {
      const auto p = rgb.at<cv::Vec3b>(v, u);
      CHECK(L.at<std::uint8_t>(v, u) == luminance(p[0], p[1], p[2]));
    }
}

TEST_CASE("backproject")
{
  const CameraIntrinsics k{525.0, 525.0, 319.5, 239.5};
  const Point3D c = backproject(319.5, 239.5, 1000, k);
  CHECK(c.x == 0.0);
  CHECK(c.y == 0.0);
  CHECK(c.z == 1.0);

  const Point3D p = backproject(500, 0, 1000, {500.0, 500.0, 0.0, 0.0});
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == 0.0);
  CHECK(p.z == 1.0);

  CHECK_THROWS_AS(backproject(10, 10, 0, k), UnavailableDepthError);
}

TEST_CASE("backprojected ray direction does not depend on depth")
{
  const CameraIntrinsics k{480.0, 470.0, 300.0, 200.0};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uv(0.0, 600.0);
  std::uniform_int_distribution<int> d(1, 60000);
  for (int i = 0; i < 200; ++i) {
    const double u = uv(rng), v = uv(rng);
    const auto z1 = static_cast<std::uint16_t>(d(rng)), z2 = static_cast<std::uint16_t>(d(rng));
    const Point3D a = backproject(u, v, z1, k), b = backproject(u, v, z2, k);
    CHECK(a.x / a.z == doctest::Approx(b.x / b.z).epsilon(1e-12));
    CHECK(a.y / a.z == doctest::Approx(b.y / b.z).epsilon(1e-12));
  }
}

TEST_CASE("intrinsics validation")
{
  CHECK_NOTHROW(CameraIntrinsics{}.validate(640, 480));
  CHECK_THROWS_AS((CameraIntrinsics{0.0, 525.0, 319.5, 239.5}.validate(640, 480)), ConfigError);
  CHECK_THROWS_AS((CameraIntrinsics{525.0, -1.0, 319.5, 239.5}.validate(640, 480)), ConfigError);
  CHECK_THROWS_AS((CameraIntrinsics{525.0, 525.0, 640.0, 239.5}.validate(640, 480)), ConfigError);
  CHECK_THROWS_AS((CameraIntrinsics{525.0, 525.0, 319.5, -0.5}.validate(640, 480)), ConfigError);
}

TEST_CASE("meta.txt round trip")
{
  const CameraIntrinsics k{525.25, 524.5, 319.5, 239.125};
  CHECK(parse_intrinsics(format_intrinsics(k)) == k);
  CHECK_THROWS_AS(parse_intrinsics("fx=1\nfy=1\ncx=1\n"), FormatError);
}

TEST_CASE("save_frame then load_frame is bit exact")
{
  std::mt19937 rng(5);
  const RGBDFrame f = random_frame(64, 48, rng);
  const fs::path dir = scratch_dir("roundtrip");
  save_frame(f, dir);
  const RGBDFrame g = load_frame(dir);
  CHECK(g.width() == 64);
  CHECK(g.height() == 48);
  CHECK(cv::countNonZero(g.rgb.reshape(1) != f.rgb.reshape(1)) == 0);
  CHECK(cv::countNonZero(g.depth != f.depth) == 0);
  CHECK(g.intrinsics == f.intrinsics);
  fs::remove_all(dir);
}

TEST_CASE("zero depth reads back as unavailable")
{
  RGBDFrame f;
  f.rgb = cv::Mat(4, 4, CV_8UC3, cv::Scalar(10, 20, 30));
  f.depth = cv::Mat(4, 4, CV_16UC1, cv::Scalar(800));
  f.depth.at<std::uint16_t>(1, 2) = 0;
  f.intrinsics = {100.0, 100.0, 2.0, 2.0};
  const fs::path dir = scratch_dir("sentinel");
  save_frame(f, dir);
  const RGBDFrame g = load_frame(dir);
  CHECK_FALSE(g.depth_available(2, 1));
  CHECK(g.depth_available(1, 2));
  fs::remove_all(dir);
}

TEST_CASE("load_frame errors")
{
  const fs::path dir = scratch_dir("errors");
  CHECK_THROWS_AS(load_frame(dir), IoError);

  fs::create_directories(dir);
  cv::imwrite((dir / "rgb.png").string(), cv::Mat(480, 640, CV_8UC3, cv::Scalar::all(0)));
  cv::imwrite((dir / "depth.png").string(), cv::Mat(240, 320, CV_16UC1, cv::Scalar::all(500)));
  std::ofstream(dir / "meta.txt") << format_intrinsics({});
  CHECK_THROWS_AS(load_frame(dir), FormatError);

  cv::imwrite((dir / "depth.png").string(), cv::Mat(480, 640, CV_8UC1, cv::Scalar::all(5)));
  CHECK_THROWS_AS(load_frame(dir), FormatError);

  cv::imwrite((dir / "depth.png").string(), cv::Mat(480, 640, CV_16UC1, cv::Scalar::all(500)));
  const RGBDFrame ok = load_frame(dir);
  CHECK(ok.width() == 640);
  CHECK(ok.height() == 480);
  fs::remove_all(dir);
}

TEST_CASE("validate rejects unregistered pairs")
{
  RGBDFrame f;
  f.rgb = cv::Mat(10, 10, CV_8UC3);
  f.depth = cv::Mat(10, 11, CV_16UC1);
  f.intrinsics = {10.0, 10.0, 5.0, 5.0};
  CHECK_THROWS_AS(f.validate(), DimensionError);
  f.depth = cv::Mat(10, 10, CV_32FC1);
  CHECK_THROWS_AS(f.validate(), FormatError);
}

TEST_CASE("frame ids increase")
{
  const auto a = next_frame_id();
  const auto b = next_frame_id();
  CHECK(b > a);
}
