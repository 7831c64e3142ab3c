#include <doctest.h>

#include <algorithm>
#include <bit>
#include <numbers>
#include <random>

#include "mfr/error.hpp"
#include "mfr/response_maps.hpp"
#include "support/oracles.hpp"

using namespace mfr;

namespace {

constexpr double kPi = std::numbers::pi;

QuantizedMap random_quantized(int w, int h, int n_bins, double density, std::mt19937& rng,
                              ChannelId channel = ChannelId::M1)
{
  QuantizedMap q;
  q.n_bins = n_bins;
  q.channel = channel;
  q.bins.create(h, w, CV_8U);
  std::bernoulli_distribution defined(density);
  std::uniform_int_distribution<int> bin(0, n_bins - 1);
  for (auto it = q.bins.begin<std::uint8_t>(); it != q.bins.end<std::uint8_t>(); ++it)
    *it = defined(rng) ? static_cast<std::uint8_t>(bin(rng)) : kNoBin;
  return q;
}

cv::Vec3f normal_from(double inclination, double azimuth)
{
  return {static_cast<float>(std::sin(inclination) * std::cos(azimuth)),
          static_cast<float>(std::sin(inclination) * std::sin(azimuth)), static_cast<float>(-std::cos(inclination))};
}

}  // namespace

TEST_CASE("orientation quantization edges")
{
  CHECK(quantize_orientation(0.0) == 0);
  CHECK(quantize_orientation(kPi / 2) == 4);
  CHECK(quantize_orientation(kPi - 1e-9) == 7);
  CHECK(quantize_orientation(kPi) == 0);
  CHECK_THROWS_AS(quantize_orientation(-0.1), RangeError);
  CHECK_THROWS_AS(quantize_orientation(3.5), RangeError);
}

TEST_CASE("orientation quantization equals floor(theta / (pi/8))")
{
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> theta(0.0, kPi);
  for (int i = 0; i < 10000; ++i) {
    const double t = theta(rng);
    CHECK(quantize_orientation(t) == static_cast<int>(std::floor(t / (kPi / 8))) % 8);
  }
}

TEST_CASE("normal quantization")
{
  CHECK(quantize_normal({0.0f, 0.0f, -1.0f}) == 8);
  CHECK(quantize_normal(normal_from(kPi / 4, 0.0)) == 0);
  CHECK(quantize_normal(normal_from(kPi / 4, kPi / 2 + 0.01)) == 2);
  CHECK(quantize_normal(normal_from(14.0 * kPi / 180, 1.0)) == 8);
  CHECK(quantize_normal(normal_from(16.0 * kPi / 180, 1.0)) == 1);
  CHECK_THROWS_AS(quantize_normal({0.0f, 0.0f, -2.0f}), RangeError);
}

TEST_CASE("normal quantization equals the direct sector computation")
{
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> inc(0.0, kPi / 2 - 1e-3), az(0.0, 2 * kPi);
  for (int i = 0; i < 10000; ++i) {
    const cv::Vec3f n = normal_from(inc(rng), az(rng));
    // reference from the stored float components
    const double nx = n[0], ny = n[1], nz = n[2];
    const double incl = std::acos(std::min(1.0, -nz / std::sqrt(nx * nx + ny * ny + nz * nz))) * 180.0 / kPi;
    int expected = 8;
    if (incl >= 15.0) {
      double a = std::atan2(ny, nx);
      if (a < 0)
        a += 2 * kPi;
      expected = std::min(7, static_cast<int>(a / (kPi / 4)));
    }
    CHECK(quantize_normal(n) == expected);
  }
}

TEST_CASE("quantized bins are defined exactly where the source is valid")
{
  std::mt19937 rng(3);
  OrientationMap o;
  o.orientation.create(20, 20, CV_32F);
  o.magnitude = cv::Mat(20, 20, CV_32F, cv::Scalar(50));
  o.valid.create(20, 20, CV_8U);
  std::uniform_real_distribution<float> t(0.0f, 3.14f);
  std::bernoulli_distribution valid(0.5);
  for (int i = 0; i < 400; ++i) {
    o.orientation.at<float>(i) = t(rng);
    o.valid.data[i] = valid(rng) ? 255 : 0;
  }
  const QuantizedMap q = quantize(o, ChannelId::M1);
  for (int i = 0; i < 400; ++i) {
    if (o.valid.data[i])
      CHECK(q.bins.data[i] == quantize_orientation(o.orientation.at<float>(i)));
    else
      CHECK(q.bins.data[i] == kNoBin);
  }
}

TEST_CASE("spreading a single pixel")
{
  QuantizedMap q;
  q.bins = cv::Mat(11, 11, CV_8U, cv::Scalar(kNoBin));
  q.bins.at<std::uint8_t>(5, 5) = 3;
  const SpreadMap s0 = spread(q, 0);
  CHECK(cv::countNonZero(s0.masks) == 1);
  CHECK(s0.masks.at<std::uint16_t>(5, 5) == (1u << 3));
  const SpreadMap s2 = spread(q, 2);
  CHECK(cv::countNonZero(s2.masks) == 25);
  CHECK(cv::countNonZero(s2.masks(cv::Rect(3, 3, 5, 5))) == 25);
  CHECK_THROWS_AS(spread(q, -1), RangeError);
}

TEST_CASE("spread equals the naive window OR")
{
  std::mt19937 rng(4);
  for (int t : {0, 1, 3, 5}) {
    const QuantizedMap q = random_quantized(23, 17, 8, 0.1, rng);
    const SpreadMap s = spread(q, t);
    for (int y = 0; y < 17; ++y)
      for (int x = 0; x < 23; ++x)
        CHECK(s.masks.at<std::uint16_t>(y, x) == oracle::spread_mask(q.bins, x, y, t));
  }
}

TEST_CASE("spread bits are monotone in the radius and T=0 has at most one bit")
{
  std::mt19937 rng(5);
  const QuantizedMap q = random_quantized(30, 30, 9, 0.2, rng, ChannelId::M2);
  cv::Mat previous = spread(q, 0).masks;
  for (int i = 0; i < 900; ++i)
    CHECK(std::popcount(previous.at<std::uint16_t>(i)) <= 1);
  for (int t = 1; t <= 5; ++t) {
    const cv::Mat now = spread(q, t).masks;
    CHECK(cv::countNonZero((previous & ~now) != 0) == 0);
    previous = now;
  }
}

TEST_CASE("orientation LUT")
{
  const ResponseLUT lut = ResponseLUT::orientation();
  for (int b = 0; b < 8; ++b) {
    CHECK(lut(b, 1u << b) == 1.0f);
    CHECK(lut(b, 0) == 0.0f);
  }
  CHECK(lut(0, 1u << 4) == doctest::Approx(0.0).epsilon(1e-7));
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      CHECK(lut(a, 1u << b) == lut(b, 1u << a));
      CHECK(lut.pairwise(a, b) == doctest::Approx(oracle::orientation_similarity(a, b, 8)));
    }
}

TEST_CASE("normal LUT")
{
  const ResponseLUT lut = ResponseLUT::normal();
  CHECK(lut(8, 1u << 8) == 1.0f);
  for (int a = 0; a < 8; ++a) {
    CHECK(lut(8, 1u << a) == 0.0f);
    CHECK(lut(a, 1u << 8) == 0.0f);
  }
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) {
      CHECK(lut(a, 1u << b) == lut(b, 1u << a));
      CHECK(lut.pairwise(a, b) == doctest::Approx(oracle::normal_similarity(a, b, 9)));
    }
}

TEST_CASE("LUT over a mask is the best single-bit similarity")
{
  for (const auto& [lut, n] : {std::pair{ResponseLUT::orientation(), 8}, std::pair{ResponseLUT::normal(), 9}})
    for (int b = 0; b < n; ++b)
      for (std::uint32_t m = 0; m < (1u << n); ++m) {
        float best = 0.0f;
        for (int k = 0; k < n; ++k)
          if (m & (1u << k))
            best = std::max(best, lut(b, 1u << k));
        REQUIRE(lut(b, m) == best);
      }
}

TEST_CASE("response maps")
{
  std::mt19937 rng(6);
  const ResponseLUT lut = ResponseLUT::orientation();

  QuantizedMap empty;
  empty.bins = cv::Mat(8, 8, CV_8U, cv::Scalar(kNoBin));
  const ResponseMaps zero = build_response_maps(spread(empty, 2), lut);
  for (const auto& b : zero.bins)
    CHECK(std::all_of(b.begin(), b.end(), [](float v) { return v == 0.0f; }));

  QuantizedMap one = empty;
  one.bins = one.bins.clone();
  one.bins.at<std::uint8_t>(4, 4) = 3;
  const ResponseMaps r = build_response_maps(spread(one, 0), lut);
  CHECK(r.at(3, 4, 4) == 1.0f);

  const QuantizedMap q = random_quantized(19, 13, 8, 0.3, rng);
  const SpreadMap s = spread(q, 2);
  const ResponseMaps maps = build_response_maps(s, lut);
  REQUIRE(maps.width == 19);
  REQUIRE(maps.height == 13);
  for (int b = 0; b < 8; ++b)
    for (int y = 0; y < 13; ++y)
      for (int x = 0; x < 19; ++x) {
        const float direct = lut(b, s.masks.at<std::uint16_t>(y, x));
        CHECK(maps.at(b, x, y) == direct);
        CHECK(maps.row(b, y)[x] == direct);
        CHECK(maps.bins[static_cast<std::size_t>(b)][static_cast<std::size_t>(y * 19 + x)] == direct);
      }
}
