#include "mfr/response_maps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfr/error.hpp"

namespace mfr {

namespace {

void check_bins(int n_bins, int min_bins)
{
  if (n_bins < min_bins || n_bins > kMaxBins)
    throw ConfigError("bin count out of range");
}

}  // namespace

int quantize_orientation(double theta, int n_bins)
{
  constexpr double pi = std::numbers::pi;
  if (!(theta >= 0.0 && theta <= pi))
    throw RangeError("orientation outside [0, pi]");
  const int bin = static_cast<int>(std::floor(theta / (pi / n_bins)));
  return bin >= n_bins ? 0 : bin;
}

int quantize_normal(const cv::Vec3f& normal, int n_bins)
{
  const double nx = normal[0], ny = normal[1], nz = normal[2];
  const double len = std::sqrt(nx * nx + ny * ny + nz * nz);
  if (std::abs(len - 1.0) > 1e-4)
    throw RangeError("normal is not unit length");
  if (nz > 1e-6)
    throw RangeError("normal faces away from the camera");

  const int sectors = n_bins - 1;
  const double inclination = std::acos(std::clamp(-nz / len, -1.0, 1.0));
  if (inclination < kFlatInclinationDeg * std::numbers::pi / 180.0)
    return sectors;
  double azimuth = std::atan2(ny, nx);
  if (azimuth < 0.0)
    azimuth += 2.0 * std::numbers::pi;
  const int bin = static_cast<int>(std::floor(azimuth / (2.0 * std::numbers::pi / sectors)));
  return std::clamp(bin, 0, sectors - 1);
}

QuantizedMap quantize(const OrientationMap& map, ChannelId channel, int n_bins)
{
  check_bins(n_bins, 2);
  QuantizedMap q;
  q.n_bins = n_bins;
  q.channel = channel;
  q.bins = cv::Mat(map.orientation.size(), CV_8U, cv::Scalar(kNoBin));
  for (int v = 0; v < q.bins.rows; ++v) {
    const auto* ori = map.orientation.ptr<float>(v);
    const auto* val = map.valid.ptr<std::uint8_t>(v);
    auto* out = q.bins.ptr<std::uint8_t>(v);
    for (int u = 0; u < q.bins.cols; ++u)
      if (val[u])
        out[u] = static_cast<std::uint8_t>(quantize_orientation(ori[u], n_bins));
  }
  return q;
}

QuantizedMap quantize(const NormalMap& map, ChannelId channel, int n_bins)
{
  check_bins(n_bins, 3);
  QuantizedMap q;
  q.n_bins = n_bins;
  q.channel = channel;
  q.bins = cv::Mat(map.normals.size(), CV_8U, cv::Scalar(kNoBin));
  for (int v = 0; v < q.bins.rows; ++v) {
    const auto* n = map.normals.ptr<cv::Vec3f>(v);
    const auto* val = map.valid.ptr<std::uint8_t>(v);
    auto* out = q.bins.ptr<std::uint8_t>(v);
    for (int u = 0; u < q.bins.cols; ++u)
      if (val[u])
        out[u] = static_cast<std::uint8_t>(quantize_normal(n[u], n_bins));
  }
  return q;
}

SpreadMap spread(const QuantizedMap& q, int radius)
{
  if (radius < 0)
    throw RangeError("spread radius must be non-negative");
  const int w = q.bins.cols, h = q.bins.rows;

  // Separable OR: a Chebyshev ball is a row window followed by a column window.
  cv::Mat rows(h, w, CV_16U, cv::Scalar(0));
  for (int v = 0; v < h; ++v) {
    const auto* src = q.bins.ptr<std::uint8_t>(v);
    auto* dst = rows.ptr<std::uint16_t>(v);
    for (int u = 0; u < w; ++u) {
      if (src[u] == kNoBin)
        continue;
      const auto bit = static_cast<std::uint16_t>(1u << src[u]);
      const int lo = std::max(0, u - radius), hi = std::min(w - 1, u + radius);
      for (int x = lo; x <= hi; ++x)
        dst[x] |= bit;
    }
  }

  SpreadMap out;
  out.n_bins = q.n_bins;
  out.radius = radius;
  out.channel = q.channel;
  out.masks = cv::Mat(h, w, CV_16U, cv::Scalar(0));
  for (int v = 0; v < h; ++v) {
    const auto* src = rows.ptr<std::uint16_t>(v);
    const int lo = std::max(0, v - radius), hi = std::min(h - 1, v + radius);
    for (int y = lo; y <= hi; ++y) {
      auto* dst = out.masks.ptr<std::uint16_t>(y);
      for (int u = 0; u < w; ++u)
        dst[u] |= src[u];
    }
  }
  return out;
}

ResponseLUT::ResponseLUT(int n_bins, std::vector<float> pair)
    : n_bins_(n_bins), pair_(std::move(pair))
{
  const std::size_t masks = std::size_t{1} << n_bins;
  table_.assign(static_cast<std::size_t>(n_bins) * masks, 0.0f);
  for (int b = 0; b < n_bins; ++b) {
    for (std::size_t m = 1; m < masks; ++m) {
      float best = 0.0f;
      for (int k = 0; k < n_bins; ++k)
        if (m & (std::size_t{1} << k))
          best = std::max(best, pairwise(b, k));
      table_[(static_cast<std::size_t>(b) << n_bins) | m] = best;
    }
  }
}

ResponseLUT ResponseLUT::orientation(int n_bins)
{
  check_bins(n_bins, 2);
  std::vector<float> pair(static_cast<std::size_t>(n_bins * n_bins));
  const double step = std::numbers::pi / n_bins;
  for (int a = 0; a < n_bins; ++a)
    for (int b = 0; b < n_bins; ++b)
      pair[static_cast<std::size_t>(a * n_bins + b)] =
          a == b ? 1.0f : static_cast<float>(std::abs(std::cos((a - b) * step)));
  return ResponseLUT(n_bins, std::move(pair));
}

ResponseLUT ResponseLUT::normal(int n_bins)
{
  check_bins(n_bins, 3);
  const int sectors = n_bins - 1;
  std::vector<float> pair(static_cast<std::size_t>(n_bins * n_bins), 0.0f);
  const double step = 2.0 * std::numbers::pi / sectors;
  for (int a = 0; a < n_bins; ++a) {
    for (int b = 0; b < n_bins; ++b) {
      float s = 0.0f;
      if (a == b)
        s = 1.0f;
      else if (a < sectors && b < sectors)
        s = static_cast<float>(std::max(0.0, std::cos((a - b) * step)));
      pair[static_cast<std::size_t>(a * n_bins + b)] = s;
    }
  }
  return ResponseLUT(n_bins, std::move(pair));
}

ResponseLUT ResponseLUT::for_channel(ChannelId channel, int n_bins)
{
  return channel == ChannelId::M2 ? normal(n_bins) : orientation(n_bins);
}

ResponseMaps build_response_maps(const SpreadMap& spread, const ResponseLUT& lut)
{
  if (spread.n_bins != lut.n_bins())
    throw ConfigError("spread map and lookup table disagree on bin count");
  ResponseMaps out;
  out.width = spread.masks.cols;
  out.height = spread.masks.rows;
  out.channel = spread.channel;
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  out.bins.assign(static_cast<std::size_t>(spread.n_bins), std::vector<float>(n, 0.0f));
  for (int v = 0; v < out.height; ++v) {
    const auto* m = spread.masks.ptr<std::uint16_t>(v);
    for (int b = 0; b < spread.n_bins; ++b) {
      float* dst = out.bins[static_cast<std::size_t>(b)].data() + static_cast<std::size_t>(v) * out.width;
      for (int u = 0; u < out.width; ++u)
        dst[u] = lut(b, m[u]);
    }
  }
  return out;
}

}  // namespace mfr
