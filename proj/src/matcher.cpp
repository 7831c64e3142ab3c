#include "mfr/matcher.hpp"

#include <algorithm>
#include <chrono>

#include "mfr/error.hpp"

namespace mfr {

const ResponseMaps& FrameResponses::operator[](ChannelId id) const
{
  const auto& m = maps[static_cast<std::size_t>(id)];
  if (!m)
    throw ConfigError("no response maps for channel " + std::string(channel_name(id)));
  return *m;
}

const ResponseLUT& FrameResponses::lut(ChannelId id) const
{
  const auto& l = luts[static_cast<std::size_t>(id)];
  if (!l)
    throw ConfigError("no lookup table for channel " + std::string(channel_name(id)));
  return *l;
}

FrameResponses build_responses(FrameChannels channels, const PipelineConfig& config)
{
  FrameResponses out;
  out.channels = channels.channels;
  out.width = channels.width();
  out.height = channels.height();
  for (ChannelId id : channels.channels.ids()) {
    const auto i = static_cast<std::size_t>(id);
    const auto& q = channels[id].quantized;
    out.luts[i] = ResponseLUT::for_channel(id, q.n_bins);
    out.maps[i] = build_response_maps(spread(q, config.spread_radius), *out.luts[i]);
  }
  out.exact = std::move(channels);
  return out;
}

namespace {

bool fits(const Template& t, int x, int y, int width, int height)
{
  return x >= 0 && y >= 0 && x + t.width <= width && y + t.height <= height;
}

void require_channels(const Template& t, ChannelSet available)
{
  for (const auto& f : t.features)
    if (!available.contains(f.channel))
      throw ConfigError("template uses channel " + std::string(channel_name(f.channel)) +
                        " which is not enabled");
}

}  // namespace

float score(const Template& templ, const FrameResponses& responses, int x, int y)
{
  if (!fits(templ, x, y, responses.width, responses.height))
    throw RangeError("template does not fit at the anchor");
  if (templ.features.empty())
    return 0.0f;
  float sum = 0.0f;
  for (const auto& f : templ.features)
    sum += responses[f.channel].at(f.bin, x + f.x, y + f.y);
  return 100.0f * sum / static_cast<float>(templ.features.size());
}

float exact_score(const Template& templ, const FrameResponses& responses, int x, int y)
{
  if (!fits(templ, x, y, responses.width, responses.height))
    throw RangeError("template does not fit at the anchor");
  if (templ.features.empty())
    return 0.0f;
  float sum = 0.0f;
  for (const auto& f : templ.features) {
    const std::uint8_t observed = responses.exact[f.channel].quantized.bins.at<std::uint8_t>(y + f.y, x + f.x);
    if (observed != kNoBin)
      sum += responses.lut(f.channel).pairwise(f.bin, observed);
  }
  return 100.0f * sum / static_cast<float>(templ.features.size());
}

std::vector<Detection> non_max_suppress(std::vector<Detection> detections, int radius)
{
  std::sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    if (a.similarity != b.similarity)
      return a.similarity > b.similarity;
    if (a.refined != b.refined)
      return a.refined > b.refined;
    if (a.template_id != b.template_id)
      return a.template_id < b.template_id;
    if (a.y != b.y)
      return a.y < b.y;
    return a.x < b.x;
  });
  if (detections.empty())
    return detections;

  int max_x = 0, max_y = 0, min_x = 0, min_y = 0;
  for (const auto& d : detections) {
    max_x = std::max(max_x, d.x);
    max_y = std::max(max_y, d.y);
    min_x = std::min(min_x, d.x);
    min_y = std::min(min_y, d.y);
  }
  const int gw = max_x - min_x + 1, gh = max_y - min_y + 1;
  std::vector<std::uint8_t> suppressed(static_cast<std::size_t>(gw) * gh, 0);

  std::vector<Detection> kept;
  for (auto& d : detections) {
    const int gx = d.x - min_x, gy = d.y - min_y;
    if (suppressed[static_cast<std::size_t>(gy) * gw + gx])
      continue;
    for (int y = std::max(0, gy - radius); y <= std::min(gh - 1, gy + radius); ++y)
      std::fill_n(suppressed.begin() + static_cast<std::ptrdiff_t>(y) * gw + std::max(0, gx - radius),
                  std::min(gw - 1, gx + radius) - std::max(0, gx - radius) + 1, std::uint8_t{1});
    kept.push_back(std::move(d));
  }
  return kept;
}

std::vector<Detection> detect(const FrameResponses& responses, const TemplateDB& db, const DetectOptions& options)
{
  if (options.stride < 1)
    throw RangeError("stride must be positive");
  const int width = responses.width, height = responses.height;
  const std::size_t n_pixels = static_cast<std::size_t>(width) * height;
  std::vector<float> best(n_pixels, -1.0f);
  std::vector<std::int32_t> best_index(n_pixels, -1);
  std::vector<float> acc;
  std::vector<const float*> rows;

  const int stride = options.stride;
  for (std::size_t ti = 0; ti < db.templates.size(); ++ti) {
    const Template& t = db.templates[ti];
    if (t.features.empty() || t.width > width || t.height > height)
      continue;
    require_channels(t, responses.channels);
    const int nx = (width - t.width) / stride + 1;
    const int ny = (height - t.height) / stride + 1;
    const float n_features = static_cast<float>(t.features.size());
    acc.assign(static_cast<std::size_t>(nx), 0.0f);
    rows.resize(t.features.size());

    for (int iy = 0; iy < ny; ++iy) {
      const int y = iy * stride;
      std::fill(acc.begin(), acc.end(), 0.0f);
      for (std::size_t k = 0; k < t.features.size(); ++k) {
        const Feature& f = t.features[k];
        const float* src = responses[f.channel].row(f.bin, y + f.y) + f.x;
        if (stride == 1) {
          for (int ix = 0; ix < nx; ++ix)
            acc[static_cast<std::size_t>(ix)] += src[ix];
        } else {
          for (int ix = 0; ix < nx; ++ix)
            acc[static_cast<std::size_t>(ix)] += src[ix * stride];
        }
      }
      float* best_row = best.data() + static_cast<std::size_t>(y) * width;
      std::int32_t* index_row = best_index.data() + static_cast<std::size_t>(y) * width;
      for (int ix = 0; ix < nx; ++ix) {
        // same expression as score() so both agree bit for bit
        const float s = 100.0f * acc[static_cast<std::size_t>(ix)] / n_features;
        const int x = ix * stride;
        if (s > best_row[x]) {
          best_row[x] = s;
          index_row[x] = static_cast<std::int32_t>(ti);
        }
      }
    }
  }

  std::vector<Detection> candidates;
  for (int y = 0; y < height; y += stride) {
    for (int x = 0; x < width; x += stride) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (best_index[i] < 0 || best[i] < options.threshold)
        continue;
      const Template& t = db.templates[static_cast<std::size_t>(best_index[i])];
      Detection d;
      d.object_id = t.object_id;
      d.template_id = t.template_id;
      d.template_index = static_cast<std::size_t>(best_index[i]);
      d.x = x;
      d.y = y;
      d.similarity = best[i];
      d.refined = exact_score(t, responses, x, y);
      candidates.push_back(std::move(d));
    }
  }
  return non_max_suppress(std::move(candidates), options.nms_radius);
}

std::vector<Detection> detect(const RGBDFrame& frame, const TemplateDB& db, const PipelineConfig& config)
{
  db.require_fingerprint(config.fingerprint());
  const FrameResponses responses = build_responses(compute_channels(frame, config), config);
  return detect(responses, db, {config.match_threshold, config.stride, config.nms_radius});
}

double bench_full_comparison(const RGBDFrame& frame, const TemplateDB& db, const PipelineConfig& config,
                             int repetitions)
{
  if (repetitions < 1)
    throw RangeError("repetitions must be at least 1");
  using clock = std::chrono::steady_clock;
  double total = 0.0;
  for (int r = 0; r < repetitions; ++r) {
    const auto start = clock::now();
    const auto detections = detect(frame, db, config);
    total += std::chrono::duration<double>(clock::now() - start).count();
    (void)detections;
  }
  return total / repetitions;
}

}  // namespace mfr
