#include "mfr/templates.hpp"

#include <algorithm>

#include <opencv2/imgproc.hpp>

#include "mfr/error.hpp"

namespace mfr {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Candidate
{
  int x;
  int y;
  std::uint8_t tier;
  float magnitude;
  std::uint64_t order;
  std::uint8_t bin;
};

cv::Mat dilated_mask(const cv::Mat& mask, int radius)
{
  cv::Mat binary = mask != 0;
  if (radius == 0)
    return binary;
  cv::Mat out;
  cv::dilate(binary, out, cv::getStructuringElement(cv::MORPH_RECT, cv::Size(2 * radius + 1, 2 * radius + 1)));
  return out;
}

}  // namespace

cv::Rect template_region(const cv::Mat& object_mask, const PipelineConfig& config)
{
  if (object_mask.empty() || object_mask.type() != CV_8UC1)
    throw FormatError("object mask must be CV_8UC1");
  if (cv::countNonZero(object_mask) == 0)
    throw EmptyTemplateError("object mask is empty");
  return cv::boundingRect(dilated_mask(object_mask, config.mask_dilation));
}

ExtractedTemplate extract_template(const FrameChannels& channels, const cv::Mat& object_mask, ChannelSet enabled,
                                   const PipelineConfig& config)
{
  if (object_mask.size() != channels.nan.size())
    throw DimensionError("object mask and frame differ in size");
  if (!enabled.subset_of(channels.channels))
    throw ConfigError("requested channels were not computed for this frame");

  const cv::Rect region = template_region(object_mask, config);
  const cv::Mat inside = object_mask != 0;
  const cv::Mat near = dilated_mask(object_mask, config.mask_dilation);

  ExtractedTemplate out;
  out.anchor = region.tl();
  out.templ.width = static_cast<std::uint16_t>(region.width);
  out.templ.height = static_cast<std::uint16_t>(region.height);

  std::vector<Candidate> candidates;
  std::vector<cv::Point> taken;
  for (ChannelId id : enabled.ids()) {
    const ChannelMap& map = channels[id];
    const bool contour = id != ChannelId::M2;
    candidates.clear();
    for (int y = region.y; y < region.y + region.height; ++y) {
      const auto* bins = map.quantized.bins.ptr<std::uint8_t>(y);
      const auto* mag = map.magnitude.ptr<float>(y);
      const auto* tier = map.tier.ptr<std::uint8_t>(y);
      const auto* in = inside.ptr<std::uint8_t>(y);
      const auto* nr = near.ptr<std::uint8_t>(y);
      for (int x = region.x; x < region.x + region.width; ++x) {
        if (bins[x] == kNoBin)
          continue;
        std::uint8_t t = tier[x];
        if (!in[x]) {
          if (!contour || !nr[x])
            continue;
          t = static_cast<std::uint8_t>(t + 1);
        }
        const std::uint64_t key = (static_cast<std::uint64_t>(y) << 32) | static_cast<std::uint32_t>(x);
        candidates.push_back({x, y, t, mag[x], splitmix64(config.selection_seed ^ splitmix64(key)), bins[x]});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.tier != b.tier)
        return a.tier < b.tier;
      if (a.magnitude != b.magnitude)
        return a.magnitude > b.magnitude;
      return a.order < b.order;
    });

    taken.clear();
    for (const auto& c : candidates) {
      if (static_cast<int>(taken.size()) >= config.k_per_channel)
        break;
      const bool clear = std::none_of(taken.begin(), taken.end(), [&](const cv::Point& p) {
        return std::max(std::abs(p.x - c.x), std::abs(p.y - c.y)) < config.feature_spacing;
      });
      if (!clear)
        continue;
      taken.emplace_back(c.x, c.y);
      out.templ.features.push_back({static_cast<std::uint16_t>(c.x - region.x),
                                    static_cast<std::uint16_t>(c.y - region.y), id, c.bin});
    }
  }
  if (out.templ.features.empty())
    throw EmptyTemplateError("no usable features inside the object mask");
  return out;
}

ExtractedTemplate extract_template(const RGBDFrame& frame, const cv::Mat& object_mask, const PipelineConfig& config)
{
  return extract_template(compute_channels(frame, config), object_mask, config.channels, config);
}

bool is_duplicate(const ExtractedTemplate& candidate, const TemplateDB& db, const FrameResponses& source,
                  const PipelineConfig& config)
{
  db.require_fingerprint(config.fingerprint());
  const int x = candidate.anchor.x, y = candidate.anchor.y;
  for (const auto& t : db.templates) {
    if (t.object_id != candidate.templ.object_id)
      continue;
    if (x + t.width > source.width || y + t.height > source.height)
      continue;
    if (score(t, source, x, y) >= config.dup_threshold)
      return true;
  }
  return false;
}

AddOutcome add_view(TemplateDB& db, const FrameChannels& channels, const cv::Mat& mask, const std::string& object_id,
                    const std::string& pose_label, const PipelineConfig& config)
{
  ExtractedTemplate candidate = extract_template(channels, mask, config.channels, config);
  candidate.templ.object_id = object_id;
  candidate.templ.pose_label = pose_label;
  const FrameResponses responses = build_responses(channels, config);
  if (is_duplicate(candidate, db, responses, config))
    return AddOutcome::Duplicate;
  db.add(std::move(candidate.templ));
  return AddOutcome::Added;
}

TrainReport train_from_views(TemplateDB& db, std::span<const TrainingView> views, const PipelineConfig& config)
{
  if (db.empty())
    db.fingerprint = config.fingerprint();
  db.require_fingerprint(config.fingerprint());
  TrainReport report;
  for (const auto& view : views) {
    try {
      const FrameChannels channels = compute_channels(view.frame, config);
      const auto outcome = add_view(db, channels, view.mask, view.object_id, view.pose_label, config);
      ++(outcome == AddOutcome::Added ? report.added : report.duplicates)[view.object_id];
    } catch (const EmptyTemplateError& e) {
      report.errors.push_back(view.object_id + " [" + view.pose_label + "]: " + e.what());
    }
  }
  return report;
}

}  // namespace mfr
