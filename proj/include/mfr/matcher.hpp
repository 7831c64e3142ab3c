#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mfr/channel_maps.hpp"
#include "mfr/config.hpp"
#include "mfr/response_maps.hpp"
#include "mfr/template_db.hpp"

namespace mfr {

struct Detection
{
  std::string object_id;
  std::uint32_t template_id = 0;
  int x = 0;
  int y = 0;
  /// Percent of the best possible template response, in [0, 100].
  float similarity = 0.0f;
  /// Same score against the unspread maps; orders equal-similarity detections.
  float refined = 0.0f;
  /// Position of the template in the database it was matched from.
  std::size_t template_index = 0;
};

/// Spread response maps of every enabled channel plus the unspread channel maps.
struct FrameResponses
{
  ChannelSet channels;
  int width = 0;
  int height = 0;
  std::array<std::optional<ResponseMaps>, kChannelCount> maps;
  std::array<std::optional<ResponseLUT>, kChannelCount> luts;
  FrameChannels exact;

  const ResponseMaps& operator[](ChannelId id) const;
  const ResponseLUT& lut(ChannelId id) const;
};

FrameResponses build_responses(FrameChannels channels, const PipelineConfig& config);

/// 100 * (sum of feature responses at anchor + offset) / feature count.
/// Throws RangeError when the template does not fit at the anchor.
float score(const Template& templ, const FrameResponses& responses, int x, int y);

/// score() against the unspread quantized maps.
float exact_score(const Template& templ, const FrameResponses& responses, int x, int y);

/// Greedy suppression in decreasing (similarity, refined) order, ties broken by
/// lower template id then position; drops anything within Chebyshev `radius`
/// of an already kept detection.
std::vector<Detection> non_max_suppress(std::vector<Detection> detections, int radius);

struct DetectOptions
{
  double threshold = 75.0;
  int stride = 1;
  int nms_radius = 16;
};

/**
 * Scores every template of `db` at every stride-aligned anchor. Only the best
 * template per anchor is kept (any other one at the same anchor would be
 * suppressed anyway), candidates below the threshold are dropped, and the rest
 * go through non_max_suppress(). Result sorted by decreasing similarity.
 */
std::vector<Detection> detect(const FrameResponses& responses, const TemplateDB& db, const DetectOptions& options);

/// Full pipeline from a stabilized frame. Throws ConfigError when the database
/// fingerprint differs from config.fingerprint().
std::vector<Detection> detect(const RGBDFrame& frame, const TemplateDB& db, const PipelineConfig& config);

/// Mean wall-clock seconds of detect(frame, db, config), map construction included.
double bench_full_comparison(const RGBDFrame& frame, const TemplateDB& db, const PipelineConfig& config,
                             int repetitions);

}  // namespace mfr
