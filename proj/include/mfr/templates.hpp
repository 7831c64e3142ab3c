#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfr/channel_maps.hpp"
#include "mfr/config.hpp"
#include "mfr/matcher.hpp"
#include "mfr/template_db.hpp"

namespace mfr {

struct ExtractedTemplate
{
  Template templ;
  /// Top-left of the template region in the source frame.
  cv::Point anchor;
};

/// Candidate region of a view: the object mask dilated by config.mask_dilation.
cv::Rect template_region(const cv::Mat& object_mask, const PipelineConfig& config);

/**
 * Picks up to config.k_per_channel features per channel inside the object.
 *
 * Contour channels (M1, M3, M4) draw candidates from the dilated mask, pixels
 * of the mask itself ranking first; M2 uses the mask only. Within a tier,
 * stronger responses come first and equal ones are ordered by a seeded pixel
 * hash. A candidate is taken only if it is at least config.feature_spacing
 * pixels (Chebyshev) from every feature already taken in its channel.
 *
 * Throws EmptyTemplateError for an empty mask or when no feature survives.
 */
ExtractedTemplate extract_template(const FrameChannels& channels, const cv::Mat& object_mask,
                                   ChannelSet enabled, const PipelineConfig& config);

ExtractedTemplate extract_template(const RGBDFrame& frame, const cv::Mat& object_mask, const PipelineConfig& config);

/// True iff a template of the same object already scores >= config.dup_threshold
/// at the candidate's anchor of its source frame.
bool is_duplicate(const ExtractedTemplate& candidate, const TemplateDB& db, const FrameResponses& source,
                  const PipelineConfig& config);

struct TrainingView
{
  std::string object_id;
  RGBDFrame frame;  ///< stabilized
  cv::Mat mask;
  std::string pose_label;
};

struct TrainReport
{
  std::map<std::string, int> added;
  std::map<std::string, int> duplicates;
  std::vector<std::string> errors;
};

enum class AddOutcome { Added, Duplicate };

/// Extract + dedup + insert for one view whose channel maps are already computed.
AddOutcome add_view(TemplateDB& db, const FrameChannels& channels, const cv::Mat& mask, const std::string& object_id,
                    const std::string& pose_label, const PipelineConfig& config);

/// Trains in view order. Extraction failures are recorded in the report and
/// training continues with the next view.
TrainReport train_from_views(TemplateDB& db, std::span<const TrainingView> views, const PipelineConfig& config);

}  // namespace mfr
