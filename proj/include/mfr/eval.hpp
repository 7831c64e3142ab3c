#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfr/config.hpp"
#include "mfr/matcher.hpp"
#include "mfr/synthscene.hpp"
#include "mfr/templates.hpp"

namespace mfr {

using Logger = std::function<void(const std::string&)>;

/// Table positions (lateral, forward) of the rotating platform, meters.
std::vector<cv::Point2d> default_positions();

/// Camera, table, light and sensor noise shared by every eval render: a
/// 320x240 sensor with the field of view of the 640x480 default.
SceneSpec default_eval_scene();

/// Pipeline defaults with the spread radius scaled to the eval sensor: T = 2
/// at 320x240 covers the same angle as the default T = 4 at 640x480.
PipelineConfig default_eval_config();

struct EvalSetup
{
  SceneSpec scene = default_eval_scene();
  std::vector<ObjectSpec> objects = catalog();
  std::vector<cv::Point2d> positions = default_positions();
  int views_per_position = 24;
  int trials_per_object = 25;
  /// Uniform trial offset from the platform position, meters.
  double jitter = 0.015;
  double tp_radius = 0.05;
  std::uint64_t seed = 1;

  /// The named channel sets evaluated by default: m1,m2 / m1,m2,m3 / m1,m2,m4 / all.
  static std::vector<ChannelSet> default_channel_sets();
};

/// Single-object scene of one training view: platform `position`, turned by 2*pi*view/views_per_position.
SceneSpec view_scene(const EvalSetup& setup, std::size_t object, std::size_t position, int view);

/// Single-object scene of one randomized trial, reproducible from (setup.seed, object, trial).
SceneSpec trial_scene(const EvalSetup& setup, std::size_t object, int trial);

struct TrainedSet
{
  PipelineConfig config;
  TemplateDB db;
  TrainReport report;
};

/// Called for every template added: (set index, the template, its source responses, its anchor).
using AddedHook = std::function<void(std::size_t, const Template&, const FrameResponses&, cv::Point)>;

/**
 * Trains one database per channel set over every (object, position, view).
 * Each view is rendered, stabilized and analyzed once; the channel sets share
 * the raw cues. The masks are the ground-truth silhouettes.
 */
std::vector<TrainedSet> train_channel_sets(const EvalSetup& setup, const PipelineConfig& base,
                                           std::span<const ChannelSet> sets, const Logger& log = {},
                                           const AddedHook& on_added = {});

/// TP iff the object id matches and the located centroid is within `radius` meters of the truth.
bool is_true_positive(const std::string& detected_id, const Point3D& located, const std::string& true_id,
                      const Point3D& truth, double radius);

double distance(const Point3D& a, const Point3D& b);

/// Top-ranked detection of one trial under one database.
struct TopDetection
{
  bool detected = false;
  std::string object_id;
  float similarity = 0.0f;
  bool localized = false;
  Point3D centroid;
  double error = 0.0;
  bool true_positive = false;
};

TopDetection top_detection(const FrameResponses& responses, const TemplateDB& db, const PipelineConfig& config,
                           const std::string& true_id, const Point3D& truth, double tp_radius);

struct TrialResult
{
  std::uint32_t trial_id = 0;
  std::string object_id;
  Category category = Category::Diffuse;
  Point3D truth;
  /// One entry per channel set, against the full database.
  std::vector<TopDetection> full;
  /// Diffuse trials only: against the database restricted to diffuse objects.
  std::vector<TopDetection> diffuse_only;
};

std::vector<TrialResult> run_trials(const EvalSetup& setup, std::span<const TrainedSet> sets, const Logger& log = {});

/// Templates of `db` whose object has the given category in `objects`.
TemplateDB restrict_to(const TemplateDB& db, const std::vector<ObjectSpec>& objects, Category category);

struct RocPoint
{
  int threshold = 0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/**
 * Per-trial rates for thresholds 0..100: a trial counts as TP (FP) at t when
 * its top detection is a true (false) positive with similarity >= t. With
 * `diffuse_set` only diffuse trials are used, scored against the diffuse-only
 * database.
 */
std::vector<RocPoint> roc_curve(std::span<const TrialResult> trials, std::size_t set, bool diffuse_set);

/// TPR at the given threshold.
double recognition_rate(const std::vector<RocPoint>& curve, int threshold);

/// True when, at every FPR attained by `other`, the best TPR of `curve` at no
/// larger FPR is at least the TPR of `other`.
bool roc_dominates(const std::vector<RocPoint>& curve, const std::vector<RocPoint>& other);

/// First n templates of db.
TemplateDB truncate_db(const TemplateDB& db, std::size_t n);

std::string counts_csv(std::span<const TrainedSet> sets, const std::vector<ObjectSpec>& objects);
std::string roc_csv(std::span<const TrialResult> trials, std::span<const TrainedSet> sets);
std::string rates_csv(std::span<const TrialResult> trials, std::span<const TrainedSet> sets, int threshold);
std::string trials_csv(std::span<const TrialResult> trials, std::span<const TrainedSet> sets);

}  // namespace mfr
