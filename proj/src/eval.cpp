#include "mfr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mfr/error.hpp"
#include "mfr/localization.hpp"
#include "mfr/preprocess.hpp"

namespace mfr {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b)
{
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ChannelSet union_of(std::span<const ChannelSet> sets)
{
  ChannelSet u;
  for (const auto& s : sets)
    for (auto id : s.ids())
      u.insert(id);
  return u;
}

std::string fmt(double v, int precision = 4)
{
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

std::string set_label(const ChannelSet& s) { return "\"" + s.to_string() + "\""; }

}  // namespace

std::vector<cv::Point2d> default_positions()
{
  return {{0.0, 0.62}, {-0.13, 0.55}, {0.13, 0.55}, {-0.11, 0.74}, {0.11, 0.74}};
}

SceneSpec default_eval_scene()
{
  SceneSpec s;
  s.width = 320;
  s.height = 240;
  s.intrinsics = {262.5, 262.5, 159.5, 119.5};
  s.noise.rgb_sigma = 1.5;
  s.noise.flicker_rate = 0.3;
  s.noise.edge_band = 1;
  s.frames = 10;
  return s;
}

PipelineConfig default_eval_config()
{
  PipelineConfig c;
  c.spread_radius = 2;
  return c;
}

std::vector<ChannelSet> EvalSetup::default_channel_sets()
{
  return {ChannelSet::baseline(), ChannelSet{ChannelId::M1, ChannelId::M2, ChannelId::M3},
          ChannelSet{ChannelId::M1, ChannelId::M2, ChannelId::M4}, ChannelSet::all()};
}

SceneSpec view_scene(const EvalSetup& setup, std::size_t object, std::size_t position, int view)
{
  if (object >= setup.objects.size() || position >= setup.positions.size() || setup.views_per_position < 1)
    throw RangeError("view_scene: index out of range");
  SceneSpec s = setup.scene;
  ObjectSpec o = setup.objects[object];
  o.x = setup.positions[position].x;
  o.y = setup.positions[position].y;
  o.rotation = 2.0 * std::numbers::pi * view / setup.views_per_position;
  s.objects = {o};
  s.seed = mix(mix(setup.seed, 0x7a11), mix(object * 1000 + position, static_cast<std::uint64_t>(view)));
  return s;
}

SceneSpec trial_scene(const EvalSetup& setup, std::size_t object, int trial)
{
  if (object >= setup.objects.size() || setup.positions.empty())
    throw RangeError("trial_scene: index out of range");
  std::mt19937_64 rng(mix(mix(setup.seed, 0x7e57), mix(object, static_cast<std::uint64_t>(trial))));
  std::uniform_int_distribution<std::size_t> pick(0, setup.positions.size() - 1);
  std::uniform_real_distribution<double> offset(-setup.jitter, setup.jitter);
  std::uniform_real_distribution<double> turn(0.0, 2.0 * std::numbers::pi);
  const cv::Point2d p = setup.positions[pick(rng)];
  SceneSpec s = setup.scene;
  ObjectSpec o = setup.objects[object];
  o.x = p.x + offset(rng);
  o.y = p.y + offset(rng);
  o.rotation = turn(rng);
  s.objects = {o};
  s.seed = rng();
  return s;
}

std::vector<TrainedSet> train_channel_sets(const EvalSetup& setup, const PipelineConfig& base,
                                           std::span<const ChannelSet> sets, const Logger& log,
                                           const AddedHook& on_added)
{
  std::vector<TrainedSet> out;
  for (const auto& s : sets) {
    TrainedSet t;
    t.config = base;
    t.config.channels = s;
    t.config.validate();
    t.db.fingerprint = t.config.fingerprint();
    out.push_back(std::move(t));
  }
  const ChannelSet needed = union_of(sets);

  for (std::size_t oi = 0; oi < setup.objects.size(); ++oi) {
    const std::string& id = setup.objects[oi].id;
    for (std::size_t pi = 0; pi < setup.positions.size(); ++pi) {
      for (int view = 0; view < setup.views_per_position; ++view) {
        const RenderedScene scene = render(view_scene(setup, oi, pi, view));
        const RGBDFrame frame = stabilize(scene.frames);
        const cv::Mat& mask = scene.truth.objects.front().silhouette;
        const std::string label = "p" + std::to_string(pi) + "v" + std::to_string(view);
        const FrameCues cues = analyze_frame(frame, base, needed);

        for (std::size_t si = 0; si < out.size(); ++si) {
          TrainedSet& t = out[si];
          try {
            const FrameChannels channels = select_channels(cues, t.config, t.config.channels, frame.intrinsics);
            ExtractedTemplate candidate = extract_template(channels, mask, t.config.channels, t.config);
            candidate.templ.object_id = id;
            candidate.templ.pose_label = label;
            const FrameResponses responses = build_responses(channels, t.config);
            if (is_duplicate(candidate, t.db, responses, t.config)) {
              ++t.report.duplicates[id];
              continue;
            }
            t.db.add(std::move(candidate.templ));
            ++t.report.added[id];
            if (on_added)
              on_added(si, t.db.templates.back(), responses, candidate.anchor);
          } catch (const EmptyTemplateError& e) {
            t.report.errors.push_back(id + " [" + label + "]: " + e.what());
          }
        }
      }
      if (log) {
        std::string line = "trained " + id + " position " + std::to_string(pi) + ":";
        for (const auto& t : out) {
          const auto it = t.report.added.find(id);
          line += " " + t.config.channels.to_string() + "=" + std::to_string(it == t.report.added.end() ? 0 : it->second);
        }
        log(line);
      }
    }
  }
  return out;
}

double distance(const Point3D& a, const Point3D& b)
{
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

bool is_true_positive(const std::string& detected_id, const Point3D& located, const std::string& true_id,
                      const Point3D& truth, double radius)
{
  return detected_id == true_id && distance(located, truth) <= radius;
}

TopDetection top_detection(const FrameResponses& responses, const TemplateDB& db, const PipelineConfig& config,
                           const std::string& true_id, const Point3D& truth, double tp_radius)
{
  TopDetection top;
  DetectOptions options;
  options.stride = config.stride;
  options.nms_radius = config.nms_radius;
  // The overall best candidate always survives suppression, so a cheaper
  // high-threshold pass finds it whenever it clears that threshold.
  options.threshold = 50.0;
  std::vector<Detection> dets = detect(responses, db, options);
  if (dets.empty()) {
    options.threshold = 0.0;
    dets = detect(responses, db, options);
  }
  if (dets.empty())
    return top;
  const Detection& d = dets.front();
  top.detected = true;
  top.object_id = d.object_id;
  top.similarity = d.similarity;
  try {
    const ObjectLocation loc =
        locate(d, db.templates[d.template_index], responses.exact.filled_depth, responses.exact.intrinsics);
    top.localized = true;
    top.centroid = loc.centroid;
    top.error = distance(loc.centroid, truth);
    top.true_positive = is_true_positive(d.object_id, loc.centroid, true_id, truth, tp_radius);
  } catch (const LocalizationError&) {
    top.localized = false;
  }
  return top;
}

TemplateDB restrict_to(const TemplateDB& db, const std::vector<ObjectSpec>& objects, Category category)
{
  TemplateDB out;
  out.fingerprint = db.fingerprint;
  for (const auto& t : db.templates) {
    const auto it = std::find_if(objects.begin(), objects.end(), [&](const ObjectSpec& o) { return o.id == t.object_id; });
    if (it != objects.end() && it->category == category)
      out.templates.push_back(t);
  }
  return out;
}

std::vector<TrialResult> run_trials(const EvalSetup& setup, std::span<const TrainedSet> sets, const Logger& log)
{
  if (setup.trials_per_object < 1)
    throw RangeError("at least one trial per object is required");
  std::vector<ChannelSet> channel_sets;
  std::vector<TemplateDB> diffuse_dbs;
  for (const auto& s : sets) {
    channel_sets.push_back(s.config.channels);
    diffuse_dbs.push_back(restrict_to(s.db, setup.objects, Category::Diffuse));
  }
  const ChannelSet needed = union_of(channel_sets);
  const PipelineConfig& base = sets.front().config;

  std::vector<TrialResult> results;
  std::uint32_t trial_id = 0;
  for (std::size_t oi = 0; oi < setup.objects.size(); ++oi) {
    const ObjectSpec& object = setup.objects[oi];
    int tp_count = 0;
    for (int k = 0; k < setup.trials_per_object; ++k) {
      const RenderedScene scene = render(trial_scene(setup, oi, k));
      const RGBDFrame frame = stabilize(scene.frames);
      const FrameCues cues = analyze_frame(frame, base, needed);

      TrialResult r;
      r.trial_id = trial_id++;
      r.object_id = object.id;
      r.category = object.category;
      r.truth = scene.truth.objects.front().centroid;
      for (std::size_t si = 0; si < sets.size(); ++si) {
        const TrainedSet& t = sets[si];
        const FrameResponses responses =
            build_responses(select_channels(cues, t.config, t.config.channels, frame.intrinsics), t.config);
        r.full.push_back(top_detection(responses, t.db, t.config, object.id, r.truth, setup.tp_radius));
        if (object.category == Category::Diffuse)
          r.diffuse_only.push_back(top_detection(responses, diffuse_dbs[si], t.config, object.id, r.truth, setup.tp_radius));
      }
      if (r.full.back().true_positive && r.full.back().similarity >= base.match_threshold)
        ++tp_count;
      results.push_back(std::move(r));
    }
    if (log)
      log("trials " + object.id + ": " + std::to_string(tp_count) + "/" + std::to_string(setup.trials_per_object) +
          " recognized by " + sets.back().config.channels.to_string());
  }
  return results;
}

std::vector<RocPoint> roc_curve(std::span<const TrialResult> trials, std::size_t set, bool diffuse_set)
{
  std::vector<const TopDetection*> tops;
  for (const auto& r : trials) {
    if (diffuse_set) {
      if (r.category != Category::Diffuse)
        continue;
      tops.push_back(&r.diffuse_only.at(set));
    } else {
      tops.push_back(&r.full.at(set));
    }
  }
  std::vector<RocPoint> curve;
  if (tops.empty())
    return curve;
  const double n = static_cast<double>(tops.size());
  for (int t = 0; t <= 100; ++t) {
    int tp = 0;
    int fp = 0;
    for (const TopDetection* d : tops) {
      if (!d->detected || d->similarity < static_cast<float>(t))
        continue;
      ++(d->true_positive ? tp : fp);
    }
    curve.push_back({t, tp / n, fp / n});
  }
  return curve;
}

double recognition_rate(const std::vector<RocPoint>& curve, int threshold)
{
  for (const auto& p : curve)
    if (p.threshold == threshold)
      return p.tpr;
  throw RangeError("threshold not on the curve");
}

bool roc_dominates(const std::vector<RocPoint>& curve, const std::vector<RocPoint>& other)
{
  for (const auto& q : other) {
    double best = 0.0;  // the curve always reaches (0, 0) at an unattainable threshold
    for (const auto& p : curve)
      if (p.fpr <= q.fpr)
        best = std::max(best, p.tpr);
    if (best < q.tpr)
      return false;
  }
  return true;
}

TemplateDB truncate_db(const TemplateDB& db, std::size_t n)
{
  TemplateDB out;
  out.fingerprint = db.fingerprint;
  out.templates.assign(db.templates.begin(), db.templates.begin() + static_cast<std::ptrdiff_t>(std::min(n, db.size())));
  return out;
}

std::string counts_csv(std::span<const TrainedSet> sets, const std::vector<ObjectSpec>& objects)
{
  std::ostringstream os;
  os << "object,category";
  for (const auto& s : sets)
    os << ',' << set_label(s.config.channels);
  os << '\n';
  for (const auto& o : objects) {
    os << o.id << ',' << to_string(o.category);
    for (const auto& s : sets) {
      const auto c = s.db.counts();
      const auto it = c.find(o.id);
      os << ',' << (it == c.end() ? 0 : it->second);
    }
    os << '\n';
  }
  return os.str();
}

std::string roc_csv(std::span<const TrialResult> trials, std::span<const TrainedSet> sets)
{
  std::ostringstream os;
  os << "channels,object_set,threshold,tpr,fpr\n";
  for (std::size_t si = 0; si < sets.size(); ++si)
    for (const bool diffuse : {false, true})
      for (const auto& p : roc_curve(trials, si, diffuse))
        os << set_label(sets[si].config.channels) << ',' << (diffuse ? "diffuse" : "all") << ',' << p.threshold << ','
           << fmt(p.tpr) << ',' << fmt(p.fpr) << '\n';
  return os.str();
}

std::string rates_csv(std::span<const TrialResult> trials, std::span<const TrainedSet> sets, int threshold)
{
  std::ostringstream os;
  os << "channels,all_objects,diffuse_only\n";
  for (std::size_t si = 0; si < sets.size(); ++si) {
    const auto all = roc_curve(trials, si, false);
    const auto diffuse = roc_curve(trials, si, true);
    os << set_label(sets[si].config.channels) << ',' << (all.empty() ? "" : fmt(recognition_rate(all, threshold)))
       << ',' << (diffuse.empty() ? "" : fmt(recognition_rate(diffuse, threshold))) << '\n';
  }
  return os.str();
}

std::string trials_csv(std::span<const TrialResult> trials, std::span<const TrainedSet> sets)
{
  std::ostringstream os;
  os << "trial_id,object,category,channels,database,detected_object,similarity,localized,error_m,true_positive\n";
  auto row = [&](const TrialResult& r, std::size_t si, const char* database, const TopDetection& d) {
    os << r.trial_id << ',' << r.object_id << ',' << to_string(r.category) << ',' << set_label(sets[si].config.channels)
       << ',' << database << ',' << d.object_id << ',' << fmt(d.similarity, 2) << ',' << (d.localized ? 1 : 0) << ','
       << (d.localized ? fmt(d.error) : "") << ',' << (d.true_positive ? 1 : 0) << '\n';
  };
  for (const auto& r : trials) {
    for (std::size_t si = 0; si < r.full.size() && si < sets.size(); ++si)
      row(r, si, "all", r.full[si]);
    for (std::size_t si = 0; si < r.diffuse_only.size() && si < sets.size(); ++si)
      row(r, si, "diffuse", r.diffuse_only[si]);
  }
  return os.str();
}

}  // namespace mfr
