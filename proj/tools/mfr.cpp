// Command-line front end: scene generation, training, detection, evaluation
// and timing.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mfr/error.hpp"
#include "mfr/eval.hpp"
#include "mfr/localization.hpp"
#include "mfr/preprocess.hpp"

namespace fs = std::filesystem;
using namespace mfr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

class AssertFailure : public std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << text;
}

void write_mask(const fs::path& path, const cv::Mat& mask)
{
  if (!cv::imwrite(path.string(), mask))
    throw IoError("cannot write " + path.string());
}

std::string db_file_name(const ChannelSet& s)
{
  std::string name = s.to_string();
  std::replace(name.begin(), name.end(), ',', '-');
  return name + ".mfdb";
}

/// Writes a rendered scene: frame_NNN/ directories, the spec, and ground truth.
void write_scene(const SceneSpec& spec, const RenderedScene& scene, const fs::path& dir)
{
  fs::create_directories(dir / "truth");
  save_scene(spec, dir / "scene.txt");
  for (std::size_t k = 0; k < scene.frames.size(); ++k) {
    std::ostringstream name;
    name << "frame_" << std::setw(3) << std::setfill('0') << k;
    save_frame(scene.frames[k], dir / name.str());
  }
  std::ostringstream centroids;
  centroids << "object,category,x,y,z\n" << std::setprecision(9);
  for (const auto& t : scene.truth.objects) {
    write_mask(dir / "truth" / (t.id + ".silhouette.png"), t.silhouette);
    write_mask(dir / "truth" / (t.id + ".transparency.png"), t.transparency);
    write_mask(dir / "truth" / (t.id + ".highlight.png"), t.highlight);
    centroids << t.id << ',' << to_string(t.category) << ',' << t.centroid.x << ',' << t.centroid.y << ','
              << t.centroid.z << '\n';
  }
  write_text(dir / "truth" / "centroids.csv", centroids.str());
}

/// A frame directory, or a directory of frame_* directories averaged over one window.
RGBDFrame load_stabilized(const fs::path& dir, int window)
{
  if (fs::exists(dir / "rgb.png"))
    return load_frame(dir);
  std::vector<fs::path> subdirs;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / "rgb.png"))
        subdirs.push_back(e.path());
  if (subdirs.empty())
    throw IoError("no frames under " + dir.string());
  std::sort(subdirs.begin(), subdirs.end());
  if (static_cast<int>(subdirs.size()) > window)
    subdirs.resize(static_cast<std::size_t>(window));
  std::vector<RGBDFrame> frames;
  for (const auto& p : subdirs)
    frames.push_back(load_frame(p));
  return stabilize(frames);
}

PipelineConfig base_config(const std::string& config_path)
{
  PipelineConfig c = config_path.empty() ? PipelineConfig{} : load_config(config_path);
  c.validate();
  return c;
}

std::vector<ChannelSet> parse_sets(const std::vector<std::string>& texts, std::vector<ChannelSet> fallback)
{
  if (texts.empty())
    return fallback;
  std::vector<ChannelSet> out;
  for (const auto& t : texts)
    out.push_back(ChannelSet::parse(t));
  return out;
}

struct GenArgs
{
  std::string scene_path;
  std::string object;
  double x = 0.0;
  double y = 0.62;
  double rotation = 0.0;
  int views = 0;
  int frames = 10;
  std::uint64_t seed = 1;
  bool eval_sensor = false;
  std::string out;
};

int run_gen(const GenArgs& a)
{
  SceneSpec spec;
  if (!a.scene_path.empty()) {
    spec = load_scene(a.scene_path);
  } else {
    if (a.object.empty())
      throw ConfigError("gen needs --scene or --object");
    spec = a.eval_sensor ? default_eval_scene() : SceneSpec{};
    ObjectSpec o = catalog_object(a.object);
    o.x = a.x;
    o.y = a.y;
    o.rotation = a.rotation;
    spec.objects = {o};
    spec.frames = a.frames;
    spec.seed = a.seed;
  }
  if (a.views > 0) {
    const auto specs = rotate_views(spec, 0, a.views);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      std::ostringstream name;
      name << "view_" << std::setw(3) << std::setfill('0') << i;
      write_scene(specs[i], render(specs[i]), fs::path(a.out) / name.str());
    }
    std::cout << "wrote " << specs.size() << " views to " << a.out << '\n';
  } else {
    write_scene(spec, render(spec), a.out);
    std::cout << "wrote " << spec.frames << " frames to " << a.out << '\n';
  }
  return kExitOk;
}

struct TrainArgs
{
  std::vector<std::string> views;
  std::vector<std::string> channels;
  std::string config;
  bool eval_set = false;
  int views_per_position = 24;
  std::uint64_t seed = 1;
  std::string out;
};

int run_train(const TrainArgs& a)
{
  std::vector<TrainedSet> trained;
  std::vector<ObjectSpec> objects;
  if (a.eval_set) {
    EvalSetup setup;
    setup.views_per_position = a.views_per_position;
    setup.seed = a.seed;
    objects = setup.objects;
    const PipelineConfig base = a.config.empty() ? default_eval_config() : base_config(a.config);
    const auto sets = parse_sets(a.channels, EvalSetup::default_channel_sets());
    trained = train_channel_sets(setup, base, sets, [](const std::string& l) { std::cerr << l << '\n'; });
  } else {
    if (a.views.empty())
      throw ConfigError("train needs --view directories or --eval-set");
    const PipelineConfig base = base_config(a.config);
    for (const auto& s : parse_sets(a.channels, {base.channels})) {
      TrainedSet t;
      t.config = base;
      t.config.channels = s;
      t.config.validate();
      t.db.fingerprint = t.config.fingerprint();
      trained.push_back(std::move(t));
    }
    std::vector<TrainingView> views;
    for (const auto& v : a.views) {
      const SceneSpec spec = load_scene(fs::path(v) / "scene.txt");
      if (spec.objects.empty())
        throw SceneSpecError(v + ": scene has no object");
      const ObjectSpec& o = spec.objects.front();
      if (std::none_of(objects.begin(), objects.end(), [&](const ObjectSpec& x) { return x.id == o.id; }))
        objects.push_back(o);
      TrainingView tv;
      tv.object_id = o.id;
      tv.frame = load_stabilized(v, base.window_size);
      tv.mask = cv::imread((fs::path(v) / "truth" / (o.id + ".silhouette.png")).string(), cv::IMREAD_GRAYSCALE);
      if (tv.mask.empty())
        throw IoError(v + ": missing silhouette mask");
      tv.pose_label = fs::path(v).filename().string();
      views.push_back(std::move(tv));
    }
    for (auto& t : trained)
      t.report = train_from_views(t.db, views, t.config);
  }

  fs::create_directories(a.out);
  for (const auto& t : trained) {
    save_db(t.db, fs::path(a.out) / db_file_name(t.config.channels));
    for (const auto& e : t.report.errors)
      std::cerr << "skipped view: " << e << '\n';
    std::cout << t.config.channels.to_string() << ": " << t.db.size() << " templates\n";
  }
  write_text(fs::path(a.out) / "counts.csv", counts_csv(trained, objects));
  return kExitOk;
}

struct DetectArgs
{
  std::string frame;
  std::string db;
  std::string config;
  std::vector<std::string> channels;
  double threshold = 75.0;
  std::string csv;
};

int run_detect(const DetectArgs& a)
{
  const TemplateDB db = load_db(a.db);
  PipelineConfig config = base_config(a.config);
  if (a.config.empty()) {
    // Without a config file the database fingerprint defines the pipeline.
    const ConfigFingerprint& f = db.fingerprint;
    config.orientation_bins = f.orientation_bins;
    config.normal_bins = f.normal_bins;
    config.spread_radius = f.spread_radius;
    config.magnitude_threshold = f.magnitude_threshold;
    config.specular_threshold = f.specular_threshold;
    config.k_per_channel = f.k_per_channel;
    config.channels = f.channels;
  }
  if (!a.channels.empty())
    config.channels = ChannelSet::parse(a.channels.front());
  config.match_threshold = a.threshold;
  config.validate();
  db.require_fingerprint(config.fingerprint());

  const RGBDFrame frame = load_stabilized(a.frame, config.window_size);
  const FrameResponses responses = build_responses(compute_channels(frame, config), config);
  DetectOptions options;
  options.threshold = a.threshold;
  options.stride = config.stride;
  options.nms_radius = config.nms_radius;
  const auto dets = detect(responses, db, options);
  std::cout << std::fixed;

  std::ostringstream csv;
  csv << "object_id,template_id,x,y,similarity,cx,cy,cz\n" << std::fixed;
  for (const auto& d : dets) {
    csv << d.object_id << ',' << d.template_id << ',' << d.x << ',' << d.y << ',' << std::setprecision(2)
        << d.similarity << ',';
    try {
      const ObjectLocation loc = locate(d, db.templates[d.template_index], responses.exact.filled_depth, frame.intrinsics);
      csv << std::setprecision(4) << loc.centroid.x << ',' << loc.centroid.y << ',' << loc.centroid.z << '\n';
      std::cout << d.object_id << " at (" << d.x << ", " << d.y << ") " << std::setprecision(1) << d.similarity
                << "% centroid " << std::setprecision(3) << loc.centroid.x << ' ' << loc.centroid.y << ' '
                << loc.centroid.z << " m\n";
    } catch (const LocalizationError&) {
      csv << ",,\n";
      std::cout << d.object_id << " at (" << d.x << ", " << d.y << ") " << std::setprecision(1) << d.similarity
                << "% (no depth)\n";
    }
  }
  if (dets.empty())
    std::cout << "no detections\n";
  if (!a.csv.empty())
    write_text(a.csv, csv.str());
  return kExitOk;
}

struct EvalArgs
{
  std::string config;
  std::vector<std::string> channels;
  int views_per_position = 24;
  int trials = 25;
  double threshold = 75.0;
  std::uint64_t seed = 1;
  std::string out;
  bool assert_rates = false;
};

int run_eval(const EvalArgs& a)
{
  if (a.trials < 1)
    throw ConfigError("eval needs at least one trial per object");
  EvalSetup setup;
  setup.views_per_position = a.views_per_position;
  setup.trials_per_object = a.trials;
  setup.seed = a.seed;
  PipelineConfig base = a.config.empty() ? default_eval_config() : base_config(a.config);
  base.match_threshold = a.threshold;
  const auto sets = parse_sets(a.channels, EvalSetup::default_channel_sets());
  const auto log = [](const std::string& l) { std::cerr << l << '\n'; };

  const auto trained = train_channel_sets(setup, base, sets, log);
  const auto trials = run_trials(setup, trained, log);
  const int t = static_cast<int>(std::lround(a.threshold));

  if (!a.out.empty()) {
    write_text(fs::path(a.out) / "counts.csv", counts_csv(trained, setup.objects));
    write_text(fs::path(a.out) / "roc.csv", roc_csv(trials, trained));
    write_text(fs::path(a.out) / "rates.csv", rates_csv(trials, trained, t));
    write_text(fs::path(a.out) / "trials.csv", trials_csv(trials, trained));
    for (const auto& s : trained)
      save_db(s.db, fs::path(a.out) / db_file_name(s.config.channels));
  }
  std::cout << rates_csv(trials, trained, t);

  if (a.assert_rates) {
    const auto first = roc_curve(trials, 0, false);
    const auto last = roc_curve(trials, trained.size() - 1, false);
    const double r2 = recognition_rate(first, t);
    const double r4 = recognition_rate(last, t);
    double lo = 1.0, hi = 0.0;
    for (std::size_t si = 0; si < trained.size(); ++si) {
      const double r = recognition_rate(roc_curve(trials, si, true), t);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const bool ok = r2 <= 0.45 && r4 >= 0.70 && r4 - r2 >= 0.25 && lo >= 0.85 && hi - lo <= 0.15;
    if (!ok)
      throw AssertFailure("recognition rates outside the expected ranges");
    std::cout << "rates within expected ranges\n";
  }
  return kExitOk;
}

struct BenchArgs
{
  std::string frame;
  std::vector<std::string> dbs;
  std::string config;
  int repetitions = 5;
  bool matched = false;
  std::string csv;
};

int run_bench(const BenchArgs& a)
{
  if (a.repetitions < 3)
    throw ConfigError("bench needs at least 3 repetitions");
  std::vector<TemplateDB> dbs;
  for (const auto& p : a.dbs) {
    dbs.push_back(load_db(p));
    if (dbs.back().empty())
      throw ConfigError(p + ": empty database, nothing to benchmark");
  }
  if (a.matched) {
    std::size_t n = dbs.front().size();
    for (const auto& d : dbs)
      n = std::min(n, d.size());
    for (auto& d : dbs)
      d = truncate_db(d, n);
  }
  const PipelineConfig file_config = base_config(a.config);
  std::ostringstream csv;
  csv << "database,channels,templates,features,mean_seconds\n";
  std::vector<double> means;
  for (std::size_t i = 0; i < dbs.size(); ++i) {
    PipelineConfig config = file_config;
    const ConfigFingerprint& f = dbs[i].fingerprint;
    config.orientation_bins = f.orientation_bins;
    config.normal_bins = f.normal_bins;
    config.spread_radius = f.spread_radius;
    config.magnitude_threshold = f.magnitude_threshold;
    config.specular_threshold = f.specular_threshold;
    config.k_per_channel = f.k_per_channel;
    config.channels = f.channels;
    const RGBDFrame frame = load_stabilized(a.frame, config.window_size);
    const double mean = bench_full_comparison(frame, dbs[i], config, a.repetitions);
    means.push_back(mean);
    csv << a.dbs[i] << ",\"" << f.channels.to_string() << "\"," << dbs[i].size() << ',' << dbs[i].feature_count()
        << ',' << std::setprecision(6) << mean << '\n';
  }
  std::cout << csv.str();
  if (means.size() == 2 && means[0] > 0.0)
    std::cout << "ratio " << std::setprecision(3) << means[1] / means[0] << '\n';
  if (!a.csv.empty())
    write_text(a.csv, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Multimodal template matching for RGB-D tabletop scenes"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Render a synthetic scene (or rotated views of it)");
  gen_cmd->add_option("--scene", gen.scene_path, "Scene spec file");
  gen_cmd->add_option("--object", gen.object, "Catalog object to place alone on the table");
  gen_cmd->add_option("--x", gen.x, "Lateral table position, m");
  gen_cmd->add_option("--y", gen.y, "Forward table position, m");
  gen_cmd->add_option("--rotation", gen.rotation, "Rotation about the vertical axis, rad");
  gen_cmd->add_option("--views", gen.views, "Write this many rotated views of the first object");
  gen_cmd->add_option("--frames", gen.frames, "Frames per scene")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Noise seed");
  gen_cmd->add_flag("--eval-sensor", gen.eval_sensor, "Use the 320x240 evaluation sensor");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Build template databases");
  train_cmd->add_option("--view", train.views, "View directory written by gen (repeatable)");
  train_cmd->add_flag("--eval-set", train.eval_set, "Train on the built-in evaluation views");
  train_cmd->add_option("--views-per-position", train.views_per_position, "Rotated views per platform position")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--channels", train.channels, "Channel set, e.g. m1,m2 (repeatable)");
  train_cmd->add_option("--config", train.config, "Key-value config file");
  train_cmd->add_option("--seed", train.seed, "Render seed");
  train_cmd->add_option("--out", train.out, "Output directory for databases and counts.csv")->required();

  DetectArgs det;
  auto* detect_cmd = app.add_subcommand("detect", "Detect and locate objects in a frame");
  detect_cmd->add_option("--frame", det.frame, "Frame directory or directory of frames")->required();
  detect_cmd->add_option("--db", det.db, "Template database")->required();
  detect_cmd->add_option("--threshold", det.threshold, "Similarity threshold, percent")->check(CLI::Range(0.0, 100.0));
  detect_cmd->add_option("--channels", det.channels, "Channel set (defaults to the database's)");
  detect_cmd->add_option("--config", det.config, "Key-value config file");
  detect_cmd->add_option("--csv", det.csv, "Write detections as CSV");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Train and run the synthetic recognition trials");
  eval_cmd->add_option("--channels", ev.channels, "Channel set (repeatable; default: four standard sets)");
  eval_cmd->add_option("--config", ev.config, "Key-value config file");
  eval_cmd->add_option("--views-per-position", ev.views_per_position, "Rotated training views per position")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--trials", ev.trials, "Trials per object");
  eval_cmd->add_option("--threshold", ev.threshold, "Recognition threshold, percent")->check(CLI::Range(0.0, 100.0));
  eval_cmd->add_option("--seed", ev.seed, "Trial seed");
  eval_cmd->add_option("--out", ev.out, "Directory for CSV reports and databases");
  eval_cmd->add_flag("--assert", ev.assert_rates, "Exit 1 unless the recognition rates meet the expected ranges");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time full template comparison");
  bench_cmd->add_option("--frame", bench.frame, "Frame directory or directory of frames")->required();
  bench_cmd->add_option("--db", bench.dbs, "Template database (repeatable)")->required();
  bench_cmd->add_option("--config", bench.config, "Key-value config file");
  bench_cmd->add_option("--repetitions", bench.repetitions, "Timed runs per database");
  bench_cmd->add_flag("--matched", bench.matched, "Truncate all databases to the smallest template count");
  bench_cmd->add_option("--csv", bench.csv, "Write timings as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd)
      return run_gen(gen);
    if (*train_cmd)
      return run_train(train);
    if (*detect_cmd)
      return run_detect(det);
    if (*eval_cmd)
      return run_eval(ev);
    if (*bench_cmd)
      return run_bench(bench);
  } catch (const AssertFailure& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return kExitAssert;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SceneSpecError& e) {
    std::cerr << "scene error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
