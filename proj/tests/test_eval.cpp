#include <doctest.h>

#include <random>
#include <sstream>

#include "mfr/eval.hpp"

using namespace mfr;

namespace {

TopDetection top(bool tp, float similarity, std::string id = "x")
{
  TopDetection d;
  d.detected = true;
  d.object_id = std::move(id);
  d.similarity = similarity;
  d.true_positive = tp;
  return d;
}

TrialResult trial(std::uint32_t id, Category c, std::vector<TopDetection> full, std::vector<TopDetection> diffuse = {})
{
  TrialResult t;
  t.trial_id = id;
  t.object_id = "x";
  t.category = c;
  t.full = std::move(full);
  t.diffuse_only = std::move(diffuse);
  return t;
}

std::string first_line(const std::string& s)
{
  return s.substr(0, s.find('\n'));
}

}  // namespace

TEST_CASE("true positives need the right id within the radius")
{
  const Point3D truth{0.0, 0.1, 0.6};
  CHECK(is_true_positive("jar", {0.03, 0.1, 0.63}, "jar", truth, 0.05));
  CHECK(is_true_positive("jar", {0.05, 0.1, 0.6}, "jar", truth, 0.05));  // boundary is inclusive
  CHECK_FALSE(is_true_positive("jar", {0.0, 0.1, 0.66}, "jar", truth, 0.05));
  CHECK_FALSE(is_true_positive("vase", truth, "jar", truth, 0.05));
  CHECK(distance({1, 2, 3}, {1, 5, 7}) == doctest::Approx(5.0));
}

TEST_CASE("roc rates are per trial")
{
  // set 0: trials with TP at 90, TP at 60, FP at 80, nothing detected
  TopDetection none;
  const std::vector<TrialResult> trials{trial(0, Category::Diffuse, {top(true, 90)}, {top(true, 90)}),
                                        trial(1, Category::Transparent, {top(true, 60)}),
                                        trial(2, Category::Composite, {top(false, 80)}),
                                        trial(3, Category::Diffuse, {none}, {top(false, 70)})};
  const auto roc = roc_curve(trials, 0, false);
  REQUIRE(roc.size() == 101);
  CHECK(roc[0].tpr == doctest::Approx(0.5));
  CHECK(roc[0].fpr == doctest::Approx(0.25));
  CHECK(roc[75].tpr == doctest::Approx(0.25));
  CHECK(roc[75].fpr == doctest::Approx(0.25));
  CHECK(roc[85].fpr == doctest::Approx(0.0));
  CHECK(recognition_rate(roc, 60) == doctest::Approx(0.5));
  CHECK(recognition_rate(roc, 61) == doctest::Approx(0.25));

  const auto diffuse = roc_curve(trials, 0, true);
  CHECK(diffuse[0].tpr == doctest::Approx(0.5));
  CHECK(diffuse[0].fpr == doctest::Approx(0.5));
  CHECK(diffuse[71].fpr == doctest::Approx(0.0));
}

TEST_CASE("roc curves are monotone in the threshold")
{
  std::mt19937 rng(31);
  std::bernoulli_distribution tp(0.6);
  std::uniform_real_distribution<float> s(0.0f, 100.0f);
  std::vector<TrialResult> trials;
  for (std::uint32_t i = 0; i < 200; ++i)
    trials.push_back(trial(i, Category::Transparent, {top(tp(rng), s(rng))}));
  const auto roc = roc_curve(trials, 0, false);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].threshold == static_cast<int>(i));
    CHECK(roc[i].tpr <= roc[i - 1].tpr);
    CHECK(roc[i].fpr <= roc[i - 1].fpr);
    CHECK(roc[i].tpr + roc[i].fpr <= 1.0 + 1e-12);
  }
  CHECK(roc_dominates(roc, roc));
}

TEST_CASE("dominance")
{
  auto curve = [](std::vector<std::pair<double, double>> pts) {
    std::vector<RocPoint> out;
    int t = 0;
    for (auto [fpr, tpr] : pts)
      out.push_back({t++, tpr, fpr});
    return out;
  };
  const auto good = curve({{0.2, 0.9}, {0.1, 0.8}, {0.0, 0.5}});
  const auto bad = curve({{0.3, 0.7}, {0.1, 0.4}, {0.0, 0.1}});
  CHECK(roc_dominates(good, bad));
  CHECK_FALSE(roc_dominates(bad, good));
  // a curve with fewer false positives at equal recall still dominates
  CHECK(roc_dominates(curve({{0.0, 0.9}}), good));
  CHECK_FALSE(roc_dominates(curve({{0.5, 1.0}}), good));
}

TEST_CASE("restricting and truncating databases")
{
  TemplateDB db;
  for (const char* id : {"soup_can", "water_glass", "jar", "detergent"}) {
    Template t;
    t.object_id = id;
    t.width = t.height = 4;
    t.features = {{1, 1, ChannelId::M1, 2}};
    db.add(t);
  }
  const TemplateDB diffuse = restrict_to(db, catalog(), Category::Diffuse);
  REQUIRE(diffuse.size() == 2);
  CHECK(diffuse.templates[0].object_id == "soup_can");
  CHECK(diffuse.templates[1].object_id == "detergent");
  CHECK(diffuse.fingerprint == db.fingerprint);

  CHECK(truncate_db(db, 2).size() == 2);
  CHECK(truncate_db(db, 9).size() == 4);
  CHECK(truncate_db(db, 0).size() == 0);
}

TEST_CASE("eval geometry")
{
  const EvalSetup setup;
  CHECK(setup.scene.width == 320);
  CHECK(setup.scene.height == 240);
  CHECK(default_eval_config().spread_radius == 2);
  CHECK(EvalSetup::default_channel_sets().size() == 4);
  CHECK(default_positions().size() == 5);

  const SceneSpec v = view_scene(setup, 2, 1, 6);
  REQUIRE(v.objects.size() == 1);
  CHECK(v.objects[0].id == setup.objects[2].id);
  CHECK(v.objects[0].x == doctest::Approx(setup.positions[1].x));
  CHECK(v.objects[0].y == doctest::Approx(setup.positions[1].y));
  CHECK(v.objects[0].rotation == doctest::Approx(2 * 3.141592653589793 * 6 / 24));

  const SceneSpec a = trial_scene(setup, 4, 7), b = trial_scene(setup, 4, 7), c = trial_scene(setup, 4, 8);
  CHECK(format_scene(a) == format_scene(b));
  CHECK(format_scene(a) != format_scene(c));
}

TEST_CASE("a miniature evaluation end to end")
{
  EvalSetup setup;
  setup.objects = {catalog_object("soup_can"), catalog_object("water_glass")};
  setup.positions = {default_positions().front()};
  setup.views_per_position = 4;
  setup.trials_per_object = 3;
  const std::vector<ChannelSet> sets{ChannelSet::baseline(), ChannelSet::all()};
  int hooked = 0;
  const auto trained = train_channel_sets(setup, default_eval_config(), sets, {},
                                          [&](std::size_t, const Template&, const FrameResponses&, cv::Point) {
                                            ++hooked;
                                          });
  REQUIRE(trained.size() == 2);
  CHECK(static_cast<std::size_t>(hooked) == trained[0].db.size() + trained[1].db.size());
  for (const auto& t : trained) {
    CHECK(t.db.counts().at("soup_can") >= 1);
    CHECK(t.db.counts().at("water_glass") >= 1);
  }

  const auto results = run_trials(setup, trained);
  REQUIRE(results.size() == 6);
  for (const auto& r : results) {
    CHECK(r.full.size() == 2);
    CHECK(r.diffuse_only.size() == (r.category == Category::Diffuse ? 2u : 0u));
  }

  CHECK(first_line(counts_csv(trained, setup.objects)) == "object,category,\"m1,m2\",\"m1,m2,m3,m4\"");
  CHECK(first_line(roc_csv(results, trained)) == "channels,object_set,threshold,tpr,fpr");
  CHECK(first_line(rates_csv(results, trained, 75)) == "channels,all_objects,diffuse_only");
  CHECK(first_line(trials_csv(results, trained)) ==
        "trial_id,object,category,channels,database,detected_object,similarity,localized,error_m,true_positive");
  std::istringstream rows(trials_csv(results, trained));
  std::string line;
  int n = -1;
  while (std::getline(rows, line))
    ++n;
  CHECK(n == 6 * 2 + 3 * 2);
}
