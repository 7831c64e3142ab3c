#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mfr/config.hpp"
#include "mfr/error.hpp"

using namespace mfr;

TEST_CASE("defaults")
{
  const PipelineConfig c;
  CHECK(c.orientation_bins == 8);
  CHECK(c.normal_bins == 9);
  CHECK(c.spread_radius == 4);
  CHECK(c.magnitude_threshold == 30.0f);
  CHECK(c.specular_threshold == 251);
  CHECK(c.k_per_channel == 16);
  CHECK(c.dup_threshold == 97.0);
  CHECK(c.nms_radius == 16);
  CHECK(c.window_size == 10);
  CHECK(c.channels == ChannelSet::all());
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("channel set parsing")
{
  CHECK(ChannelSet::parse("m1,m2") == ChannelSet::baseline());
  CHECK(ChannelSet::parse("M4, m1") == (ChannelSet{ChannelId::M1, ChannelId::M4}));
  CHECK(ChannelSet::parse("all") == ChannelSet::all());
  CHECK(ChannelSet::parse("m1,m2,m3,m4").to_string() == "m1,m2,m3,m4");
  CHECK(ChannelSet::parse("m3,m1").to_string() == "m1,m3");
  CHECK_THROWS_AS(ChannelSet::parse("m5"), ConfigError);
  CHECK_THROWS_AS(ChannelSet::parse(""), ConfigError);
  CHECK(ChannelSet::baseline().subset_of(ChannelSet::all()));
  CHECK_FALSE(ChannelSet::all().subset_of(ChannelSet::baseline()));
}

TEST_CASE("key-value config")
{
  const PipelineConfig c = parse_config("# tuning\nT = 2\ntau_mag=25.5\nk_per_channel=8  # fewer\nchannels=m1,m3\n");
  CHECK(c.spread_radius == 2);
  CHECK(c.magnitude_threshold == 25.5f);
  CHECK(c.k_per_channel == 8);
  CHECK(c.channels == (ChannelSet{ChannelId::M1, ChannelId::M3}));
  CHECK(c.nms_radius == 16);

  CHECK_THROWS_AS(parse_config("bogus=1"), ConfigError);
  CHECK_THROWS_AS(parse_config("spread_radius"), ConfigError);
  CHECK_THROWS_AS(parse_config("spread_radius=abc"), ConfigError);
  CHECK_THROWS_AS(parse_config("spread_radius=-1"), ConfigError);
  CHECK_THROWS_AS(parse_config("tau_dup=101"), ConfigError);
  CHECK_THROWS_AS(parse_config("window_size=0"), ConfigError);
}

TEST_CASE("format then parse is the identity")
{
  PipelineConfig c;
  c.spread_radius = 3;
  c.magnitude_threshold = 12.25f;
  c.dup_threshold = 95.5;
  c.channels = ChannelSet{ChannelId::M1, ChannelId::M2, ChannelId::M4};
  const PipelineConfig d = parse_config(format_config(c));
  CHECK(d.fingerprint() == c.fingerprint());
  CHECK(format_config(d) == format_config(c));
}

TEST_CASE("config files")
{
  const auto path = std::filesystem::temp_directory_path() / "mfr_test_config.txt";
  std::ofstream(path) << "nms_radius=8\n";
  CHECK(load_config(path).nms_radius == 8);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), IoError);
}

TEST_CASE("fingerprint covers the shared parameters only")
{
  PipelineConfig a, b;
  b.match_threshold = 50.0;
  b.nms_radius = 3;
  CHECK(a.fingerprint() == b.fingerprint());
  b.spread_radius = 2;
  CHECK_FALSE(a.fingerprint() == b.fingerprint());
}
