#include "mfr/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mfr/error.hpp"

namespace mfr {

namespace {

std::string trim(std::string s)
{
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config: bad value for " + key + ": '" + value + "'");
  return out;
}

}  // namespace

ChannelSet ChannelSet::parse(const std::string& text)
{
  ChannelSet set;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = lower(trim(item));
    if (item.empty())
      continue;
    if (item == "all")
      return all();
    bool found = false;
    for (const auto& m : modality_channels()) {
      if (item == m.name) {
        set.insert(m.id);
        found = true;
      }
    }
    if (!found)
      throw ConfigError("unknown channel '" + item + "'");
  }
  if (set.empty())
    throw ConfigError("empty channel set");
  return set;
}

std::vector<ChannelId> ChannelSet::ids() const
{
  std::vector<ChannelId> out;
  for (const auto& m : modality_channels())
    if (contains(m.id))
      out.push_back(m.id);
  return out;
}

std::string ChannelSet::to_string() const
{
  std::string out;
  for (auto id : ids()) {
    if (!out.empty())
      out += ',';
    out += channel_name(id);
  }
  return out;
}

ConfigFingerprint PipelineConfig::fingerprint() const
{
  ConfigFingerprint f;
  f.orientation_bins = static_cast<std::uint8_t>(orientation_bins);
  f.normal_bins = static_cast<std::uint8_t>(normal_bins);
  f.spread_radius = static_cast<std::uint16_t>(spread_radius);
  f.magnitude_threshold = magnitude_threshold;
  f.specular_threshold = static_cast<std::uint8_t>(specular_threshold);
  f.k_per_channel = static_cast<std::uint16_t>(k_per_channel);
  f.channels = channels;
  return f;
}

void PipelineConfig::validate() const
{
  auto require = [](bool ok, const char* what) {
    if (!ok)
      throw ConfigError(std::string("config: ") + what);
  };
  require(orientation_bins >= 2 && orientation_bins <= 16, "orientation_bins must be in [2,16]");
  require(normal_bins >= 3 && normal_bins <= 16, "normal_bins must be in [3,16]");
  require(spread_radius >= 0 && spread_radius <= 64, "spread radius must be in [0,64]");
  require(magnitude_threshold >= 0.0f, "tau_mag must be non-negative");
  require(specular_threshold >= 0 && specular_threshold <= 255, "specular_threshold must be 8-bit");
  require(k_per_channel >= 1 && k_per_channel <= 4096, "k_per_channel must be in [1,4096]");
  require(dup_threshold >= 0.0 && dup_threshold <= 100.0, "tau_dup must be a percentage");
  require(nms_radius >= 0, "nms_radius must be non-negative");
  require(window_size >= 1, "window_size must be positive");
  require(patch_radius >= 1, "patch_radius must be positive");
  require(feature_spacing >= 0, "feature_spacing must be non-negative");
  require(mask_dilation >= 0, "mask_dilation must be non-negative");
  require(match_threshold >= 0.0 && match_threshold <= 100.0, "threshold must be a percentage");
  require(stride >= 1, "stride must be positive");
  require(!channels.empty(), "channel set is empty");
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base)
{
  PipelineConfig c = base;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto as_int = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<int>(k, v); };
  };
  auto as_double = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<double>(k, v); };
  };
  const std::map<std::string, Setter> setters = {
      {"orientation_bins", as_int(c.orientation_bins)},
      {"normal_bins", as_int(c.normal_bins)},
      {"spread_radius", as_int(c.spread_radius)},
      {"t", as_int(c.spread_radius)},
      {"tau_mag", [&c](const std::string& k, const std::string& v) { c.magnitude_threshold = parse_number<float>(k, v); }},
      {"specular_threshold", as_int(c.specular_threshold)},
      {"k_per_channel", as_int(c.k_per_channel)},
      {"tau_dup", as_double(c.dup_threshold)},
      {"nms_radius", as_int(c.nms_radius)},
      {"window_size", as_int(c.window_size)},
      {"patch_radius", as_int(c.patch_radius)},
      {"feature_spacing", as_int(c.feature_spacing)},
      {"mask_dilation", as_int(c.mask_dilation)},
      {"threshold", as_double(c.match_threshold)},
      {"stride", as_int(c.stride)},
      {"selection_seed", [&c](const std::string& k, const std::string& v) { c.selection_seed = parse_number<std::uint64_t>(k, v); }},
      {"channels", [&c](const std::string&, const std::string& v) { c.channels = ChannelSet::parse(v); }},
  };

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string format_config(const PipelineConfig& c)
{
  std::ostringstream out;
  out << "orientation_bins=" << c.orientation_bins << "\n"
      << "normal_bins=" << c.normal_bins << "\n"
      << "spread_radius=" << c.spread_radius << "\n"
      << "tau_mag=" << c.magnitude_threshold << "\n"
      << "specular_threshold=" << c.specular_threshold << "\n"
      << "k_per_channel=" << c.k_per_channel << "\n"
      << "tau_dup=" << c.dup_threshold << "\n"
      << "nms_radius=" << c.nms_radius << "\n"
      << "window_size=" << c.window_size << "\n"
      << "patch_radius=" << c.patch_radius << "\n"
      << "feature_spacing=" << c.feature_spacing << "\n"
      << "mask_dilation=" << c.mask_dilation << "\n"
      << "threshold=" << c.match_threshold << "\n"
      << "stride=" << c.stride << "\n"
      << "selection_seed=" << c.selection_seed << "\n"
      << "channels=" << c.channels.to_string() << "\n";
  return out.str();
}

}  // namespace mfr
