#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfr/modalities.hpp"

namespace mfr {

/// Small bitset over the four modality channels.
class ChannelSet
{
public:
  constexpr ChannelSet() = default;
  constexpr ChannelSet(std::initializer_list<ChannelId> ids)
  {
    for (auto id : ids)
      bits_ |= bit(id);
  }

  static constexpr ChannelSet all() { return ChannelSet{ChannelId::M1, ChannelId::M2, ChannelId::M3, ChannelId::M4}; }
  static constexpr ChannelSet baseline() { return ChannelSet{ChannelId::M1, ChannelId::M2}; }
  static constexpr ChannelSet from_bits(std::uint8_t bits)
  {
    ChannelSet s;
    s.bits_ = bits & 0x0F;
    return s;
  }

  /// Parses "m1,m2,m4" (case-insensitive, "all" accepted).
  static ChannelSet parse(const std::string& text);

  constexpr bool contains(ChannelId id) const { return (bits_ & bit(id)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool subset_of(ChannelSet other) const { return (bits_ & ~other.bits_) == 0; }
  void insert(ChannelId id) { bits_ |= bit(id); }

  std::vector<ChannelId> ids() const;
  /// "m1,m2,..." in channel order.
  std::string to_string() const;

  constexpr bool operator==(const ChannelSet&) const = default;

private:
  static constexpr std::uint8_t bit(ChannelId id) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(id)); }
  std::uint8_t bits_ = 0;
};

/// Parameters every template in one database must share.
struct ConfigFingerprint
{
  std::uint8_t orientation_bins = 8;
  std::uint8_t normal_bins = 9;
  std::uint16_t spread_radius = 4;
  float magnitude_threshold = 30.0f;
  std::uint8_t specular_threshold = 251;
  std::uint16_t k_per_channel = 16;
  ChannelSet channels = ChannelSet::all();

  bool operator==(const ConfigFingerprint&) const = default;
};

struct PipelineConfig
{
  int orientation_bins = 8;
  int normal_bins = 9;
  int spread_radius = 4;
  float magnitude_threshold = 30.0f;
  int specular_threshold = 251;
  int k_per_channel = 16;
  double dup_threshold = 97.0;
  int nms_radius = 16;
  int window_size = 10;
  int patch_radius = 2;
  int feature_spacing = 5;
  int mask_dilation = 2;
  double match_threshold = 75.0;
  int stride = 1;
  std::uint64_t selection_seed = 0x5eed;
  ChannelSet channels = ChannelSet::all();

  ConfigFingerprint fingerprint() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;

  int bins_for(ChannelId id) const { return id == ChannelId::M2 ? normal_bins : orientation_bins; }
};

/// Reads key=value lines ('#' comments) over the defaults. Unknown keys are errors.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
std::string format_config(const PipelineConfig& config);

}  // namespace mfr
