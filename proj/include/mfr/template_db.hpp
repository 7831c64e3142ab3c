#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mfr/config.hpp"
#include "mfr/modalities.hpp"

namespace mfr {

/// One quantized cue sample, positioned relative to the template anchor.
struct Feature
{
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  ChannelId channel = ChannelId::M1;
  std::uint8_t bin = 0;

  bool operator==(const Feature&) const = default;
};

struct Template
{
  std::string object_id;
  std::uint32_t template_id = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<Feature> features;
  /// Free-form training metadata; kept in memory only, not persisted.
  std::string pose_label;

  int count(ChannelId channel) const;

  /// Equality over everything persisted (pose_label excluded).
  bool same_content(const Template& other) const;
};

struct TemplateDB
{
  static constexpr std::uint16_t kVersion = 1;

  ConfigFingerprint fingerprint;
  std::vector<Template> templates;

  /// Appends a template with the next free id and returns that id.
  std::uint32_t add(Template t);
  std::uint32_t next_id() const;
  bool empty() const { return templates.empty(); }
  std::size_t size() const { return templates.size(); }
  std::size_t feature_count() const;

  /// Throws ConfigError unless `runtime` equals this database's fingerprint.
  void require_fingerprint(const ConfigFingerprint& runtime) const;

  /// Templates per object_id.
  std::map<std::string, int> counts() const;

  bool same_content(const TemplateDB& other) const;
};

std::vector<std::uint8_t> serialize_db(const TemplateDB& db);
/// Throws FormatError (truncation, bad magic), VersionError or ChecksumError.
TemplateDB deserialize_db(const std::vector<std::uint8_t>& bytes);

void save_db(const TemplateDB& db, const std::filesystem::path& path);
TemplateDB load_db(const std::filesystem::path& path);

}  // namespace mfr
