#include "mfr/template_db.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <zlib.h>

#include "mfr/error.hpp"

namespace mfr {

int Template::count(ChannelId channel) const
{
  return static_cast<int>(std::count_if(features.begin(), features.end(),
                                        [channel](const Feature& f) { return f.channel == channel; }));
}

bool Template::same_content(const Template& other) const
{
  return object_id == other.object_id && template_id == other.template_id && width == other.width &&
         height == other.height && features == other.features;
}

std::uint32_t TemplateDB::next_id() const
{
  std::uint32_t next = 0;
  for (const auto& t : templates)
    next = std::max(next, t.template_id + 1);
  return next;
}

std::uint32_t TemplateDB::add(Template t)
{
  t.template_id = next_id();
  templates.push_back(std::move(t));
  return templates.back().template_id;
}

std::size_t TemplateDB::feature_count() const
{
  std::size_t n = 0;
  for (const auto& t : templates)
    n += t.features.size();
  return n;
}

void TemplateDB::require_fingerprint(const ConfigFingerprint& runtime) const
{
  if (!(runtime == fingerprint))
    throw ConfigError("template database was built with a different configuration");
}

std::map<std::string, int> TemplateDB::counts() const
{
  std::map<std::string, int> out;
  for (const auto& t : templates)
    ++out[t.object_id];
  return out;
}

bool TemplateDB::same_content(const TemplateDB& other) const
{
  if (!(fingerprint == other.fingerprint) || templates.size() != other.templates.size())
    return false;
  for (std::size_t i = 0; i < templates.size(); ++i)
    if (!templates[i].same_content(other.templates[i]))
      return false;
  return true;
}

namespace {

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

class Writer
{
public:
  template <typename T>
  void put(T value)
  {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n)
  {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader
{
public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get()
  {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const std::uint8_t* take(std::size_t n)
  {
    if (n > size_ - pos_)
      throw FormatError("template database is truncated");
    const auto* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool at_end() const { return pos_ == size_; }

private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'M', 'F', 'D', 'B'};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n)
{
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> serialize_db(const TemplateDB& db)
{
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint16_t>(TemplateDB::kVersion);

  const auto& f = db.fingerprint;
  w.put<std::uint8_t>(f.orientation_bins);
  w.put<std::uint8_t>(f.normal_bins);
  w.put<std::uint16_t>(f.spread_radius);
  w.put<float>(f.magnitude_threshold);
  w.put<std::uint8_t>(f.specular_threshold);
  w.put<std::uint16_t>(f.k_per_channel);
  w.put<std::uint8_t>(f.channels.bits());

  w.put<std::uint32_t>(static_cast<std::uint32_t>(db.templates.size()));
  for (const auto& t : db.templates) {
    if (t.object_id.size() > 0xFFFF)
      throw FormatError("object id too long");
    if (t.features.size() > 0xFFFF)
      throw FormatError("too many features in template");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.object_id.size()));
    w.put_bytes(t.object_id.data(), t.object_id.size());
    w.put<std::uint32_t>(t.template_id);
    w.put<std::uint16_t>(t.width);
    w.put<std::uint16_t>(t.height);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.features.size()));
    for (const auto& feat : t.features) {
      w.put<std::uint16_t>(feat.x);
      w.put<std::uint16_t>(feat.y);
      w.put<std::uint8_t>(static_cast<std::uint8_t>(feat.channel));
      w.put<std::uint8_t>(feat.bin);
    }
  }
  w.put<std::uint32_t>(crc32_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

TemplateDB deserialize_db(const std::vector<std::uint8_t>& bytes)
{
  if (bytes.size() < sizeof(kMagic) + 2 + 4)
    throw FormatError("template database is truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a template database (bad magic)");

  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (crc32_of(bytes.data(), body) != stored)
    throw ChecksumError("template database checksum mismatch");

  Reader header(bytes.data() + sizeof(kMagic), 2);
  const auto version = header.get<std::uint16_t>();
  if (version != TemplateDB::kVersion)
    throw VersionError("unsupported template database version " + std::to_string(version));

  Reader r(bytes.data() + sizeof(kMagic) + 2, body - sizeof(kMagic) - 2);
  TemplateDB db;
  auto& f = db.fingerprint;
  f.orientation_bins = r.get<std::uint8_t>();
  f.normal_bins = r.get<std::uint8_t>();
  f.spread_radius = r.get<std::uint16_t>();
  f.magnitude_threshold = r.get<float>();
  f.specular_threshold = r.get<std::uint8_t>();
  f.k_per_channel = r.get<std::uint16_t>();
  f.channels = ChannelSet::from_bits(r.get<std::uint8_t>());

  const auto count = r.get<std::uint32_t>();
  std::set<std::uint32_t> ids;
  for (std::uint32_t i = 0; i < count; ++i) {
    Template t;
    const auto len = r.get<std::uint16_t>();
    const auto* s = r.take(len);
    t.object_id.assign(reinterpret_cast<const char*>(s), len);
    t.template_id = r.get<std::uint32_t>();
    t.width = r.get<std::uint16_t>();
    t.height = r.get<std::uint16_t>();
    const auto n = r.get<std::uint16_t>();
    t.features.resize(n);
    for (auto& feat : t.features) {
      feat.x = r.get<std::uint16_t>();
      feat.y = r.get<std::uint16_t>();
      const auto ch = r.get<std::uint8_t>();
      if (ch >= kChannelCount)
        throw FormatError("feature has an unknown channel");
      feat.channel = static_cast<ChannelId>(ch);
      feat.bin = r.get<std::uint8_t>();
    }
    if (!ids.insert(t.template_id).second)
      throw FormatError("duplicate template id " + std::to_string(t.template_id));
    db.templates.push_back(std::move(t));
  }
  if (!r.at_end())
    throw FormatError("trailing bytes after the last template");
  return db;
}

void save_db(const TemplateDB& db, const std::filesystem::path& path)
{
  const auto bytes = serialize_db(db);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("short write to " + path.string());
}

TemplateDB load_db(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_db(bytes);
}

}  // namespace mfr
