#include "sonify/store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "sonify/error.hpp"

namespace sonify {
namespace {


std::string parse_error_at(const std::string& source, std::size_t line, const std::string& what) {
  return source + ":" + std::to_string(line) + ": " + what;
}

const std::string& require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& source, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kParseError, parse_error_at(source, line, std::string("missing key '") + key + "'"));
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kParseError,
                parse_error_at(source, line, std::string("key '") + key + "' must be a string"));
  }
  return it->get_ref<const std::string&>();
}

// Little-endian primitives; the archive format is byte-exact regardless of host.
template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

class ArchiveReader {
 public:
  ArchiveReader(std::istream& in, const std::string& source) : in_(in), source_(source) {}

  template <typename U>
  U get_le(const char* what) {
    std::array<unsigned char, sizeof(U)> bytes{};
    read(bytes.data(), bytes.size(), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
  }

  void read(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      fail(std::string("truncated while reading ") + what);
    }
    offset_ += n;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kParseError,
                source_ + ": byte " + std::to_string(offset_) + ": " + what);
  }

 private:
  std::istream& in_;
  const std::string& source_;
  std::size_t offset_ = 0;
};

std::optional<int> parse_index(std::string_view s) {
  if (s.empty() || (s.size() > 1 && s.front() == '0')) return std::nullopt;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value < 0) return std::nullopt;
  return value;
}

}  // namespace

Manifest::Manifest(std::vector<AssetRecord> records) {
  for (auto& r : records) add(std::move(r));
}

void Manifest::add(AssetRecord record) {
  if (record.id.empty()) throw Error(ErrorCode::kInvalidArgument, "asset id is empty");
  if (record.scene.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "asset '" + record.id + "' has an empty scene");
  }
  if (index_.contains(record.id)) {
    throw Error(ErrorCode::kDuplicateId, "asset id '" + record.id + "' appears more than once");
  }
  index_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

const AssetRecord* Manifest::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

const AssetRecord& Manifest::at(std::string_view id) const {
  if (const auto* r = find(id)) return *r;
  throw Error(ErrorCode::kUnknownId, "no asset with id '" + std::string(id) + "'");
}

bool Manifest::has_scene(std::string_view scene) const {
  return std::any_of(records_.begin(), records_.end(),
                     [&](const AssetRecord& r) { return r.scene == scene; });
}

std::vector<std::string> Manifest::scenes() const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (std::find(out.begin(), out.end(), r.scene) == out.end()) out.push_back(r.scene);
  }
  return out;
}

Manifest parse_manifest(std::istream& in, const std::string& source_name) {
  Manifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, parse_error_at(source_name, line_no, e.what()));
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kParseError, parse_error_at(source_name, line_no, "record is not an object"));
    }

    AssetRecord record;
    record.id = require_string(obj, "id", source_name, line_no);
    const auto& modality = require_string(obj, "modality", source_name, line_no);
    const auto m = modality_from_name(modality);
    if (!m) {
      throw Error(ErrorCode::kParseError,
                  parse_error_at(source_name, line_no, "unknown modality '" + modality + "'"));
    }
    record.modality = *m;
    record.scene = require_string(obj, "scene", source_name, line_no);
    record.uri = require_string(obj, "uri", source_name, line_no);
    if (obj.contains("caption") && !obj["caption"].is_null()) {
      record.caption = require_string(obj, "caption", source_name, line_no);
    }
    if (record.id.empty() || record.scene.empty()) {
      throw Error(ErrorCode::kParseError,
                  parse_error_at(source_name, line_no, "id and scene must be non-empty"));
    }
    if (manifest.find(record.id)) {
      throw Error(ErrorCode::kDuplicateId,
                  parse_error_at(source_name, line_no, "duplicate id '" + record.id + "'"));
    }
    manifest.add(std::move(record));
  }
  return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open manifest " + path.string());
  return parse_manifest(in, path.string());
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  for (const auto& r : manifest.records()) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["modality"] = modality_name(r.modality);
    obj["scene"] = r.scene;
    obj["uri"] = r.uri;
    if (r.caption) obj["caption"] = *r.caption;
    out << obj.dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + path.string());
  write_manifest(out, manifest);
  if (!out) throw Error(ErrorCode::kIo, "failed writing manifest " + path.string());
}

EmbeddingArchive parse_archive(std::istream& in, const std::string& source_name) {
  ArchiveReader reader(in, source_name);
  char magic[4];
  reader.read(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kArchiveMagic, sizeof magic) != 0) reader.fail("bad magic, expected EMB1");

  EmbeddingArchive archive;
  archive.dim = reader.get_le<std::uint32_t>("dim");
  if (archive.dim < Embedding::kMinDim) {
    reader.fail("dim " + std::to_string(archive.dim) + " is below the minimum of 2");
  }
  const auto count = reader.get_le<std::uint32_t>("count");
  archive.entries.reserve(std::min<std::uint32_t>(count, 1u << 16));

  std::vector<float> values;
  for (std::uint32_t rec = 0; rec < count; ++rec) {
    const auto id_len = reader.get_le<std::uint16_t>("id length");
    std::string id(id_len, '\0');
    reader.read(id.data(), id_len, "id");
    const auto code = reader.get_le<std::uint8_t>("modality");
    const auto modality = modality_from_code(code);
    if (!modality) {
      reader.fail("record " + std::to_string(rec) + " ('" + id + "'): bad modality code " +
                  std::to_string(code));
    }
    values.assign(archive.dim, 0.0f);
    for (auto& v : values) {
      v = std::bit_cast<float>(reader.get_le<std::uint32_t>("vector component"));
    }
    try {
      archive.entries.emplace_back(std::move(id), *modality, values);
    } catch (const Error& e) {
      reader.fail("record " + std::to_string(rec) + ": " + e.detail());
    }
  }
  if (!reader.at_end()) reader.fail("trailing bytes after " + std::to_string(count) + " records");
  return archive;
}

EmbeddingArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open archive " + path.string());
  return parse_archive(in, path.string());
}

void write_archive(std::ostream& out, const EmbeddingArchive& archive) {
  if (archive.entries.size() > UINT32_MAX) {
    throw Error(ErrorCode::kInvalidArgument, "too many records for an EMB1 archive");
  }
  out.write(kArchiveMagic, sizeof kArchiveMagic);
  put_le<std::uint32_t>(out, archive.dim);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(archive.entries.size()));
  for (const auto& e : archive.entries) {
    if (e.dim() != archive.dim) {
      throw Error(ErrorCode::kDimMismatch, "embedding '" + e.id() + "' has dim " +
                                               std::to_string(e.dim()) + ", archive dim is " +
                                               std::to_string(archive.dim));
    }
    if (e.id().size() > UINT16_MAX) {
      throw Error(ErrorCode::kInvalidArgument, "id longer than 65535 bytes");
    }
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.id().size()));
    out.write(e.id().data(), static_cast<std::streamsize>(e.id().size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.modality()));
    for (const float v : e.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
}

void write_archive(const std::filesystem::path& path, const EmbeddingArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write archive " + path.string());
  write_archive(out, archive);
  if (!out) throw Error(ErrorCode::kIo, "failed writing archive " + path.string());
}

std::optional<SiblingRef> parse_sibling_id(std::string_view id) {
  const auto hash = id.rfind('#');
  if (hash == std::string_view::npos || hash == 0 || hash + 2 > id.size()) return std::nullopt;
  SiblingRef ref;
  ref.parent = std::string(id.substr(0, hash));
  const char kind = id[hash + 1];
  if (kind == 't') {
    ref.modality = Modality::kText;
  } else if (kind == 'a') {
    ref.modality = Modality::kAudio;
  } else {
    return std::nullopt;
  }
  auto rest = id.substr(hash + 2);
  const auto dot = rest.find('.');
  const auto index = parse_index(rest.substr(0, dot));
  if (!index) return std::nullopt;
  ref.index = *index;
  if (dot != std::string_view::npos) {
    if (ref.modality != Modality::kAudio) return std::nullopt;
    const auto variant = parse_index(rest.substr(dot + 1));
    if (!variant) return std::nullopt;
    ref.variant = *variant;
  }
  return ref;
}

std::string text_sibling_id(std::string_view frame_id, int index) {
  return std::string(frame_id) + "#t" + std::to_string(index);
}

std::string audio_sibling_id(std::string_view frame_id, int index, std::optional<int> variant) {
  std::string id = std::string(frame_id) + "#a" + std::to_string(index);
  if (variant) id += "." + std::to_string(*variant);
  return id;
}

EmbeddingStore EmbeddingStore::build(Manifest manifest, EmbeddingArchive archive,
                                     const IngestOptions& options) {
  if (options.expected_dim && *options.expected_dim != archive.dim) {
    throw Error(ErrorCode::kDimMismatch, "archive dim " + std::to_string(archive.dim) +
                                             " differs from expected dim " +
                                             std::to_string(*options.expected_dim));
  }
  EmbeddingStore store;
  store.dim_ = archive.dim;
  store.entries_.reserve(archive.entries.size());
  for (auto& e : archive.entries) {
    if (e.dim() != archive.dim) {
      throw Error(ErrorCode::kDimMismatch, "embedding '" + e.id() + "' has dim " +
                                               std::to_string(e.dim()) + ", expected " +
                                               std::to_string(archive.dim));
    }
    const auto* record = manifest.find(e.id());
    if (!record) {
      throw Error(ErrorCode::kOrphanEmbedding,
                  "embedding '" + e.id() + "' has no manifest record");
    }
    if (record->modality != e.modality()) {
      throw Error(ErrorCode::kWrongModality,
                  "embedding '" + e.id() + "' is " + std::string(modality_name(e.modality())) +
                      " but the manifest says " + std::string(modality_name(record->modality)));
    }
    if (store.index_.contains(e.id())) {
      throw Error(ErrorCode::kDuplicateId, "embedding id '" + e.id() + "' appears more than once");
    }
    const std::size_t slot = store.entries_.size();
    store.index_.emplace(e.id(), slot);
    store.partitions_[static_cast<int>(e.modality())].push_back(slot);
    store.scene_index_[record->scene].push_back(slot);
    store.entries_.push_back(options.normalize ? normalize(e) : std::move(e));
  }
  for (const auto& scene : manifest.scenes()) store.scene_index_.try_emplace(scene);
  store.manifest_ = std::move(manifest);
  return store;
}

const Embedding* EmbeddingStore::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const Embedding& EmbeddingStore::at(std::string_view id) const {
  if (const auto* e = find(id)) return *e;
  throw Error(ErrorCode::kUnknownId, "no embedding with id '" + std::string(id) + "'");
}

const AssetRecord& EmbeddingStore::record(std::string_view id) const { return manifest_.at(id); }

const std::string& EmbeddingStore::scene_of(std::string_view id) const { return record(id).scene; }

EmbeddingRefs EmbeddingStore::by_modality(Modality m) const {
  EmbeddingRefs out;
  const auto& part = partitions_[static_cast<int>(m)];
  out.reserve(part.size());
  for (const auto slot : part) out.push_back(&entries_[slot]);
  return out;
}

EmbeddingRefs EmbeddingStore::by_scene(std::string_view scene, Modality m) const {
  const auto it = scene_index_.find(scene);
  if (it == scene_index_.end()) {
    throw Error(ErrorCode::kUnknownScene, "no scene '" + std::string(scene) + "'");
  }
  EmbeddingRefs out;
  for (const auto slot : it->second) {
    if (entries_[slot].modality() == m) out.push_back(&entries_[slot]);
  }
  return out;
}

std::size_t EmbeddingStore::count(Modality m) const {
  return partitions_[static_cast<int>(m)].size();
}

EmbeddingArchive EmbeddingStore::to_archive() const { return {dim_, entries_}; }

EmbeddingStore ingest(const std::filesystem::path& manifest_path,
                      const std::filesystem::path& archive_path, const IngestOptions& options) {
  return EmbeddingStore::build(read_manifest(manifest_path), read_archive(archive_path), options);
}

}  // namespace sonify
