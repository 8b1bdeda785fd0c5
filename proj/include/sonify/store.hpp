#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sonify/embedding.hpp"

namespace sonify {

struct AssetRecord {
  std::string id;
  Modality modality = Modality::kImage;
  std::string scene;
  std::string uri;
  std::optional<std::string> caption;

  friend bool operator==(const AssetRecord&, const AssetRecord&) = default;
};

/// Ordered, id-unique catalog of assets. Serialized as one JSON object per line.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<AssetRecord> records);

  void add(AssetRecord record);

  const std::vector<AssetRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  const AssetRecord* find(std::string_view id) const;
  const AssetRecord& at(std::string_view id) const;
  bool has_scene(std::string_view scene) const;
  // Scene labels in first-appearance order.
  std::vector<std::string> scenes() const;

 private:
  std::vector<AssetRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

Manifest parse_manifest(std::istream& in, const std::string& source_name);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// In-memory image of an EMB1 archive.
///
/// Layout (little-endian): "EMB1", u32 dim, u32 count, then per record
/// u16 id length, id bytes, u8 modality code, dim x f32.
struct EmbeddingArchive {
  std::uint32_t dim = 0;
  std::vector<Embedding> entries;
};

inline constexpr char kArchiveMagic[4] = {'E', 'M', 'B', '1'};

EmbeddingArchive parse_archive(std::istream& in, const std::string& source_name);
EmbeddingArchive read_archive(const std::filesystem::path& path);
void write_archive(std::ostream& out, const EmbeddingArchive& archive);
void write_archive(const std::filesystem::path& path, const EmbeddingArchive& archive);

// Sibling naming: captions and audios derived from a frame are named
// "<frame>#t<i>" and "<frame>#a<i>" (or "<frame>#a<i>.<j>" for the j-th audio
// generated from caption i). An audio pairs with the caption of the same i.
struct SiblingRef {
  std::string parent;
  Modality modality = Modality::kText;
  int index = 0;
  std::optional<int> variant;
};

std::optional<SiblingRef> parse_sibling_id(std::string_view id);
std::string text_sibling_id(std::string_view frame_id, int index);
std::string audio_sibling_id(std::string_view frame_id, int index,
                             std::optional<int> variant = std::nullopt);

struct IngestOptions {
  bool normalize = true;
  std::optional<std::uint32_t> expected_dim;
};

using EmbeddingRefs = std::vector<const Embedding*>;

/// Immutable, dimension-consistent collection of embeddings joined to their
/// manifest records. Iteration order is archive order.
class EmbeddingStore {
 public:
  static EmbeddingStore build(Manifest manifest, EmbeddingArchive archive,
                              const IngestOptions& options = {});

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const Manifest& manifest() const noexcept { return manifest_; }
  const std::vector<Embedding>& entries() const noexcept { return entries_; }

  const Embedding* find(std::string_view id) const;
  const Embedding& at(std::string_view id) const;
  const AssetRecord& record(std::string_view id) const;
  const std::string& scene_of(std::string_view id) const;

  EmbeddingRefs by_modality(Modality m) const;
  EmbeddingRefs by_scene(std::string_view scene, Modality m) const;
  std::size_t count(Modality m) const;

  EmbeddingArchive to_archive() const;

 private:
  EmbeddingStore() = default;

  std::uint32_t dim_ = 0;
  Manifest manifest_;
  std::vector<Embedding> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> partitions_[3];
  std::map<std::string, std::vector<std::size_t>, std::less<>> scene_index_;
};

EmbeddingStore ingest(const std::filesystem::path& manifest_path,
                      const std::filesystem::path& archive_path,
                      const IngestOptions& options = {});

}  // namespace sonify
