#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sonify/eval.hpp"
#include "sonify/store.hpp"

namespace sonify {

struct SessionItem {
  std::string frame_id;
  std::string audio_id;
  std::string frame_uri;
  std::string audio_uri;
  std::string reference_audio_uri;

  friend bool operator==(const SessionItem&, const SessionItem&) = default;
};

/// A rater's fixed, seeded-shuffled sequence of (frame, audio) items.
/// Items are rated strictly in order; `cursor` counts submitted ratings.
struct Session {
  std::string session_id;
  std::string rater_id;
  std::vector<SessionItem> items;
  std::size_t cursor = 0;
  Timestamp created{};
  std::uint64_t seed = 0;

  bool done() const noexcept { return cursor >= items.size(); }
};

struct PairRequest {
  std::string frame_id;
  std::string audio_id;
  std::optional<std::string> reference_audio_id;
};

struct RatingServiceConfig {
  std::filesystem::path data_dir;
  Manifest manifest;
  // Named pair lists that clients may request instead of sending pairs.
  std::map<std::string, std::vector<PairRequest>> pair_sets;
  // scene -> reference audio id. Scenes without an entry use their first
  // audio asset in manifest order.
  std::map<std::string, std::string> reference_audio;
  // Relative manifest uris are exposed under this prefix.
  std::string media_prefix = "/media/";
  std::function<Timestamp()> clock;
};

/// Runs MOS rating sessions. State lives in `data_dir`:
///   ratings.csv       append-only ratings in the harness format
///   sessions.journal  one JSON event per line (session created, item rated)
/// Each rating is journaled and appended to ratings.csv, both flushed to disk,
/// before submit_rating returns. Construction replays the journal.
class RatingService {
 public:
  explicit RatingService(RatingServiceConfig config);
  ~RatingService();

  RatingService(const RatingService&) = delete;
  RatingService& operator=(const RatingService&) = delete;

  Session create_session(const std::string& rater_id, const std::vector<PairRequest>& pairs,
                         std::uint64_t seed);
  Session create_session_from_set(const std::string& rater_id, const std::string& pair_set,
                                  std::uint64_t seed);

  Session session(const std::string& session_id) const;
  // Empty once every item has been rated.
  std::optional<SessionItem> next_item(const std::string& session_id) const;

  RatingRecord submit_rating(const std::string& session_id, const std::string& frame_id,
                             const std::string& audio_id, int mos);

  std::vector<RatingRecord> export_ratings(const std::optional<std::string>& rater = {}) const;
  std::string export_csv(const std::optional<std::string>& rater = {}) const;

  const Manifest& manifest() const noexcept { return config_.manifest; }

  std::filesystem::path ratings_path() const;
  std::filesystem::path journal_path() const;

 private:
  struct Slot {
    mutable std::mutex mutex;
    Session session;
  };
  class AppendFile;

  Slot& slot(const std::string& session_id) const;
  SessionItem resolve_item(const PairRequest& pair) const;
  std::string media_uri(const std::string& uri) const;
  std::string new_session_id();
  void replay();

  RatingServiceConfig config_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Slot>, std::less<>> sessions_;

  mutable std::mutex append_mutex_;
  std::unique_ptr<AppendFile> journal_;
  std::unique_ptr<AppendFile> ratings_file_;
  std::vector<RatingRecord> ratings_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

}  // namespace sonify
