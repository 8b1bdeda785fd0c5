#include "sonify/rating_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sonify/error.hpp"
#include "sonify/random.hpp"

namespace sonify {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Timestamp system_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

Json item_to_json(const SessionItem& item) {
  return Json{{"frame_id", item.frame_id},
              {"audio_id", item.audio_id},
              {"frame_uri", item.frame_uri},
              {"audio_uri", item.audio_uri},
              {"reference_audio_uri", item.reference_audio_uri}};
}

SessionItem item_from_json(const Json& j) {
  return SessionItem{j.at("frame_id").get<std::string>(), j.at("audio_id").get<std::string>(),
                     j.at("frame_uri").get<std::string>(), j.at("audio_uri").get<std::string>(),
                     j.at("reference_audio_uri").get<std::string>()};
}

Json rating_to_json(const RatingRecord& r) {
  return Json{{"rater_id", r.rater_id},
              {"frame_id", r.frame_id},
              {"audio_id", r.audio_id},
              {"mos", r.mos},
              {"timestamp", format_timestamp(r.timestamp)}};
}

RatingRecord rating_from_json(const Json& j) {
  RatingRecord r;
  r.rater_id = j.at("rater_id").get<std::string>();
  r.frame_id = j.at("frame_id").get<std::string>();
  r.audio_id = j.at("audio_id").get<std::string>();
  r.mos = j.at("mos").get<int>();
  const auto ts = parse_timestamp(j.at("timestamp").get<std::string>());
  if (!ts) throw Error(ErrorCode::kParseError, "bad timestamp in journal");
  r.timestamp = *ts;
  return r;
}

// Drops a trailing partial line left by an interrupted append.
void trim_partial_tail(const fs::path& path) {
  if (!fs::exists(path)) return;
  std::string content;
  {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  if (content.empty() || content.back() == '\n') return;
  const auto keep = content.rfind('\n');
  fs::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
}

}  // namespace

class RatingService::AppendFile {
 public:
  explicit AppendFile(const fs::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw Error(ErrorCode::kIo, "cannot open " + path.string() + ": " + std::strerror(errno));
    }
  }
  ~AppendFile() {
    if (fd_ >= 0) ::close(fd_);
  }
  AppendFile(const AppendFile&) = delete;
  AppendFile& operator=(const AppendFile&) = delete;

  // Writes one complete record and syncs it to disk.
  void append(const std::string& data) {
    std::size_t done = 0;
    while (done < data.size()) {
      const auto n = ::write(fd_, data.data() + done, data.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kIo, "write to " + path_.string() + " failed: " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd_) != 0) {
      throw Error(ErrorCode::kIo, "fdatasync on " + path_.string() + " failed");
    }
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

RatingService::RatingService(RatingServiceConfig config) : config_(std::move(config)) {
  if (!config_.clock) config_.clock = system_now;
  fs::create_directories(config_.data_dir);
  id_salt_ = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}() ^
             static_cast<std::uint64_t>(
                 std::chrono::steady_clock::now().time_since_epoch().count());
  replay();
}

RatingService::~RatingService() = default;

fs::path RatingService::ratings_path() const { return config_.data_dir / "ratings.csv"; }
fs::path RatingService::journal_path() const { return config_.data_dir / "sessions.journal"; }

void RatingService::replay() {
  trim_partial_tail(journal_path());
  std::vector<RatingRecord> journaled;
  if (fs::exists(journal_path())) {
    std::ifstream in(journal_path(), std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto event = Json::parse(line);
        const auto type = event.at("event").get<std::string>();
        if (type == "create") {
          const auto& s = event.at("session");
          auto slot = std::make_unique<Slot>();
          slot->session.session_id = s.at("session_id").get<std::string>();
          slot->session.rater_id = s.at("rater_id").get<std::string>();
          slot->session.seed = s.at("seed").get<std::uint64_t>();
          const auto created = parse_timestamp(s.at("created").get<std::string>());
          if (!created) throw Error(ErrorCode::kParseError, "bad created timestamp");
          slot->session.created = *created;
          for (const auto& item : s.at("items")) slot->session.items.push_back(item_from_json(item));
          sessions_[slot->session.session_id] = std::move(slot);
        } else if (type == "rating") {
          const auto id = event.at("session_id").get<std::string>();
          const auto it = sessions_.find(id);
          if (it == sessions_.end()) throw Error(ErrorCode::kParseError, "rating for unknown session");
          it->second->session.cursor = event.at("cursor").get<std::size_t>() + 1;
          journaled.push_back(rating_from_json(event.at("rating")));
        } else {
          throw Error(ErrorCode::kParseError, "unknown event '" + type + "'");
        }
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParseError,
                    journal_path().string() + ":" + std::to_string(line_no) + ": " + e.what());
      } catch (const Error& e) {
        throw Error(ErrorCode::kParseError,
                    journal_path().string() + ":" + std::to_string(line_no) + ": " + e.detail());
      }
    }
  }

  // ratings.csv is written after the journal, so it holds a prefix of the
  // journaled ratings; restore any rows lost between the two appends.
  trim_partial_tail(ratings_path());
  std::vector<RatingRecord> on_disk;
  if (fs::exists(ratings_path()) && fs::file_size(ratings_path()) > 0) {
    on_disk = read_ratings(ratings_path());
  }
  ratings_file_ = std::make_unique<AppendFile>(ratings_path());
  journal_ = std::make_unique<AppendFile>(journal_path());
  if (fs::file_size(ratings_path()) == 0) ratings_file_->append(std::string(kRatingsHeader) + "\n");
  if (on_disk.size() > journaled.size()) {
    throw Error(ErrorCode::kParseError, ratings_path().string() +
                                            " holds more ratings than the session journal");
  }
  for (std::size_t i = on_disk.size(); i < journaled.size(); ++i) {
    ratings_file_->append(format_rating_row(journaled[i]) + "\n");
  }
  ratings_ = std::move(journaled);
}

std::string RatingService::media_uri(const std::string& uri) const {
  if (uri.find("://") != std::string::npos || uri.empty()) return uri;
  std::string rel = uri;
  while (!rel.empty() && rel.front() == '/') rel.erase(rel.begin());
  return config_.media_prefix + rel;
}

SessionItem RatingService::resolve_item(const PairRequest& pair) const {
  const auto& manifest = config_.manifest;
  const auto* frame = manifest.find(pair.frame_id);
  if (!frame || frame->modality != Modality::kImage) {
    throw Error(ErrorCode::kUnknownAsset, "no image asset '" + pair.frame_id + "'");
  }
  const auto* audio = manifest.find(pair.audio_id);
  if (!audio || audio->modality != Modality::kAudio) {
    throw Error(ErrorCode::kUnknownAsset, "no audio asset '" + pair.audio_id + "'");
  }

  const AssetRecord* reference = nullptr;
  if (pair.reference_audio_id) {
    reference = manifest.find(*pair.reference_audio_id);
    if (!reference || reference->modality != Modality::kAudio) {
      throw Error(ErrorCode::kUnknownAsset,
                  "no reference audio asset '" + *pair.reference_audio_id + "'");
    }
  } else if (const auto it = config_.reference_audio.find(frame->scene);
             it != config_.reference_audio.end()) {
    reference = manifest.find(it->second);
    if (!reference) {
      throw Error(ErrorCode::kUnknownAsset, "configured reference audio '" + it->second +
                                                "' is not in the manifest");
    }
  } else {
    for (const auto& r : manifest.records()) {
      if (r.modality == Modality::kAudio && r.scene == frame->scene) {
        reference = &r;
        break;
      }
    }
  }
  return SessionItem{frame->id, audio->id, media_uri(frame->uri), media_uri(audio->uri),
                     reference ? media_uri(reference->uri) : std::string()};
}

std::string RatingService::new_session_id() {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s-%016llx",
                static_cast<unsigned long long>(mix64(id_salt_ ^ mix64(++id_counter_))));
  return buf;
}

Session RatingService::create_session(const std::string& rater_id,
                                      const std::vector<PairRequest>& pairs, std::uint64_t seed) {
  if (rater_id.empty()) throw Error(ErrorCode::kInvalidArgument, "rater_id is empty");
  if (pairs.empty()) throw Error(ErrorCode::kEmptyPairList, "pair list is empty");
  auto slot = std::make_unique<Slot>();
  Session& s = slot->session;
  s.rater_id = rater_id;
  s.seed = seed;
  s.created = config_.clock();
  for (const auto& p : pairs) s.items.push_back(resolve_item(p));
  KeyedRng rng{seed, 0x5e55};
  keyed_shuffle(s.items, rng);

  std::unique_lock lock(sessions_mutex_);
  do {
    s.session_id = new_session_id();
  } while (sessions_.contains(s.session_id));

  Json items = Json::array();
  for (const auto& item : s.items) items.push_back(item_to_json(item));
  Json event{{"event", "create"},
             {"session",
              Json{{"session_id", s.session_id},
                   {"rater_id", s.rater_id},
                   {"seed", s.seed},
                   {"created", format_timestamp(s.created)},
                   {"items", std::move(items)}}}};
  {
    std::lock_guard append(append_mutex_);
    journal_->append(event.dump() + "\n");
  }
  Session snapshot = s;
  sessions_[s.session_id] = std::move(slot);
  return snapshot;
}

Session RatingService::create_session_from_set(const std::string& rater_id,
                                               const std::string& pair_set, std::uint64_t seed) {
  const auto it = config_.pair_sets.find(pair_set);
  if (it == config_.pair_sets.end()) {
    throw Error(ErrorCode::kEmptyPairList, "no pair set named '" + pair_set + "'");
  }
  return create_session(rater_id, it->second, seed);
}

RatingService::Slot& RatingService::slot(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kUnknownSession, "no session '" + session_id + "'");
  }
  return *it->second;
}

Session RatingService::session(const std::string& session_id) const {
  auto& s = slot(session_id);
  std::lock_guard lock(s.mutex);
  return s.session;
}

std::optional<SessionItem> RatingService::next_item(const std::string& session_id) const {
  auto& s = slot(session_id);
  std::lock_guard lock(s.mutex);
  if (s.session.done()) return std::nullopt;
  return s.session.items[s.session.cursor];
}

RatingRecord RatingService::submit_rating(const std::string& session_id,
                                          const std::string& frame_id, const std::string& audio_id,
                                          int mos) {
  auto& s = slot(session_id);
  std::lock_guard lock(s.mutex);
  if (mos < kMinMos || mos > kMaxMos) {
    throw Error(ErrorCode::kInvalidMos, "mos " + std::to_string(mos) + " outside 1..5");
  }
  auto& session = s.session;
  if (session.done()) {
    throw Error(ErrorCode::kOutOfOrder, "session '" + session_id + "' is complete");
  }
  const auto& current = session.items[session.cursor];
  if (current.frame_id != frame_id || current.audio_id != audio_id) {
    throw Error(ErrorCode::kOutOfOrder, "(" + frame_id + ", " + audio_id +
                                            ") is not the current item (" + current.frame_id +
                                            ", " + current.audio_id + ")");
  }
  RatingRecord record{session.rater_id, frame_id, audio_id, mos, config_.clock()};
  const Json event{{"event", "rating"},
                   {"session_id", session_id},
                   {"cursor", session.cursor},
                   {"rating", rating_to_json(record)}};
  {
    std::lock_guard append(append_mutex_);
    journal_->append(event.dump() + "\n");
    ratings_file_->append(format_rating_row(record) + "\n");
    ratings_.push_back(record);
  }
  ++session.cursor;
  return record;
}

std::vector<RatingRecord> RatingService::export_ratings(const std::optional<std::string>& rater) const {
  std::lock_guard lock(append_mutex_);
  if (!rater) return ratings_;
  std::vector<RatingRecord> out;
  for (const auto& r : ratings_) {
    if (r.rater_id == *rater) out.push_back(r);
  }
  return out;
}

std::string RatingService::export_csv(const std::optional<std::string>& rater) const {
  std::ostringstream out;
  write_ratings(out, export_ratings(rater));
  return out.str();
}

}  // namespace sonify
