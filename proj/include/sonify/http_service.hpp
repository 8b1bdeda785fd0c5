#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "sonify/rating_service.hpp"

namespace httplib {
class Server;
}

namespace sonify {

/// HTTP front end for RatingService.
///
///   POST /sessions               {"rater_id", "pairs": [...] | "pair_set", "seed"}
///   GET  /sessions/{id}/next     next item, or {"done": true}
///   POST /sessions/{id}/ratings  {"frame_id", "audio_id", "mos"}
///   GET  /ratings/export?rater=  ratings CSV
///   GET  /media/...              files under the media root
///
/// Errors are returned as {"error": {"code", "message"}}.
class RatingHttpServer {
 public:
  RatingHttpServer(RatingService& service, std::optional<std::filesystem::path> media_root);
  ~RatingHttpServer();

  RatingHttpServer(const RatingHttpServer&) = delete;
  RatingHttpServer& operator=(const RatingHttpServer&) = delete;

  // Binds to an OS-assigned port and returns it; -1 on failure.
  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  // Blocks until stop() is called.
  bool listen_after_bind();
  void stop();
  bool is_running() const;

 private:
  void install_routes();

  RatingService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace sonify
