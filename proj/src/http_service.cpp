#include "sonify/http_service.hpp"

#include "httplib.h"
#include "json.hpp"
#include "sonify/error.hpp"

namespace sonify {
using Json = nlohmann::ordered_json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession: return 404;
    case ErrorCode::kOutOfOrder: return 409;
    case ErrorCode::kUnknownAsset: return 422;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, status_for(code),
            Json{{"error", Json{{"code", error_code_name(code)}, {"message", message}}}});
}

Json item_json(const SessionItem& item) {
  return Json{{"frame_id", item.frame_id},
              {"audio_id", item.audio_id},
              {"frame_uri", item.frame_uri},
              {"audio_uri", item.audio_uri},
              {"reference_audio_uri", item.reference_audio_uri}};
}

// Runs a handler, mapping exceptions onto the error body.
template <typename Fn>
void guarded(httplib::Response& res, Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e.code(), e.detail());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, ErrorCode::kParseError, e.what());
  } catch (const std::exception& e) {
    send_json(res, 500, Json{{"error", Json{{"code", "Internal"}, {"message", e.what()}}}});
  }
}

Json parse_body(const httplib::Request& req) {
  auto body = Json::parse(req.body);
  if (!body.is_object()) throw Error(ErrorCode::kParseError, "request body must be a JSON object");
  return body;
}

}  // namespace

RatingHttpServer::RatingHttpServer(RatingService& service,
                                   std::optional<std::filesystem::path> media_root)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
  if (media_root) server_->set_mount_point("/media", media_root->string());
}

RatingHttpServer::~RatingHttpServer() { stop(); }

void RatingHttpServer::install_routes() {
  server_->Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      const auto rater = body.at("rater_id").get<std::string>();
      const auto seed = body.value("seed", std::uint64_t{0});
      Session session;
      if (body.contains("pair_set")) {
        session = service_.create_session_from_set(rater, body.at("pair_set").get<std::string>(), seed);
      } else {
        std::vector<PairRequest> pairs;
        for (const auto& p : body.value("pairs", Json::array())) {
          PairRequest pair{p.at("frame_id").get<std::string>(), p.at("audio_id").get<std::string>(),
                           std::nullopt};
          if (p.contains("reference_audio_id")) {
            pair.reference_audio_id = p.at("reference_audio_id").get<std::string>();
          }
          pairs.push_back(std::move(pair));
        }
        session = service_.create_session(rater, pairs, seed);
      }
      send_json(res, 201,
                Json{{"session_id", session.session_id},
                     {"rater_id", session.rater_id},
                     {"total", session.items.size()}});
    });
  });

  server_->Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto session = service_.session(id);
      Json body{{"session_id", id}, {"done", session.done()}, {"cursor", session.cursor},
                {"total", session.items.size()}};
      if (!session.done()) body["item"] = item_json(session.items[session.cursor]);
      send_json(res, 200, body);
    });
  });

  server_->Post(R"(/sessions/([^/]+)/ratings)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto body = parse_body(req);
      const auto& mos = body.at("mos");
      if (!mos.is_number_integer()) throw Error(ErrorCode::kInvalidMos, "mos must be an integer 1..5");
      const auto record = service_.submit_rating(id, body.at("frame_id").get<std::string>(),
                                                 body.at("audio_id").get<std::string>(),
                                                 mos.get<int>());
      const auto session = service_.session(id);
      send_json(res, 200,
                Json{{"ack", true},
                     {"cursor", session.cursor},
                     {"total", session.items.size()},
                     {"timestamp", format_timestamp(record.timestamp)}});
    });
  });

  server_->Get("/ratings/export", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<std::string> rater;
      if (req.has_param("rater")) rater = req.get_param_value("rater");
      res.status = 200;
      res.set_content(service_.export_csv(rater), "text/csv");
    });
  });
}

int RatingHttpServer::bind_to_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool RatingHttpServer::bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool RatingHttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void RatingHttpServer::stop() {
  if (server_) server_->stop();
}

bool RatingHttpServer::is_running() const { return server_->is_running(); }

}  // namespace sonify
