#include "sonify/report.hpp"

#include <chrono>
#include <fstream>

#include "sonify/error.hpp"

namespace sonify::report {

Json envelope(std::string_view kind, bool with_timestamp) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = kind;
  if (with_timestamp) {
    doc["generated_at"] = format_timestamp(
        std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
  }
  return doc;
}

Json to_json(const RankedResult& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back(Json{{"candidate_id", e.candidate_id}, {"score", e.score}});
  }
  return Json{{"query_id", r.query_id}, {"metric", r.metric_name}, {"entries", std::move(entries)}};
}

Json to_json(const InconsistencyReport& r) {
  return Json{{"frame_id", r.frame_id},         {"text_id", r.text_id},
              {"audio_id", r.audio_id},         {"d_image_text", r.d_image_text},
              {"d_image_audio", r.d_image_audio}, {"inc", r.inc}};
}

Json to_json(const SonorizationPlan& plan) {
  Json doc;
  doc["frame_id"] = plan.frame_id;
  doc["scheme"] = scheme_name(plan.scheme);
  doc["chosen_audio_id"] = plan.chosen_audio_id;
  doc["candidates"] = to_json(plan.candidates);
  if (plan.scheme == Scheme::kGenerative) {
    Json captions = Json::array();
    for (const auto& c : plan.captions) {
      captions.push_back(
          Json{{"caption_index", c.caption_index}, {"text_id", c.text_id}, {"caption", c.caption}});
    }
    Json audios = Json::array();
    for (const auto& a : plan.audios) {
      audios.push_back(Json{{"caption_index", a.caption_index},
                            {"variant_index", a.variant_index},
                            {"audio_id", a.audio_id},
                            {"uri", a.uri}});
    }
    Json reports = Json::array();
    for (const auto& r : plan.reports) reports.push_back(to_json(r));
    doc["captions"] = std::move(captions);
    doc["audios"] = std::move(audios);
    doc["inconsistency"] = std::move(reports);
  }
  return doc;
}

Json to_json(const GroupStats& g) {
  return Json{{"group", g.group}, {"mean", g.mean}, {"std", g.stddev}, {"n", g.n}};
}

Json to_json(const Histogram& h) {
  return Json{{"bin_edges", h.bin_edges}, {"counts", h.counts}, {"total", h.total}};
}

Json to_json(const PairStats& s) {
  Json doc{{"audio_relation", relation_name(s.audio_relation)},
           {"image_relation", relation_name(s.image_relation)}};
  doc["mean"] = s.mean ? Json(*s.mean) : Json(nullptr);
  doc["std"] = s.stddev ? Json(*s.stddev) : Json(nullptr);
  doc["n"] = s.n;
  return doc;
}

Json to_json(const CorrelationReport& c) {
  return Json{{"metric", c.metric_name}, {"r", c.r}, {"n", c.n}};
}

Json to_json(const SlerpParams& p) {
  return Json{{"theta", p.theta}, {"distance", distance_kind_name(p.distance)}};
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write report " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing report " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

MetricTable metrics_from_rank_report(const Json& doc) {
  if (!doc.is_object() || doc.value("kind", "") != "rank" || !doc.contains("results")) {
    throw Error(ErrorCode::kParseError, "not a rank report");
  }
  MetricTable table;
  try {
    for (const auto& result : doc.at("results")) {
      const auto& ranking = result.at("candidates");
      const auto query = ranking.at("query_id").get<std::string>();
      for (const auto& e : ranking.at("entries")) {
        table[{query, e.at("candidate_id").get<std::string>()}] = e.at("score").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed rank report: ") + e.what());
  }
  return table;
}

}  // namespace sonify::report
