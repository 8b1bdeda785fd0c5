#include "sonify/cli.hpp"

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sonify/error.hpp"
#include "sonify/eval.hpp"
#include "sonify/http_service.hpp"
#include "sonify/rating_service.hpp"
#include "sonify/report.hpp"
#include "sonify/retrieval.hpp"
#include "sonify/store.hpp"
#include "sonify/synth.hpp"

namespace sonify::cli {
namespace fs = std::filesystem;
using report::Json;

namespace {

struct Common {
  std::string manifest;
  std::string archive;
  std::string ratings;
  std::string out;
  std::size_t k = kDefaultTopK;
  double theta = 0.5;
  std::string distance = "cosine";
  std::uint64_t seed = 0;
  bool no_normalize = false;
  std::size_t bins = 20;
  bool no_timestamp = false;
  std::vector<std::string> frames;
};

[[noreturn]] void usage_error(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

void require(const std::string& value, const char* flag, const char* sub) {
  if (value.empty()) usage_error(std::string(sub) + " requires " + flag);
}

EmbeddingStore load_store(const Common& c, const char* sub) {
  require(c.manifest, "--manifest", sub);
  require(c.archive, "--archive", sub);
  return ingest(c.manifest, c.archive, IngestOptions{.normalize = !c.no_normalize, .expected_dim = {}});
}

SlerpParams slerp_params(const Common& c) {
  SlerpParams p{c.theta, distance_kind_from_name(c.distance)};
  validate(p);
  return p;
}

void emit(const Common& c, const Json& doc) {
  if (!c.out.empty()) report::write_json(c.out, doc);
}

// Image embeddings to process: --frames if given, else every image in order.
EmbeddingRefs select_frames(const EmbeddingStore& store, const std::vector<std::string>& ids) {
  if (ids.empty()) return store.by_modality(Modality::kImage);
  EmbeddingRefs out;
  for (const auto& id : ids) {
    const auto& e = store.at(id);
    if (e.modality() != Modality::kImage) {
      throw Error(ErrorCode::kWrongModality, "'" + id + "' is not an image embedding");
    }
    out.push_back(&e);
  }
  return out;
}

std::vector<FrameAudioPair> read_pair_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open pair list " + path);
  std::vector<FrameAudioPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "frame_id,audio_id") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected 'frame_id,audio_id'");
    }
    pairs.push_back({line.substr(0, comma), line.substr(comma + 1)});
  }
  return pairs;
}

MetricTable read_metric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open metric file " + path);
  MetricTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line == "frame_id,audio_id,value")) continue;
    std::stringstream ss(line);
    std::string frame, audio, value;
    std::getline(ss, frame, ',');
    std::getline(ss, audio, ',');
    std::getline(ss, value);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (frame.empty() || audio.empty() || used == 0 || used != value.size()) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected 'frame_id,audio_id,value'");
    }
    table[{frame, audio}] = v;
  }
  return table;
}

AdapterSpec adapter_from(AdapterKind kind, const std::string& command, int variants, double timeout) {
  AdapterSpec spec{kind, command, variants, timeout};
  validate(spec);
  return spec;
}

std::vector<InconsistencyReport> all_inconsistency_reports(const EmbeddingStore& store,
                                                           const EmbeddingRefs& frames) {
  const auto siblings = sibling_pairs(store);
  std::vector<InconsistencyReport> reports;
  for (const auto* frame : frames) {
    const auto it = siblings.find(frame->id());
    if (it == siblings.end()) continue;
    for (const auto& p : it->second) reports.push_back(inconsistency(*frame, *p.text, *p.audio));
  }
  if (reports.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no frame has caption/audio siblings");
  }
  return reports;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

RatingHttpServer* g_server = nullptr;

void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-guided sonification in multimodal embedding space"};
  app.set_config("--config", "", "Optional TOML/INI config; flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  auto add_store_flags = [&](CLI::App* sub) {
    sub->add_option("--manifest", c.manifest, "Asset manifest (JSON lines)");
    sub->add_option("--archive", c.archive, "Embedding archive (EMB1)");
    sub->add_flag("--no-normalize", c.no_normalize, "Keep raw vector magnitudes");
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Report output path (JSON)");
    sub->add_flag("--no-timestamp", c.no_timestamp, "Omit generated_at for reproducible reports");
  };
  auto add_slerp = [&](CLI::App* sub) {
    sub->add_option("--theta", c.theta, "SLERP weight in [0,1]")->capture_default_str();
    sub->add_option("--distance", c.distance, "cosine|euclidean")
        ->check(CLI::IsMember({"cosine", "euclidean"}))
        ->capture_default_str();
  };
  auto add_k = [&](CLI::App* sub) {
    sub->add_option("--k", c.k, "Candidates kept per query")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto add_frames = [&](CLI::App* sub) {
    sub->add_option("--frames", c.frames, "Frame ids (default: all image assets)")->delimiter(',');
  };

  // ingest
  std::optional<std::uint32_t> expected_dim;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and summarize a manifest + archive");
  add_store_flags(ingest_cmd);
  add_out(ingest_cmd);
  ingest_cmd->add_option("--dim", expected_dim, "Expected embedding dimension");

  // synth
  SyntheticSpaceConfig synth_cfg;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic manifest + archive");
  synth_cmd->add_option("--manifest", c.manifest, "Manifest output path")->required();
  synth_cmd->add_option("--archive", c.archive, "Archive output path")->required();
  synth_cmd->add_option("--seed", c.seed)->capture_default_str();
  synth_cmd->add_option("--dim", synth_cfg.dim)->capture_default_str();
  synth_cmd->add_option("--scenes", synth_cfg.n_scenes)->capture_default_str();
  synth_cmd->add_option("--frames-per-scene", synth_cfg.frames_per_scene)->capture_default_str();
  synth_cmd->add_option("--texts-per-frame", synth_cfg.texts_per_frame)->capture_default_str();
  synth_cmd->add_option("--audios-per-frame", synth_cfg.audios_per_frame)->capture_default_str();
  synth_cmd->add_option("--gap", synth_cfg.gap_angle, "Modality gap angle (radians)")->capture_default_str();
  synth_cmd->add_option("--spread", synth_cfg.intra_scene_spread, "Intra-scene spread (radians)")
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth_cfg.noise, "Sibling noise (radians)")->capture_default_str();
  add_out(synth_cmd);

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "Library retrieval: rank all audios for each frame");
  add_store_flags(rank_cmd);
  add_k(rank_cmd);
  add_frames(rank_cmd);
  add_out(rank_cmd);

  // sonorize2
  std::string captioner_cmd, generator_cmd, encoder_cmd, work_dir;
  int caption_variants = 20, audio_variants = 1, parallel = 4;
  double timeout = 600.0;
  auto* sonorize_cmd = app.add_subcommand("sonorize2", "Caption -> generate -> encode -> rank by |inc|");
  sonorize_cmd->add_option("--manifest", c.manifest, "Manifest holding the frames")->required();
  sonorize_cmd->add_option("--captioner", captioner_cmd, "Captioner command template")->required();
  sonorize_cmd->add_option("--generator", generator_cmd, "Audio generator command template")->required();
  sonorize_cmd->add_option("--encoder", encoder_cmd, "Encoder command template")->required();
  sonorize_cmd->add_option("--work-dir", work_dir, "Directory for adapter files")->required();
  sonorize_cmd->add_option("--variants", caption_variants, "Captions per frame")->capture_default_str();
  sonorize_cmd->add_option("--audio-variants", audio_variants, "Audios per caption")->capture_default_str();
  sonorize_cmd->add_option("--timeout", timeout, "Per-invocation timeout (seconds)")->capture_default_str();
  sonorize_cmd->add_option("--parallel", parallel, "Concurrent generator calls")->capture_default_str();
  add_k(sonorize_cmd);
  add_frames(sonorize_cmd);
  add_out(sonorize_cmd);

  // inc
  auto* inc_cmd = app.add_subcommand("inc", "Inconsistency reports for caption/audio siblings");
  add_store_flags(inc_cmd);
  add_k(inc_cmd);
  add_frames(inc_cmd);
  add_out(inc_cmd);

  // slerp-eval
  std::string references_path, targets_path;
  auto* slerp_cmd = app.add_subcommand("slerp-eval", "SLERP distance statistics by relation");
  add_store_flags(slerp_cmd);
  add_slerp(slerp_cmd);
  slerp_cmd->add_option("--references", references_path, "CSV of reference frame_id,audio_id")->required();
  slerp_cmd->add_option("--targets", targets_path,
                        "CSV of target frame_id,audio_id (default: every frame x audio)");
  add_out(slerp_cmd);

  // hist
  std::vector<std::string> components;
  auto* hist_cmd = app.add_subcommand("hist", "Histograms of inconsistency components");
  add_store_flags(hist_cmd);
  hist_cmd->add_option("--bins", c.bins)->check(CLI::PositiveNumber)->capture_default_str();
  hist_cmd->add_option("--component", components, "d_image_text|d_image_audio|inc (default: all)")
      ->check(CLI::IsMember({"d_image_text", "d_image_audio", "inc"}))
      ->delimiter(',');
  add_frames(hist_cmd);
  add_out(hist_cmd);

  // mos
  std::string group_by = "scene";
  auto* mos_cmd = app.add_subcommand("mos", "Aggregate MOS ratings");
  mos_cmd->add_option("--ratings", c.ratings, "Ratings CSV")->required();
  mos_cmd->add_option("--manifest", c.manifest, "Manifest (needed for --group-by scene)");
  mos_cmd->add_option("--group-by", group_by)->check(CLI::IsMember({"scene", "pair"}))->capture_default_str();
  add_out(mos_cmd);

  // correlate
  std::string metrics_path, metric_name, pooling = "average";
  auto* corr_cmd = app.add_subcommand("correlate", "Pearson correlation of a metric with MOS");
  corr_cmd->add_option("--ratings", c.ratings, "Ratings CSV")->required();
  corr_cmd->add_option("--metrics", metrics_path,
                       "Rank report (.json) or CSV frame_id,audio_id,value; default: dis_cos from the store");
  add_store_flags(corr_cmd);
  corr_cmd->add_option("--metric-name", metric_name, "Name recorded in the report");
  corr_cmd->add_option("--pooling", pooling, "average: mean MOS per pair; independent: every rating")
      ->check(CLI::IsMember({"average", "independent"}))
      ->capture_default_str();
  add_out(corr_cmd);

  // serve
  std::string data_dir, media_root, host = "127.0.0.1", pair_sets_path;
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the MOS rating service");
  serve_cmd->add_option("--manifest", c.manifest, "Manifest of rateable assets")->required();
  serve_cmd->add_option("--data-dir", data_dir, "Where ratings and the session journal live")->required();
  serve_cmd->add_option("--media-root", media_root, "Directory served under /media");
  serve_cmd->add_option("--pair-sets", pair_sets_path, "JSON object: name -> [{frame_id, audio_id}]");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();

  std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const bool stamp = !c.no_timestamp;
  try {
    if (*ingest_cmd) {
      require(c.manifest, "--manifest", "ingest");
      require(c.archive, "--archive", "ingest");
      const auto store = ingest(c.manifest, c.archive,
                                IngestOptions{.normalize = !c.no_normalize, .expected_dim = expected_dim});
      auto doc = report::envelope("ingest", stamp);
      doc["dim"] = store.dim();
      doc["normalized"] = !c.no_normalize;
      doc["entries"] = store.size();
      Json counts;
      for (const auto m : kAllModalities) counts[std::string(modality_name(m))] = store.count(m);
      doc["counts"] = counts;
      doc["scenes"] = store.manifest().scenes();
      emit(c, doc);
      out << "store: " << store.size() << " embeddings, dim " << store.dim() << " (image "
          << store.count(Modality::kImage) << ", text " << store.count(Modality::kText) << ", audio "
          << store.count(Modality::kAudio) << "), " << store.manifest().scenes().size() << " scenes\n";
    } else if (*synth_cmd) {
      synth_cfg.seed = c.seed;
      const auto space = generate(synth_cfg);
      write_manifest(fs::path(c.manifest), space.manifest);
      write_archive(fs::path(c.archive), space.archive);
      auto doc = report::envelope("synth", stamp);
      doc["config"] = Json{{"dim", synth_cfg.dim},
                           {"n_scenes", synth_cfg.n_scenes},
                           {"frames_per_scene", synth_cfg.frames_per_scene},
                           {"texts_per_frame", synth_cfg.texts_per_frame},
                           {"audios_per_frame", synth_cfg.audios_per_frame},
                           {"gap_angle", synth_cfg.gap_angle},
                           {"intra_scene_spread", synth_cfg.intra_scene_spread},
                           {"noise", synth_cfg.noise},
                           {"seed", synth_cfg.seed}};
      doc["assets"] = space.manifest.size();
      emit(c, doc);
      out << "synth: wrote " << space.manifest.size() << " assets (dim " << synth_cfg.dim << ") to "
          << c.manifest << " and " << c.archive << "\n";
    } else if (*rank_cmd) {
      const auto store = load_store(c, "rank");
      auto doc = report::envelope("rank", stamp);
      doc["params"] = Json{{"k", c.k}, {"metric", "dis_cos"}};
      Json results = Json::array();
      for (const auto* frame : select_frames(store, c.frames)) {
        const auto plan = sonorize_scheme1(*frame, store, c.k);
        results.push_back(report::to_json(plan));
        out << plan.frame_id << " -> " << plan.chosen_audio_id << " ("
            << fmt(plan.candidates.entries.front().score) << ")\n";
      }
      doc["results"] = std::move(results);
      emit(c, doc);
    } else if (*sonorize_cmd) {
      const auto manifest = read_manifest(c.manifest);
      const auto captioner = adapter_from(AdapterKind::kCaptioner, captioner_cmd, caption_variants, timeout);
      const auto generator = adapter_from(AdapterKind::kAudioGenerator, generator_cmd, audio_variants, timeout);
      const auto encoder = adapter_from(AdapterKind::kEncoder, encoder_cmd, 1, timeout);
      std::vector<const AssetRecord*> frames;
      if (c.frames.empty()) {
        for (const auto& r : manifest.records()) {
          if (r.modality == Modality::kImage) frames.push_back(&r);
        }
      } else {
        for (const auto& id : c.frames) frames.push_back(&manifest.at(id));
      }
      Scheme2Options options;
      options.work_dir = work_dir;
      options.k = c.k;
      options.max_parallel = parallel;
      auto doc = report::envelope("sonorize2", stamp);
      doc["params"] = Json{{"k", c.k}, {"caption_variants", caption_variants},
                           {"audio_variants", audio_variants}, {"metric", "abs_inconsistency"}};
      Json results = Json::array();
      for (const auto* frame : frames) {
        const auto plan = sonorize_scheme2(*frame, captioner, generator, encoder, options);
        results.push_back(report::to_json(plan));
        out << plan.frame_id << " -> " << plan.chosen_audio_id << " (|inc| "
            << fmt(plan.candidates.entries.front().score) << ")\n";
      }
      doc["results"] = std::move(results);
      emit(c, doc);
    } else if (*inc_cmd) {
      const auto store = load_store(c, "inc");
      const auto siblings = sibling_pairs(store);
      auto doc = report::envelope("inc", stamp);
      doc["params"] = Json{{"k", c.k}, {"metric", "abs_inconsistency"}};
      Json results = Json::array();
      for (const auto* frame : select_frames(store, c.frames)) {
        const auto it = siblings.find(frame->id());
        if (it == siblings.end()) continue;
        const auto ranked = rank_by_inconsistency(*frame, it->second, c.k);
        Json reports = Json::array();
        for (const auto& r : ranked.reports) reports.push_back(report::to_json(r));
        results.push_back(Json{{"frame_id", frame->id()},
                               {"ranking", report::to_json(ranked.ranking)},
                               {"reports", std::move(reports)}});
        out << frame->id() << ": best " << ranked.ranking.entries.front().candidate_id << " |inc| "
            << fmt(ranked.ranking.entries.front().score) << "\n";
      }
      if (results.empty()) throw Error(ErrorCode::kEmptyInput, "no frame has caption/audio siblings");
      doc["results"] = std::move(results);
      emit(c, doc);
    } else if (*slerp_cmd) {
      const auto p = slerp_params(c);
      const auto store = load_store(c, "slerp-eval");
      const auto references = read_pair_list(references_path);
      std::vector<FrameAudioPair> targets;
      if (!targets_path.empty()) {
        targets = read_pair_list(targets_path);
      } else {
        for (const auto* f : store.by_modality(Modality::kImage)) {
          for (const auto* a : store.by_modality(Modality::kAudio)) targets.push_back({f->id(), a->id()});
        }
      }
      const auto cells = pair_stats(store, references, targets, p);
      auto doc = report::envelope("slerp-eval", stamp);
      doc["params"] = report::to_json(p);
      Json rows = Json::array();
      out << "audio      image      mean      std       n\n";
      for (const auto& s : cells) {
        rows.push_back(report::to_json(s));
        out << std::left << std::setw(11) << relation_name(s.audio_relation) << std::setw(11)
            << relation_name(s.image_relation) << std::setw(10) << (s.mean ? fmt(*s.mean) : "-")
            << std::setw(10) << (s.stddev ? fmt(*s.stddev) : "-") << s.n << "\n";
      }
      doc["cells"] = std::move(rows);
      emit(c, doc);
    } else if (*hist_cmd) {
      const auto store = load_store(c, "hist");
      const auto reports = all_inconsistency_reports(store, select_frames(store, c.frames));
      if (components.empty()) components = {"d_image_text", "d_image_audio", "inc"};
      auto doc = report::envelope("hist", stamp);
      doc["params"] = Json{{"bins", c.bins}};
      Json hists;
      for (const auto& name : components) {
        const auto h = inconsistency_histogram(reports, component_from_name(name), c.bins);
        hists[name] = report::to_json(h);
        out << name << ": " << h.total << " values in " << h.counts.size() << " bins\n";
      }
      doc["histograms"] = std::move(hists);
      emit(c, doc);
    } else if (*mos_cmd) {
      const auto g = group_by_from_name(group_by);
      std::optional<Manifest> manifest;
      if (g == GroupBy::kScene) {
        require(c.manifest, "--manifest", "mos --group-by scene");
        manifest = read_manifest(c.manifest);
      }
      const auto ratings = read_ratings(c.ratings);
      const auto groups = mos_aggregate(ratings, g, manifest ? &*manifest : nullptr);
      auto doc = report::envelope("mos", stamp);
      doc["params"] = Json{{"group_by", group_by}};
      Json rows = Json::array();
      for (const auto& s : groups) {
        rows.push_back(report::to_json(s));
        out << s.group << ": mean " << fmt(s.mean, 3) << " std " << fmt(s.stddev, 3) << " n " << s.n << "\n";
      }
      doc["groups"] = std::move(rows);
      emit(c, doc);
    } else if (*corr_cmd) {
      const auto ratings = read_ratings(c.ratings);
      MetricTable metrics;
      std::string name = metric_name;
      if (!metrics_path.empty()) {
        if (fs::path(metrics_path).extension() == ".json") {
          const auto source = report::read_json(metrics_path);
          metrics = report::metrics_from_rank_report(source);
          if (name.empty()) {
            name = source.contains("params") ? source["params"].value("metric", "metric") : "metric";
          }
        } else {
          metrics = read_metric_csv(metrics_path);
        }
      } else {
        const auto store = load_store(c, "correlate (without --metrics)");
        for (const auto& r : ratings) {
          metrics[{r.frame_id, r.audio_id}] = dis_cos(store.at(r.frame_id), store.at(r.audio_id));
        }
        if (name.empty()) name = "dis_cos";
      }
      if (name.empty()) name = "metric";
      const auto mode = pooling == "average" ? RaterPooling::kAveragePerPair : RaterPooling::kIndependent;
      const auto result = correlate(ratings, metrics, name, mode);
      auto doc = report::envelope("correlate", stamp);
      doc["params"] = Json{{"pooling", pooling}};
      doc["correlation"] = report::to_json(result);
      emit(c, doc);
      out << "pearson r(" << result.metric_name << ", mos) = " << fmt(result.r) << " over " << result.n
          << " points\n";
    } else if (*serve_cmd) {
      RatingServiceConfig config;
      config.data_dir = data_dir;
      config.manifest = read_manifest(c.manifest);
      if (!pair_sets_path.empty()) {
        const auto sets = report::read_json(pair_sets_path);
        for (const auto& [set_name, pairs] : sets.items()) {
          auto& list = config.pair_sets[set_name];
          for (const auto& p : pairs) {
            list.push_back({p.at("frame_id").get<std::string>(), p.at("audio_id").get<std::string>(),
                            p.contains("reference_audio_id")
                                ? std::optional<std::string>(p["reference_audio_id"].get<std::string>())
                                : std::nullopt});
          }
        }
      }
      RatingService service(std::move(config));
      std::optional<fs::path> media;
      if (!media_root.empty()) media = media_root;
      RatingHttpServer server(service, media);
      if (!server.bind(host, port)) {
        throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
      }
      g_server = &server;
      std::signal(SIGINT, handle_stop_signal);
      std::signal(SIGTERM, handle_stop_signal);
      out << "rating service listening on http://" << host << ":" << port << "\n" << std::flush;
      server.listen_after_bind();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace sonify::cli
