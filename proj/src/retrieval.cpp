#include "sonify/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "sonify/error.hpp"

namespace sonify {
namespace fs = std::filesystem;
namespace {

std::string safe_dir_name(std::string_view id) {
  std::string out;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? std::string("frame") : out;
}

[[noreturn]] void protocol_error(AdapterKind kind, const std::string& what) {
  throw Error(ErrorCode::kAdapterProtocolError,
              std::string(adapter_kind_name(kind)) + ": " + what);
}

void expect_kind(const AdapterSpec& spec, AdapterKind kind) {
  if (spec.kind != kind) {
    throw Error(ErrorCode::kInvalidConfig, "expected a " + std::string(adapter_kind_name(kind)) +
                                               " adapter, got " +
                                               std::string(adapter_kind_name(spec.kind)));
  }
}

std::vector<std::string> read_captions(const fs::path& path, const AdapterSpec& spec) {
  std::ifstream in(path);
  if (!in) protocol_error(spec.kind, "no caption file written at " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() != static_cast<std::size_t>(spec.variants)) {
    protocol_error(spec.kind, "expected " + std::to_string(spec.variants) + " captions, got " +
                                  std::to_string(lines.size()));
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) {
      protocol_error(spec.kind, "caption " + std::to_string(i) + " is empty");
    }
  }
  return lines;
}

std::vector<fs::path> list_outputs(const fs::path& dir, const AdapterSpec& spec) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() != static_cast<std::size_t>(spec.variants)) {
    protocol_error(spec.kind, "expected " + std::to_string(spec.variants) + " files in " +
                                  dir.string() + ", found " + std::to_string(files.size()));
  }
  return files;
}

// Runs job(i) for i in [0, n) on up to `parallel` threads. If any job throws,
// the exception of the lowest index is rethrown so failures are reproducible.
template <typename Job>
void run_indexed(std::size_t n, int parallel, Job job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(parallel, 1)), 1, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string_view scheme_name(Scheme scheme) {
  return scheme == Scheme::kRetrieval ? "retrieval" : "generative";
}

SonorizationPlan sonorize_scheme1(const Embedding& frame, const EmbeddingStore& store,
                                  std::size_t k) {
  if (frame.modality() != Modality::kImage) {
    throw Error(ErrorCode::kWrongModality, "'" + frame.id() + "' is not an image embedding");
  }
  const auto audios = store.by_modality(Modality::kAudio);
  if (audios.empty()) throw Error(ErrorCode::kNoAudioAssets, "store holds no audio embeddings");

  SonorizationPlan plan;
  plan.frame_id = frame.id();
  plan.scheme = Scheme::kRetrieval;
  plan.candidates = rank_candidates(
      frame.id(), audios, [&](const Embedding& audio) { return dis_cos(frame, audio); }, k,
      "dis_cos");
  plan.chosen_audio_id = plan.candidates.entries.front().candidate_id;
  return plan;
}

SonorizationPlan sonorize_scheme2(const AssetRecord& frame_asset, const AdapterSpec& captioner,
                                  const AdapterSpec& generator, const AdapterSpec& encoder,
                                  const Scheme2Options& options) {
  expect_kind(captioner, AdapterKind::kCaptioner);
  expect_kind(generator, AdapterKind::kAudioGenerator);
  expect_kind(encoder, AdapterKind::kEncoder);
  validate(captioner);
  validate(generator);
  validate(encoder);
  if (frame_asset.modality != Modality::kImage) {
    throw Error(ErrorCode::kWrongModality, "'" + frame_asset.id + "' is not an image asset");
  }
  if (options.ranking == Scheme2Ranking::kSlerpDistance && !options.reference) {
    throw Error(ErrorCode::kInvalidConfig, "SLERP ranking needs a reference frame and audio");
  }

  const fs::path dir = options.work_dir / safe_dir_name(frame_asset.id);
  fs::create_directories(dir);

  // Captions.
  const auto captions_path = dir / "captions.txt";
  run_adapter(captioner, frame_asset.uri, captions_path, dir / "captioner.log");
  const auto captions = read_captions(captions_path, captioner);

  SonorizationPlan plan;
  plan.frame_id = frame_asset.id;
  plan.scheme = Scheme::kGenerative;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    plan.captions.push_back({static_cast<int>(i), text_sibling_id(frame_asset.id, static_cast<int>(i)),
                             captions[i]});
  }

  // Audio generation, one adapter call per caption.
  std::vector<std::vector<fs::path>> generated(captions.size());
  run_indexed(captions.size(), options.max_parallel, [&](std::size_t i) {
    const auto caption_file = dir / ("caption_" + std::to_string(i) + ".txt");
    {
      std::ofstream out(caption_file, std::ios::binary);
      out << captions[i] << '\n';
    }
    const auto out_dir = dir / ("audio_" + std::to_string(i));
    fs::remove_all(out_dir);
    fs::create_directories(out_dir);
    run_adapter(generator, caption_file, out_dir, dir / ("generator_" + std::to_string(i) + ".log"));
    generated[i] = list_outputs(out_dir, generator);
  });
  for (std::size_t i = 0; i < generated.size(); ++i) {
    for (std::size_t j = 0; j < generated[i].size(); ++j) {
      plan.audios.push_back({static_cast<int>(i), static_cast<int>(j),
                             audio_sibling_id(frame_asset.id, static_cast<int>(i), static_cast<int>(j)),
                             generated[i][j].string()});
    }
  }

  // Encoding of frame, captions and audios in one call.
  Manifest request;
  request.add(frame_asset);
  for (const auto& c : plan.captions) {
    request.add({c.text_id, Modality::kText, frame_asset.scene,
                 (dir / ("caption_" + std::to_string(c.caption_index) + ".txt")).string(), c.caption});
  }
  for (const auto& a : plan.audios) {
    request.add({a.audio_id, Modality::kAudio, frame_asset.scene, a.uri, std::nullopt});
  }
  const auto request_path = dir / "encode_request.jsonl";
  write_manifest(request_path, request);
  const auto archive_path = dir / "embeddings.emb";
  run_adapter(encoder, request_path, archive_path, dir / "encoder.log");

  EmbeddingArchive archive;
  try {
    archive = read_archive(archive_path);
  } catch (const Error& e) {
    protocol_error(encoder.kind, e.detail());
  }
  std::unordered_map<std::string, Embedding> encoded;
  for (auto& e : archive.entries) {
    const auto* asked = request.find(e.id());
    if (!asked) continue;
    if (asked->modality != e.modality()) {
      protocol_error(encoder.kind, "'" + e.id() + "' returned with modality " +
                                       std::string(modality_name(e.modality())));
    }
    try {
      encoded.insert_or_assign(e.id(), normalize(e));
    } catch (const Error& err) {
      protocol_error(encoder.kind, err.detail());
    }
  }
  auto lookup = [&](const std::string& id) -> const Embedding& {
    const auto it = encoded.find(id);
    if (it == encoded.end()) protocol_error(encoder.kind, "no embedding returned for '" + id + "'");
    return it->second;
  };

  const auto& frame = lookup(frame_asset.id);
  std::vector<TextAudioPair> pairs;
  for (const auto& a : plan.audios) {
    pairs.push_back({&lookup(plan.captions[static_cast<std::size_t>(a.caption_index)].text_id),
                     &lookup(a.audio_id)});
  }
  auto ranked = rank_by_inconsistency(frame, pairs, options.k);
  plan.reports = std::move(ranked.reports);
  if (options.ranking == Scheme2Ranking::kInconsistency) {
    plan.candidates = std::move(ranked.ranking);
  } else {
    const auto& ref = *options.reference;
    const auto target = slerp_audio_target(ref.audio, ref.frame, frame, ref.params);
    std::vector<const Embedding*> audios;
    for (const auto& p : pairs) audios.push_back(p.audio);
    plan.candidates = rank_candidates(
        frame.id(), audios,
        [&](const Embedding& audio) { return slerp_distance(audio, target, ref.params); },
        options.k, "slerp_distance_" + std::string(distance_kind_name(ref.params.distance)));
  }
  plan.chosen_audio_id = plan.candidates.entries.front().candidate_id;
  return plan;
}

}  // namespace sonify

namespace sonify {

std::map<std::string, std::vector<TextAudioPair>, std::less<>> sibling_pairs(
    const EmbeddingStore& store) {
  std::map<std::pair<std::string, int>, const Embedding*> texts;
  for (const auto* t : store.by_modality(Modality::kText)) {
    const auto ref = parse_sibling_id(t->id());
    if (ref && ref->modality == Modality::kText) texts[{ref->parent, ref->index}] = t;
  }
  std::map<std::string, std::vector<TextAudioPair>, std::less<>> out;
  for (const auto* a : store.by_modality(Modality::kAudio)) {
    const auto ref = parse_sibling_id(a->id());
    if (!ref || ref->modality != Modality::kAudio) continue;
    const auto frame = store.find(ref->parent);
    if (!frame || frame->modality() != Modality::kImage) continue;
    const auto it = texts.find({ref->parent, ref->index});
    if (it == texts.end()) continue;
    out[ref->parent].push_back({it->second, a});
  }
  return out;
}

}  // namespace sonify
