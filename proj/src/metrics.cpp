#include "sonify/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sonify/error.hpp"

namespace sonify {
namespace {

void expect_modality(const Embedding& e, Modality m) {
  if (e.modality() != m) {
    throw Error(ErrorCode::kWrongModality, "'" + e.id() + "' is " +
                                               std::string(modality_name(e.modality())) +
                                               ", expected " + std::string(modality_name(m)));
  }
}

void expect_unit(const Embedding& e) {
  if (!is_unit_norm(e)) {
    throw Error(ErrorCode::kNotUnitNorm,
                "'" + e.id() + "' has norm " + std::to_string(e.norm()));
  }
}

}  // namespace

InconsistencyReport inconsistency(const Embedding& image, const Embedding& text,
                                  const Embedding& audio) {
  expect_modality(image, Modality::kImage);
  expect_modality(text, Modality::kText);
  expect_modality(audio, Modality::kAudio);
  InconsistencyReport r;
  r.frame_id = image.id();
  r.text_id = text.id();
  r.audio_id = audio.id();
  r.d_image_text = dis_cos(image, text);
  r.d_image_audio = dis_cos(image, audio);
  r.inc = 2.0 * r.d_image_text - r.d_image_audio;
  return r;
}

std::string_view distance_kind_name(DistanceKind kind) {
  return kind == DistanceKind::kCosine ? "cosine" : "euclidean";
}

DistanceKind distance_kind_from_name(std::string_view name) {
  if (name == "cosine") return DistanceKind::kCosine;
  if (name == "euclidean") return DistanceKind::kEuclidean;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown distance '" + std::string(name) + "' (cosine|euclidean)");
}

void validate(const SlerpParams& p) {
  if (!(p.theta >= 0.0 && p.theta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  }
}

Embedding slerp_audio_target(const Embedding& ref_audio, const Embedding& ref_frame,
                             const Embedding& target_frame, const SlerpParams& p) {
  validate(p);
  expect_modality(ref_audio, Modality::kAudio);
  expect_modality(ref_frame, Modality::kImage);
  expect_modality(target_frame, Modality::kImage);
  expect_unit(ref_audio);
  if (ref_audio.dim() != ref_frame.dim()) {
    throw Error(ErrorCode::kDimMismatch, "reference audio and frame differ in dim");
  }
  const auto m = slerp(target_frame, ref_frame, p.theta);

  const auto audio = ref_audio.values();
  const auto mid = m.values();
  const auto ref = ref_frame.values();
  std::vector<double> moved(audio.size());
  for (std::size_t i = 0; i < moved.size(); ++i) {
    moved[i] = static_cast<double>(audio[i]) +
               (static_cast<double>(mid[i]) - static_cast<double>(ref[i]));
  }
  return normalize(make_embedding(ref_audio.id() + "@target", Modality::kAudio, moved));
}

double slerp_distance(const Embedding& candidate_audio, const Embedding& audio_target,
                      const SlerpParams& p) {
  expect_modality(candidate_audio, Modality::kAudio);
  return p.distance == DistanceKind::kCosine ? dis_cos(candidate_audio, audio_target)
                                             : euclidean(candidate_audio, audio_target);
}

RankedResult rank_candidates(std::string query_id, std::vector<RankedEntry> scored,
                             std::size_t k, std::string metric_name) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (scored.empty()) {
    throw Error(ErrorCode::kEmptyCandidates, "no candidates to rank for '" + query_id + "'");
  }
  for (const auto& e : scored) {
    if (std::isnan(e.score)) {
      throw Error(ErrorCode::kInvalidArgument, "candidate '" + e.candidate_id + "' scored NaN");
    }
  }
  const auto less = [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.candidate_id < b.candidate_id;
  };
  const auto keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), less);
  scored.resize(keep);
  return RankedResult{std::move(query_id), std::move(metric_name), std::move(scored)};
}

RankedResult rank_candidates(std::string query_id, std::span<const Embedding* const> candidates,
                             const std::function<double(const Embedding&)>& score,
                             std::size_t k, std::string metric_name) {
  std::vector<RankedEntry> scored;
  scored.reserve(candidates.size());
  for (const auto* c : candidates) scored.push_back({c->id(), score(*c)});
  return rank_candidates(std::move(query_id), std::move(scored), k, std::move(metric_name));
}

InconsistencyRanking rank_by_inconsistency(const Embedding& image,
                                           std::span<const TextAudioPair> pairs, std::size_t k) {
  InconsistencyRanking out;
  std::vector<RankedEntry> scored;
  scored.reserve(pairs.size());
  for (const auto& pair : pairs) {
    out.reports.push_back(inconsistency(image, *pair.text, *pair.audio));
    scored.push_back({pair.audio->id(), std::abs(out.reports.back().inc)});
  }
  out.ranking = rank_candidates(image.id(), std::move(scored), k, "abs_inconsistency");
  return out;
}

}  // namespace sonify
