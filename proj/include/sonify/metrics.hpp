#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sonify/embedding.hpp"

namespace sonify {

struct InconsistencyReport {
  std::string frame_id;
  std::string text_id;
  std::string audio_id;
  double d_image_text = 0.0;
  double d_image_audio = 0.0;
  double inc = 0.0;
};

/// inc = 2 * dis_cos(image, text) - dis_cos(image, audio), in [-1, 2].
/// Zero means the three representations agree.
InconsistencyReport inconsistency(const Embedding& image, const Embedding& text,
                                  const Embedding& audio);

enum class DistanceKind { kCosine, kEuclidean };

std::string_view distance_kind_name(DistanceKind kind);
DistanceKind distance_kind_from_name(std::string_view name);

struct SlerpParams {
  double theta = 0.5;
  DistanceKind distance = DistanceKind::kCosine;
};

void validate(const SlerpParams& p);

/// Transports the spherical displacement between two frames onto a reference
/// audio: m = slerp(target_frame, ref_frame, theta), and the result is
/// normalize(ref_audio + m - ref_frame), tagged as audio. theta = 1 leaves the
/// reference audio unchanged; theta = 0 applies the whole displacement.
Embedding slerp_audio_target(const Embedding& ref_audio, const Embedding& ref_frame,
                             const Embedding& target_frame, const SlerpParams& p = {});

double slerp_distance(const Embedding& candidate_audio, const Embedding& audio_target,
                      const SlerpParams& p = {});

struct RankedEntry {
  std::string candidate_id;
  double score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Lower score is better. Ties are broken by candidate id.
struct RankedResult {
  std::string query_id;
  std::string metric_name;
  std::vector<RankedEntry> entries;
};

inline constexpr std::size_t kDefaultTopK = 10;

RankedResult rank_candidates(std::string query_id, std::vector<RankedEntry> scored,
                             std::size_t k, std::string metric_name);

RankedResult rank_candidates(std::string query_id, std::span<const Embedding* const> candidates,
                             const std::function<double(const Embedding&)>& score,
                             std::size_t k, std::string metric_name);

struct TextAudioPair {
  const Embedding* text = nullptr;
  const Embedding* audio = nullptr;
};

struct InconsistencyRanking {
  RankedResult ranking;  // candidate ids are audio ids, scored by |inc|
  std::vector<InconsistencyReport> reports;  // one per input pair, input order
};

InconsistencyRanking rank_by_inconsistency(const Embedding& image,
                                           std::span<const TextAudioPair> pairs, std::size_t k);

}  // namespace sonify
