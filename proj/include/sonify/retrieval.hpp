#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sonify/adapter.hpp"
#include "sonify/embedding.hpp"
#include "sonify/metrics.hpp"
#include "sonify/store.hpp"

namespace sonify {

enum class Scheme { kRetrieval, kGenerative };

std::string_view scheme_name(Scheme scheme);

struct CaptionLineage {
  int caption_index = 0;
  std::string text_id;
  std::string caption;
};

struct AudioLineage {
  int caption_index = 0;
  int variant_index = 0;
  std::string audio_id;
  std::string uri;
};

/// Outcome of sonifying one frame. `chosen_audio_id` is always the first
/// ranked candidate. Generative plans also record which caption produced
/// which audio.
struct SonorizationPlan {
  std::string frame_id;
  Scheme scheme = Scheme::kRetrieval;
  RankedResult candidates;
  std::string chosen_audio_id;
  std::vector<CaptionLineage> captions;
  std::vector<AudioLineage> audios;
  std::vector<InconsistencyReport> reports;
};

/// Library retrieval: every audio in the store is scored by dis_cos against
/// the frame.
SonorizationPlan sonorize_scheme1(const Embedding& frame, const EmbeddingStore& store,
                                  std::size_t k = kDefaultTopK);

enum class Scheme2Ranking { kInconsistency, kSlerpDistance };

struct SlerpReference {
  Embedding frame;
  Embedding audio;
  SlerpParams params;
};

struct Scheme2Options {
  std::filesystem::path work_dir;
  std::size_t k = kDefaultTopK;
  int max_parallel = 4;
  Scheme2Ranking ranking = Scheme2Ranking::kInconsistency;
  // Required when ranking by SLERP distance.
  std::optional<SlerpReference> reference;
};

/// Caption -> generation -> encoding through external adapters, then ranking
/// of the generated audios (by |inc| unless configured otherwise).
SonorizationPlan sonorize_scheme2(const AssetRecord& frame_asset, const AdapterSpec& captioner,
                                  const AdapterSpec& generator, const AdapterSpec& encoder,
                                  const Scheme2Options& options);

}  // namespace sonify

namespace sonify {

/// Caption/audio siblings of every frame in the store, paired by caption
/// index ("<frame>#t<i>" with "<frame>#a<i>" or "<frame>#a<i>.<j>"), in
/// archive order of the audios. Frames without pairs are absent.
std::map<std::string, std::vector<TextAudioPair>, std::less<>> sibling_pairs(
    const EmbeddingStore& store);

}  // namespace sonify
