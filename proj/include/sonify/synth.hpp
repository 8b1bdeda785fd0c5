#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sonify/embedding.hpp"
#include "sonify/random.hpp"
#include "sonify/store.hpp"

namespace sonify {

/// Geometry of a synthetic multimodal space. Angles are in radians.
///
/// Each scene has a random unit anchor. Frames sit within
/// `intra_scene_spread` of their anchor. Every caption and audio sibling is
/// its frame rotated by `gap_angle` toward a fixed per-modality offset
/// direction, then jittered by up to `noise`.
struct SyntheticSpaceConfig {
  int dim = 1024;
  int n_scenes = 1;
  int frames_per_scene = 1;
  int texts_per_frame = 1;
  int audios_per_frame = 1;
  double gap_angle = 0.0;
  double intra_scene_spread = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SyntheticSpaceConfig& cfg);

struct SyntheticSpace {
  Manifest manifest;
  EmbeddingArchive archive;
  std::vector<Embedding> scene_anchors;
  std::vector<Embedding> modality_offsets;  // indexed by Modality code

  EmbeddingStore to_store() const;
};

SyntheticSpace generate(const SyntheticSpaceConfig& cfg);

std::string synthetic_scene_label(int scene);
std::string synthetic_frame_id(int scene, int frame);

// Building blocks, also used by the mock adapters in tests.
std::vector<double> random_unit_vector(KeyedRng& rng, int dim);
// Rotates unit `v` by `angle` inside the plane spanned by `v` and `toward`.
// Returns `v` unchanged when `toward` is parallel to it.
std::vector<double> rotate_toward(std::span<const double> v, std::span<const double> toward,
                                  double angle);
// Rotates unit `v` by an angle drawn uniformly from [0, max_angle] toward a
// random direction.
std::vector<double> perturb(std::span<const double> v, KeyedRng& rng, double max_angle);

}  // namespace sonify
