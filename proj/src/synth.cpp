#include "sonify/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "sonify/error.hpp"

namespace sonify {
namespace {

enum Stream : std::uint64_t { kAnchor = 1, kFrame = 2, kSibling = 3, kOffset = 4 };

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void validate(const SyntheticSpaceConfig& cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (cfg.dim < 3) fail("dim must be >= 3");
  if (cfg.n_scenes < 1) fail("n_scenes must be >= 1");
  if (cfg.frames_per_scene < 0 || cfg.texts_per_frame < 0 || cfg.audios_per_frame < 0) {
    fail("per-scene and per-frame counts must be >= 0");
  }
  if (!(cfg.gap_angle >= 0.0 && cfg.gap_angle <= std::numbers::pi / 2)) {
    fail("gap_angle must lie in [0, pi/2]");
  }
  if (!(cfg.intra_scene_spread >= 0.0) || !std::isfinite(cfg.intra_scene_spread)) {
    fail("intra_scene_spread must be finite and >= 0");
  }
  if (!(cfg.noise >= 0.0) || !std::isfinite(cfg.noise)) fail("noise must be finite and >= 0");
  if (cfg.n_scenes > 9999 || cfg.frames_per_scene > 99999) fail("too many scenes or frames");
}

std::string synthetic_scene_label(int scene) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene-%02d", scene);
  return buf;
}

std::string synthetic_frame_id(int scene, int frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%02d-f%03d", scene, frame);
  return buf;
}

std::vector<double> random_unit_vector(KeyedRng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double n = 0.0;
  while (n < 1e-9) {
    for (double& x : v) x = rng.normal();
    n = norm_of(v);
  }
  for (double& x : v) x /= n;
  return v;
}

std::vector<double> rotate_toward(std::span<const double> v, std::span<const double> toward,
                                  double angle) {
  std::vector<double> out(v.begin(), v.end());
  if (angle == 0.0) return out;
  double proj = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) proj += v[i] * toward[i];
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = toward[i] - proj * v[i];
  const double wn = norm_of(w);
  if (wn < 1e-12) return out;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = c * v[i] + s * w[i] / wn;
  const double n = norm_of(out);
  for (double& x : out) x /= n;
  return out;
}

std::vector<double> perturb(std::span<const double> v, KeyedRng& rng, double max_angle) {
  const auto direction = random_unit_vector(rng, static_cast<int>(v.size()));
  const double angle = max_angle * rng.uniform();
  return rotate_toward(v, direction, angle);
}

SyntheticSpace generate(const SyntheticSpaceConfig& cfg) {
  validate(cfg);
  SyntheticSpace space;
  space.archive.dim = static_cast<std::uint32_t>(cfg.dim);
  const auto seed = cfg.seed;

  std::vector<std::vector<double>> offsets;
  for (const auto m : kAllModalities) {
    KeyedRng rng{seed, kOffset, static_cast<std::uint64_t>(m)};
    offsets.push_back(random_unit_vector(rng, cfg.dim));
    space.modality_offsets.push_back(
        make_embedding("offset-" + std::string(modality_name(m)), m, offsets.back()));
  }

  auto emit = [&](std::string id, Modality m, const std::string& scene,
                  std::optional<std::string> caption, std::span<const double> v) {
    AssetRecord record{id, m, scene, "synth://" + std::string(modality_name(m)) + "/" + id,
                       std::move(caption)};
    space.manifest.add(std::move(record));
    space.archive.entries.push_back(make_embedding(std::move(id), m, v));
  };

  for (int s = 0; s < cfg.n_scenes; ++s) {
    const auto scene = synthetic_scene_label(s);
    KeyedRng anchor_rng{seed, kAnchor, static_cast<std::uint64_t>(s)};
    const auto anchor = random_unit_vector(anchor_rng, cfg.dim);
    space.scene_anchors.push_back(make_embedding(scene, Modality::kImage, anchor));

    for (int f = 0; f < cfg.frames_per_scene; ++f) {
      const auto frame_id = synthetic_frame_id(s, f);
      KeyedRng frame_rng{seed, kFrame, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(f)};
      const auto frame = perturb(anchor, frame_rng, cfg.intra_scene_spread);
      emit(frame_id, Modality::kImage, scene, std::nullopt, frame);

      auto sibling = [&](Modality m, int k) {
        KeyedRng rng{seed, kSibling, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(f),
                     static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)};
        const auto gapped =
            rotate_toward(frame, offsets[static_cast<std::size_t>(m)], cfg.gap_angle);
        return perturb(gapped, rng, cfg.noise);
      };
      for (int k = 0; k < cfg.texts_per_frame; ++k) {
        emit(text_sibling_id(frame_id, k), Modality::kText, scene,
             "synthetic caption " + std::to_string(k) + " of " + frame_id,
             sibling(Modality::kText, k));
      }
      for (int k = 0; k < cfg.audios_per_frame; ++k) {
        emit(audio_sibling_id(frame_id, k), Modality::kAudio, scene, std::nullopt,
             sibling(Modality::kAudio, k));
      }
    }
  }
  return space;
}

EmbeddingStore SyntheticSpace::to_store() const {
  return EmbeddingStore::build(manifest, archive, IngestOptions{});
}

}  // namespace sonify
