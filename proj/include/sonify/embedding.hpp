#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sonify {

// Serialized codes are stable: 0 = image, 1 = text, 2 = audio.
enum class Modality : std::uint8_t { kImage = 0, kText = 1, kAudio = 2 };

inline constexpr Modality kAllModalities[] = {Modality::kImage, Modality::kText,
                                              Modality::kAudio};

std::string_view modality_name(Modality m);
std::optional<Modality> modality_from_name(std::string_view name);
std::optional<Modality> modality_from_code(std::uint8_t code);

/// A modality-tagged embedding vector. Components are stored as 32-bit floats
/// and must be finite; the dimension is at least 2.
class Embedding {
 public:
  static constexpr std::size_t kMinDim = 2;

  Embedding(std::string id, Modality modality, std::vector<float> values);

  const std::string& id() const noexcept { return id_; }
  Modality modality() const noexcept { return modality_; }
  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }

  double norm() const noexcept;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::string id_;
  Modality modality_;
  std::vector<float> values_;
};

/// Builds an embedding from 64-bit values (rounded to float storage).
Embedding make_embedding(std::string id, Modality modality, std::span<const double> values);

inline constexpr double kZeroNormEpsilon = 1e-12;
// Tolerance used when an operation requires unit-norm input. Float storage
// alone perturbs the norm by ~1e-7.
inline constexpr double kUnitNormTolerance = 1e-5;
inline constexpr double kAntipodalEpsilon = 1e-6;
inline constexpr double kSlerpLinearThreshold = 1e-6;

Embedding normalize(const Embedding& v);
bool is_unit_norm(const Embedding& v, double tolerance = kUnitNormTolerance);

double dot(const Embedding& a, const Embedding& b);
double cosine_similarity(const Embedding& a, const Embedding& b);
// (1 - cos) / 2, in [0, 1].
double dis_cos(const Embedding& a, const Embedding& b);
double euclidean(const Embedding& a, const Embedding& b);

/// Spherical interpolation from `a` (theta = 0) to `b` (theta = 1). The result
/// keeps the id and modality of `a`.
Embedding slerp(const Embedding& a, const Embedding& b, double theta);

}  // namespace sonify
