#include "sonify/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "sonify/error.hpp"

namespace sonify {
namespace {

void check_same_dim(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch, "'" + a.id() + "' has dim " + std::to_string(a.dim()) +
                                             ", '" + b.id() + "' has dim " +
                                             std::to_string(b.dim()));
  }
}

double checked_norm(const Embedding& v) {
  const double n = v.norm();
  if (n < kZeroNormEpsilon) {
    throw Error(ErrorCode::kZeroVector, "embedding '" + v.id() + "' has zero norm");
  }
  return n;
}

std::vector<double> unit_copy(const Embedding& v) {
  const double n = checked_norm(v);
  std::vector<double> out(v.dim());
  const auto src = v.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(src[i]) / n;
  return out;
}

}  // namespace

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kImage: return "image";
    case Modality::kText: return "text";
    case Modality::kAudio: return "audio";
  }
  return "unknown";
}

std::optional<Modality> modality_from_name(std::string_view name) {
  if (name == "image") return Modality::kImage;
  if (name == "text") return Modality::kText;
  if (name == "audio") return Modality::kAudio;
  return std::nullopt;
}

std::optional<Modality> modality_from_code(std::uint8_t code) {
  if (code > 2) return std::nullopt;
  return static_cast<Modality>(code);
}

Embedding::Embedding(std::string id, Modality modality, std::vector<float> values)
    : id_(std::move(id)), modality_(modality), values_(std::move(values)) {
  if (values_.size() < kMinDim) {
    throw Error(ErrorCode::kInvalidArgument,
                "embedding '" + id_ + "' has dim " + std::to_string(values_.size()) + " < 2");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::kNonFinite,
                  "embedding '" + id_ + "' component " + std::to_string(i) + " is not finite");
    }
  }
}

double Embedding::norm() const noexcept {
  double sum = 0.0;
  for (const float x : values_) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

Embedding make_embedding(std::string id, Modality modality, std::span<const double> values) {
  std::vector<float> v(values.size());
  std::transform(values.begin(), values.end(), v.begin(),
                 [](double x) { return static_cast<float>(x); });
  return Embedding(std::move(id), modality, std::move(v));
}

Embedding normalize(const Embedding& v) {
  return make_embedding(v.id(), v.modality(), unit_copy(v));
}

bool is_unit_norm(const Embedding& v, double tolerance) {
  return std::abs(v.norm() - 1.0) <= tolerance;
}

double dot(const Embedding& a, const Embedding& b) {
  check_same_dim(a, b);
  const auto x = a.values();
  const auto y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  }
  return sum;
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  check_same_dim(a, b);
  checked_norm(a);
  checked_norm(b);
  // sqrt of the product of squared norms: exact 1 for identical inputs.
  return std::clamp(dot(a, b) / std::sqrt(dot(a, a) * dot(b, b)), -1.0, 1.0);
}

double dis_cos(const Embedding& a, const Embedding& b) {
  return (1.0 - cosine_similarity(a, b)) / 2.0;
}

double euclidean(const Embedding& a, const Embedding& b) {
  check_same_dim(a, b);
  const auto x = a.values();
  const auto y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

Embedding slerp(const Embedding& a, const Embedding& b, double theta) {
  check_same_dim(a, b);
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "slerp theta must lie in [0, 1]");
  }
  for (const Embedding* e : {&a, &b}) {
    if (!is_unit_norm(*e)) {
      throw Error(ErrorCode::kNotUnitNorm,
                  "embedding '" + e->id() + "' has norm " + std::to_string(e->norm()));
    }
  }
  // Work on exactly-unit double copies so the output norm does not inherit
  // float rounding from the inputs.
  const auto ua = unit_copy(a);
  const auto ub = unit_copy(b);
  double c = 0.0;
  for (std::size_t i = 0; i < ua.size(); ++i) c += ua[i] * ub[i];
  c = std::clamp(c, -1.0, 1.0);
  if (c < -1.0 + kAntipodalEpsilon) {
    throw Error(ErrorCode::kAntipodalVectors,
                "'" + a.id() + "' and '" + b.id() + "' are antipodal");
  }

  const double omega = std::acos(c);
  std::vector<double> out(ua.size());
  if (omega < kSlerpLinearThreshold) {
    double sq = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (1.0 - theta) * ua[i] + theta * ub[i];
      sq += out[i] * out[i];
    }
    const double n = std::sqrt(sq);
    for (double& x : out) x /= n;
  } else {
    const double s = std::sin(omega);
    const double wa = std::sin((1.0 - theta) * omega) / s;
    const double wb = std::sin(theta * omega) / s;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = wa * ua[i] + wb * ub[i];
  }
  return make_embedding(a.id(), a.modality(), out);
}

}  // namespace sonify
