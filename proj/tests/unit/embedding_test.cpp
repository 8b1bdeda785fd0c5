#include "sonify/embedding.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sonify/error.hpp"
#include "test_support.hpp"

namespace sonify {
namespace {

using testing::image;
using testing::random_unit;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected sonify::Error";
  return ErrorCode::kInvalidArgument;
}

TEST(EmbeddingTest, RejectsNonFiniteAndTinyDims) {
  EXPECT_EQ(code_of([] { image({1.0}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { image({1.0, std::nan("")}); }), ErrorCode::kNonFinite);
  EXPECT_EQ(code_of([] { image({1.0, INFINITY}); }), ErrorCode::kNonFinite);
}

TEST(EmbeddingTest, ModalityCodesAreStable) {
  EXPECT_EQ(static_cast<int>(Modality::kImage), 0);
  EXPECT_EQ(static_cast<int>(Modality::kText), 1);
  EXPECT_EQ(static_cast<int>(Modality::kAudio), 2);
  EXPECT_EQ(modality_from_code(2), Modality::kAudio);
  EXPECT_FALSE(modality_from_code(3).has_value());
  EXPECT_EQ(modality_from_name("text"), Modality::kText);
  EXPECT_FALSE(modality_from_name("video").has_value());
}

TEST(NormalizeTest, Examples) {
  const auto n = normalize(image({3, 4}, "x"));
  EXPECT_NEAR(n.values()[0], 0.6, 1e-7);
  EXPECT_NEAR(n.values()[1], 0.8, 1e-7);
  EXPECT_EQ(n.id(), "x");
  EXPECT_EQ(n.modality(), Modality::kImage);

  const auto u = normalize(image({1, 0, 0}));
  EXPECT_EQ(u.values()[0], 1.0f);
  EXPECT_EQ(u.values()[1], 0.0f);

  EXPECT_EQ(code_of([] { normalize(image({0, 0})); }), ErrorCode::kZeroVector);
}

TEST(NormalizeTest, UnitNormForRandomVectors) {
  KeyedRng rng{11};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(2 + trial % 50));
    for (auto& x : v) x = rng.normal() * (1 + trial);
    EXPECT_NEAR(normalize(image(v)).norm(), 1.0, 1e-6);
  }
}

TEST(CosineTest, CornerValues) {
  EXPECT_DOUBLE_EQ(cosine_similarity(image({1, 0}), image({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(image({1, 0}), image({-1, 0})), -1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(image({1, 0}), image({0, 1})), 0.0);
}

TEST(CosineTest, Errors) {
  EXPECT_EQ(code_of([] { cosine_similarity(image({1, 0}), image({1, 0, 0})); }),
            ErrorCode::kDimMismatch);
  EXPECT_EQ(code_of([] { cosine_similarity(image({0, 0}), image({1, 0})); }),
            ErrorCode::kZeroVector);
}

TEST(DisCosTest, Examples) {
  EXPECT_DOUBLE_EQ(dis_cos(image({0.3, 0.4}), image({0.3, 0.4})), 0.0);
  EXPECT_DOUBLE_EQ(dis_cos(image({1, 2}), image({-1, -2})), 1.0);
  EXPECT_DOUBLE_EQ(dis_cos(image({1, 0}), image({0, 5})), 0.5);
}

TEST(DisCosTest, SymmetricScaleInvariantAndBounded) {
  KeyedRng rng{12};
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 2 + trial % 30;
    auto a = random_unit(rng, dim);
    auto b = random_unit(rng, dim);
    const double s = 0.01 + 10 * rng.uniform();
    std::vector<double> bs(b);
    for (auto& x : bs) x *= s;
    const double d = dis_cos(image(a), image(b));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_NEAR(d, dis_cos(image(b), image(a)), 1e-12);
    EXPECT_NEAR(d, dis_cos(image(a), image(bs)), 1e-6);
    EXPECT_NEAR(cosine_similarity(image(a), image(b)), cosine_similarity(image(bs), image(a)), 1e-6);
  }
}

TEST(EuclideanTest, Examples) {
  EXPECT_DOUBLE_EQ(euclidean(image({1, 2}), image({1, 2})), 0.0);
  EXPECT_DOUBLE_EQ(euclidean(image({0, 0}), image({3, 4})), 5.0);
  EXPECT_NEAR(euclidean(image({1, 0}), image({0, 1})), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(code_of([] { euclidean(image({1, 0}), image({1, 0, 0})); }), ErrorCode::kDimMismatch);
}

TEST(SlerpTest, Examples) {
  const auto a = image({1, 0}, "a");
  const auto b = image({0, 1}, "b");
  EXPECT_EQ(slerp(a, b, 0.0), a);
  const auto end = slerp(a, b, 1.0);
  EXPECT_NEAR(end.values()[0], 0.0, 1e-7);
  EXPECT_NEAR(end.values()[1], 1.0, 1e-7);
  const auto mid = slerp(a, b, 0.5);
  EXPECT_NEAR(mid.values()[0], std::numbers::sqrt2 / 2, 1e-7);
  EXPECT_NEAR(mid.values()[1], std::numbers::sqrt2 / 2, 1e-7);
  EXPECT_EQ(mid.id(), "a");
}

TEST(SlerpTest, Errors) {
  EXPECT_EQ(code_of([] { slerp(image({1, 0}), image({-1, 0}), 0.5); }),
            ErrorCode::kAntipodalVectors);
  EXPECT_EQ(code_of([] { slerp(image({2, 0}), image({0, 1}), 0.5); }), ErrorCode::kNotUnitNorm);
  EXPECT_EQ(code_of([] { slerp(image({1, 0}), image({0, 0, 1}), 0.5); }), ErrorCode::kDimMismatch);
  EXPECT_EQ(code_of([] { slerp(image({1, 0}), image({0, 1}), 1.5); }), ErrorCode::kInvalidArgument);
}

TEST(SlerpTest, NearParallelFallsBackToLinear) {
  const auto a = normalize(image({1, 1e-9, 0}));
  const auto b = normalize(image({1, 0, 1e-9}));
  const auto m = slerp(a, b, 0.3);
  EXPECT_NEAR(m.norm(), 1.0, 1e-6);
  EXPECT_NEAR(m.values()[0], 1.0, 1e-6);
}

TEST(SlerpTest, Properties) {
  KeyedRng rng{13};
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 3 + trial % 40;
    const auto a = image(random_unit(rng, dim), "a");
    const auto b = image(random_unit(rng, dim), "b");
    for (int i = 0; i <= 10; ++i) {
      const double t = i / 10.0;
      const auto ab = slerp(a, b, t);
      const auto ba = slerp(b, a, 1.0 - t);
      EXPECT_NEAR(ab.norm(), 1.0, 1e-6);
      for (std::size_t d = 0; d < ab.dim(); ++d) EXPECT_NEAR(ab.values()[d], ba.values()[d], 1e-6);
    }
    const auto mid = slerp(a, b, 0.5);
    EXPECT_NEAR(cosine_similarity(mid, a), cosine_similarity(mid, b), 1e-6);
  }
}

}  // namespace
}  // namespace sonify
