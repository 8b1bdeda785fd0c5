#include "sonify/retrieval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sonify/error.hpp"
#include "sonify/synth.hpp"
#include "test_support.hpp"

namespace sonify {
namespace {

using testing::TempDir;

EmbeddingStore store_of(const std::vector<Embedding>& embeddings) {
  Manifest m;
  EmbeddingArchive a;
  a.dim = static_cast<std::uint32_t>(embeddings.front().dim());
  for (const auto& e : embeddings) {
    m.add({e.id(), e.modality(), "scene", "file://" + e.id(), std::nullopt});
    a.entries.push_back(e);
  }
  return EmbeddingStore::build(std::move(m), std::move(a));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Scheme1Test, ExactMatchWins) {
  const auto store = store_of({testing::audio({1, 0, 0}, "a1"), testing::audio({0, 1, 0}, "a2"),
                               testing::audio({0.6, 0.8, 0}, "a3")});
  const auto plan = sonorize_scheme1(testing::image({0, 1, 0}, "f"), store, 2);
  EXPECT_EQ(plan.chosen_audio_id, "a2");
  EXPECT_EQ(plan.scheme, Scheme::kRetrieval);
  EXPECT_EQ(plan.candidates.metric_name, "dis_cos");
  ASSERT_EQ(plan.candidates.entries.size(), 2u);
  EXPECT_NEAR(plan.candidates.entries[0].score, 0.0, 1e-9);
  EXPECT_EQ(plan.candidates.entries[1].candidate_id, "a3");
  EXPECT_NEAR(plan.candidates.entries[1].score, 0.1, 1e-7);
}

TEST(Scheme1Test, ChoosesArgminOverSyntheticLibrary) {
  SyntheticSpaceConfig cfg;
  cfg.dim = 64;
  cfg.n_scenes = 4;
  cfg.frames_per_scene = 5;
  cfg.audios_per_frame = 2;
  cfg.gap_angle = 0.3;
  cfg.intra_scene_spread = 0.1;
  cfg.noise = 0.05;
  cfg.seed = 31;
  const auto store = generate(cfg).to_store();
  for (const auto* frame : store.by_modality(Modality::kImage)) {
    const auto plan = sonorize_scheme1(*frame, store);
    const Embedding* best = nullptr;
    double best_d = 0.0;
    for (const auto* a : store.by_modality(Modality::kAudio)) {
      const double d = dis_cos(*frame, *a);
      if (!best || d < best_d || (d == best_d && a->id() < best->id())) {
        best = a;
        best_d = d;
      }
    }
    EXPECT_EQ(plan.chosen_audio_id, best->id());
    EXPECT_EQ(store.scene_of(plan.chosen_audio_id), store.scene_of(frame->id()));
    EXPECT_EQ(plan.candidates.entries.size(), kDefaultTopK);
  }
}

TEST(Scheme1Test, ScaleInvariance) {
  KeyedRng rng{32};
  std::vector<Embedding> audios;
  for (int i = 0; i < 30; ++i) audios.push_back(testing::audio(testing::random_unit(rng, 16), "a" + std::to_string(i)));
  const auto store = store_of(audios);
  auto v = testing::random_unit(rng, 16);
  const auto base = sonorize_scheme1(testing::image(v, "f"), store, 30);
  for (auto& x : v) x *= 7.5;
  const auto scaled = sonorize_scheme1(testing::image(v, "f"), store, 30);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(base.candidates.entries[i].candidate_id, scaled.candidates.entries[i].candidate_id);
  }
}

TEST(Scheme1Test, Errors) {
  const auto no_audio = store_of({testing::image({1, 0}, "f"), testing::text({0, 1}, "t")});
  EXPECT_EQ(code_of([&] { sonorize_scheme1(testing::image({1, 0}), no_audio); }), ErrorCode::kNoAudioAssets);
  const auto store = store_of({testing::audio({1, 0}, "a")});
  EXPECT_EQ(code_of([&] { sonorize_scheme1(testing::text({1, 0}), store); }), ErrorCode::kWrongModality);
  EXPECT_EQ(code_of([&] { sonorize_scheme1(testing::image({1, 0, 0}), store); }), ErrorCode::kDimMismatch);
}

TEST(SiblingPairsTest, PairsByCaptionIndex) {
  SyntheticSpaceConfig cfg;
  cfg.dim = 8;
  cfg.n_scenes = 2;
  cfg.frames_per_scene = 2;
  cfg.texts_per_frame = 3;
  cfg.audios_per_frame = 2;
  cfg.seed = 33;
  const auto store = generate(cfg).to_store();
  const auto pairs = sibling_pairs(store);
  ASSERT_EQ(pairs.size(), 4u);
  for (const auto& [frame, list] : pairs) {
    ASSERT_EQ(list.size(), 2u);
    for (const auto& p : list) {
      const auto t = parse_sibling_id(p.text->id());
      const auto a = parse_sibling_id(p.audio->id());
      ASSERT_TRUE(t && a);
      EXPECT_EQ(t->parent, frame);
      EXPECT_EQ(a->parent, frame);
      EXPECT_EQ(t->index, a->index);
    }
  }
}

// --- generative scheme through the mock adapters ---

std::string mock(const std::string& args) { return std::string("'") + MOCK_ADAPTER_PATH + "' " + args; }

struct Adapters {
  AdapterSpec captioner{AdapterKind::kCaptioner, mock("caption {input} {output} {variants}"), 20, 30};
  AdapterSpec generator{AdapterKind::kAudioGenerator, mock("generate {input} {output} {variants}"), 1, 30};
  AdapterSpec encoder{AdapterKind::kEncoder, mock("encode {input} {output} --gap 0.3 --noise 0.1 --seed 4"), 1, 30};
};

const AssetRecord kFrame{"s00-f000", Modality::kImage, "scene-00", "frames/s00-f000.png", std::nullopt};

TEST(Scheme2Test, TwentyCaptionsOneAudioEach) {
  TempDir dir;
  Adapters ad;
  Scheme2Options opt;
  opt.work_dir = dir.path();
  const auto plan = sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
  EXPECT_EQ(plan.scheme, Scheme::kGenerative);
  EXPECT_EQ(plan.captions.size(), 20u);
  EXPECT_EQ(plan.audios.size(), 20u);
  EXPECT_EQ(plan.reports.size(), 20u);
  ASSERT_EQ(plan.candidates.entries.size(), 10u);
  EXPECT_EQ(plan.candidates.metric_name, "abs_inconsistency");
  EXPECT_EQ(plan.chosen_audio_id, plan.candidates.entries.front().candidate_id);

  // The chosen audio has the smallest |inc| among all 20.
  double min_abs = 1e9;
  std::string argmin;
  for (const auto& r : plan.reports) {
    if (std::abs(r.inc) < min_abs || (std::abs(r.inc) == min_abs && r.audio_id < argmin)) {
      min_abs = std::abs(r.inc);
      argmin = r.audio_id;
    }
  }
  EXPECT_EQ(plan.chosen_audio_id, argmin);
  EXPECT_DOUBLE_EQ(plan.candidates.entries.front().score, min_abs);

  std::set<std::string> ids;
  for (const auto& a : plan.audios) {
    ids.insert(a.audio_id);
    const auto sib = parse_sibling_id(a.audio_id);
    ASSERT_TRUE(sib);
    EXPECT_EQ(sib->index, a.caption_index);
    EXPECT_EQ(testing::slurp(a.uri), plan.captions[static_cast<std::size_t>(a.caption_index)].caption + "|0\n");
  }
  EXPECT_EQ(ids.size(), 20u);
}

TEST(Scheme2Test, CollapsedGapGivesZeroInconsistency) {
  TempDir dir;
  Adapters ad;
  ad.captioner.variants = 3;
  ad.encoder.command = mock("encode {input} {output} --gap 0 --noise 0");
  Scheme2Options opt;
  opt.work_dir = dir.path();
  const auto plan = sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
  for (const auto& r : plan.reports) EXPECT_NEAR(r.inc, 0.0, 1e-6);
}

TEST(Scheme2Test, MultipleAudiosPerCaption) {
  TempDir dir;
  Adapters ad;
  ad.captioner.variants = 2;
  ad.generator.variants = 3;
  Scheme2Options opt;
  opt.work_dir = dir.path();
  opt.k = 100;
  const auto plan = sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
  EXPECT_EQ(plan.audios.size(), 6u);
  EXPECT_EQ(plan.candidates.entries.size(), 6u);
  EXPECT_EQ(plan.audios[4].audio_id, "s00-f000#a1.1");
}

TEST(Scheme2Test, Reproducible) {
  TempDir a, b;
  Adapters ad;
  Scheme2Options opt;
  opt.work_dir = a.path();
  const auto first = sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
  opt.work_dir = b.path();
  opt.max_parallel = 1;
  const auto second = sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
  EXPECT_EQ(first.candidates.entries, second.candidates.entries);
}

TEST(Scheme2Test, SlerpRanking) {
  TempDir dir;
  Adapters ad;
  ad.captioner.variants = 5;
  KeyedRng rng{34};
  Scheme2Options opt;
  opt.work_dir = dir.path();
  opt.ranking = Scheme2Ranking::kSlerpDistance;
  opt.reference = SlerpReference{testing::image(testing::random_unit(rng, 64), "rf"),
                                 testing::audio(testing::random_unit(rng, 64), "ra"), {}};
  const auto plan = sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
  EXPECT_EQ(plan.candidates.metric_name, "slerp_distance_cosine");
  EXPECT_EQ(plan.candidates.entries.size(), 5u);
  EXPECT_TRUE(std::is_sorted(plan.candidates.entries.begin(), plan.candidates.entries.end(),
                             [](const auto& x, const auto& y) { return x.score < y.score; }));
}

TEST(Scheme2Test, TimeoutNamesStage) {
  TempDir dir;
  Adapters ad;
  ad.captioner.command = mock("caption {input} {output} {variants} --sleep 10");
  ad.captioner.timeout_seconds = 0.5;
  Scheme2Options opt;
  opt.work_dir = dir.path();
  const auto start = std::chrono::steady_clock::now();
  try {
    sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAdapterFailure);
    EXPECT_NE(std::string(e.what()).find("captioner"), std::string::npos) << e.what();
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(Scheme2Test, NonzeroExitCarriesLog) {
  TempDir dir;
  Adapters ad;
  ad.generator.command = mock("generate {input} {output} {variants} --fail");
  Scheme2Options opt;
  opt.work_dir = dir.path();
  try {
    sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAdapterFailure);
    const std::string what = e.what();
    EXPECT_NE(what.find("audio_generator"), std::string::npos) << what;
    EXPECT_NE(what.find("failing on purpose"), std::string::npos) << what;
  }
}

TEST(Scheme2Test, ProtocolErrors) {
  Scheme2Options opt;
  auto run = [&](const Adapters& ad) {
    TempDir dir;
    opt.work_dir = dir.path();
    return code_of([&] { sonorize_scheme2(kFrame, ad.captioner, ad.generator, ad.encoder, opt); });
  };
  {
    Adapters ad;
    ad.captioner.command = mock("caption {input} {output} {variants} --count 19");
    EXPECT_EQ(run(ad), ErrorCode::kAdapterProtocolError);
  }
  {
    Adapters ad;
    ad.captioner.variants = 2;
    ad.generator.command = mock("generate {input} {output} {variants} --count 0");
    EXPECT_EQ(run(ad), ErrorCode::kAdapterProtocolError);
  }
  {
    Adapters ad;
    ad.captioner.variants = 2;
    ad.encoder.command = mock("encode {input} {output} --drop s00-f000#a1.0");
    EXPECT_EQ(run(ad), ErrorCode::kAdapterProtocolError);
  }
  {
    Adapters ad;
    ad.captioner.variants = 2;
    ad.encoder.command = mock("encode {input} {output} --wrong-modality s00-f000#t0");
    EXPECT_EQ(run(ad), ErrorCode::kAdapterProtocolError);
  }
  {
    Adapters ad;
    ad.captioner.variants = 2;
    ad.encoder.command = "printf garbage > {output} # {input}";
    EXPECT_EQ(run(ad), ErrorCode::kAdapterProtocolError);
  }
  {
    Adapters ad;
    ad.captioner.command = "true {input}";
    EXPECT_EQ(run(ad), ErrorCode::kInvalidConfig);
  }
  {
    Adapters ad;
    std::swap(ad.captioner, ad.generator);
    EXPECT_EQ(run(ad), ErrorCode::kInvalidConfig);
  }
}

TEST(AdapterTest, ExpandQuotesPaths) {
  AdapterSpec spec{AdapterKind::kEncoder, "enc {input} -o {output} -n {variants}", 3, 5};
  EXPECT_EQ(expand_command(spec, "/tmp/a b", "/tmp/it's"),
            "enc '/tmp/a b' -o '/tmp/it'\\''s' -n 3");
}

}  // namespace
}  // namespace sonify
