// Stand-in for the captioner, audio generator and encoder adapters.
//
//   mock_adapter caption  <input> <output> <n>     [flags]
//   mock_adapter generate <input> <outdir> <n>     [flags]
//   mock_adapter encode   <request.jsonl> <out.emb> [flags]
//
// Flags: --sleep S, --fail, --count N (overrides n), --gap A, --noise A,
// --seed K, --dim D, --drop ID, --wrong-modality ID.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "sonify/store.hpp"
#include "sonify/synth.hpp"

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Flags {
  double sleep = 0.0;
  bool fail = false;
  int count = -1;
  double gap = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int dim = 64;
  std::string drop;
  std::string wrong_modality;
};

std::vector<double> frame_vector(const std::string& id, int dim, std::uint64_t seed) {
  sonify::KeyedRng rng{seed, fnv1a(id)};
  return sonify::random_unit_vector(rng, dim);
}

int encode(const std::string& input, const std::string& output, const Flags& f) {
  const auto request = sonify::read_manifest(input);
  sonify::KeyedRng offsets_rng{f.seed, 0x0ff5e7};
  const auto text_dir = sonify::random_unit_vector(offsets_rng, f.dim);
  const auto audio_dir = sonify::random_unit_vector(offsets_rng, f.dim);

  sonify::EmbeddingArchive archive;
  archive.dim = static_cast<std::uint32_t>(f.dim);
  for (const auto& rec : request.records()) {
    if (rec.id == f.drop) continue;
    std::vector<double> v;
    if (rec.modality == sonify::Modality::kImage) {
      v = frame_vector(rec.id, f.dim, f.seed);
    } else {
      const auto sib = sonify::parse_sibling_id(rec.id);
      const auto parent = sib ? sib->parent : rec.id;
      const auto& toward = rec.modality == sonify::Modality::kText ? text_dir : audio_dir;
      v = sonify::rotate_toward(frame_vector(parent, f.dim, f.seed), toward, f.gap);
      sonify::KeyedRng jitter{f.seed, fnv1a(rec.id), 1};
      v = sonify::perturb(v, jitter, f.noise);
    }
    auto m = rec.modality;
    if (rec.id == f.wrong_modality) m = m == sonify::Modality::kAudio ? sonify::Modality::kText : sonify::Modality::kAudio;
    archive.entries.push_back(sonify::make_embedding(rec.id, m, v));
  }
  sonify::write_archive(std::filesystem::path(output), archive);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> pos;
  Flags f;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    auto next = [&] { return args.at(++i); };
    if (a == "--sleep") f.sleep = std::stod(next());
    else if (a == "--fail") f.fail = true;
    else if (a == "--count") f.count = std::stoi(next());
    else if (a == "--gap") f.gap = std::stod(next());
    else if (a == "--noise") f.noise = std::stod(next());
    else if (a == "--seed") f.seed = std::stoull(next());
    else if (a == "--dim") f.dim = std::stoi(next());
    else if (a == "--drop") f.drop = next();
    else if (a == "--wrong-modality") f.wrong_modality = next();
    else pos.push_back(a);
  }
  if (pos.size() < 3) {
    std::cerr << "usage: mock_adapter caption|generate|encode <input> <output> [n]\n";
    return 64;
  }
  if (f.sleep > 0) std::this_thread::sleep_for(std::chrono::duration<double>(f.sleep));
  if (f.fail) {
    std::cerr << "mock " << pos[0] << " failing on purpose\n";
    return 3;
  }
  const auto& mode = pos[0];
  const auto& input = pos[1];
  const auto& output = pos[2];
  const int n = f.count >= 0 ? f.count : (pos.size() > 3 ? std::stoi(pos[3]) : 1);
  try {
    if (mode == "caption") {
      std::ofstream out(output);
      for (int i = 0; i < n; ++i) out << "caption " << i << " of " << std::filesystem::path(input).filename().string() << "\n";
      return 0;
    }
    if (mode == "generate") {
      std::ifstream in(input);
      std::string caption;
      std::getline(in, caption);
      for (int j = 0; j < n; ++j) {
        std::ofstream out(std::filesystem::path(output) / ("clip_" + std::to_string(j) + ".wav"));
        out << caption << "|" << j << "\n";
      }
      return 0;
    }
    if (mode == "encode") return encode(input, output, f);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  std::cerr << "unknown mode " << mode << "\n";
  return 64;
}
