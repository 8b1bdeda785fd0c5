#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sonify/metrics.hpp"
#include "sonify/store.hpp"

namespace sonify {

using Timestamp = std::chrono::sys_seconds;

// Canonical form "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);

inline constexpr int kMinMos = 1;
inline constexpr int kMaxMos = 5;

struct RatingRecord {
  std::string rater_id;
  std::string frame_id;
  std::string audio_id;
  int mos = kMinMos;
  Timestamp timestamp{};

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

inline constexpr std::string_view kRatingsHeader = "rater_id,frame_id,audio_id,mos,timestamp";

std::vector<RatingRecord> parse_ratings(std::istream& in, const std::string& source_name);
std::vector<RatingRecord> read_ratings(const std::filesystem::path& path);
// One CSV row without the trailing newline.
std::string format_rating_row(const RatingRecord& r);
void write_ratings(std::ostream& out, std::span<const RatingRecord> ratings);
void write_ratings(const std::filesystem::path& path, std::span<const RatingRecord> ratings);

// Population statistics (divisor n).
struct GroupStats {
  std::string group;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

enum class GroupBy { kScene, kPair };

std::string_view group_by_name(GroupBy g);
GroupBy group_by_from_name(std::string_view name);
std::string pair_label(std::string_view frame_id, std::string_view audio_id);

/// Mean/std/n of MOS per group, sorted by group label. Grouping by scene
/// resolves frames through `manifest`.
std::vector<GroupStats> mos_aggregate(std::span<const RatingRecord> ratings, GroupBy group_by,
                                      const Manifest* manifest = nullptr);

// Bins are left-closed and right-open, except the last, which is closed.
struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

enum class ReportComponent { kImageText, kImageAudio, kInc };

std::string_view component_name(ReportComponent c);
ReportComponent component_from_name(std::string_view name);

/// Equal-width bins over the component's range: [0, 1] for distances,
/// [-1, 2] for inc.
Histogram inconsistency_histogram(std::span<const InconsistencyReport> reports,
                                  ReportComponent component, std::size_t bins);

enum class Relation { kRelated, kUnrelated };

std::string_view relation_name(Relation r);

struct FrameAudioPair {
  std::string frame_id;
  std::string audio_id;

  friend auto operator<=>(const FrameAudioPair&, const FrameAudioPair&) = default;
};

struct PairStats {
  Relation audio_relation = Relation::kRelated;
  Relation image_relation = Relation::kRelated;
  std::optional<double> mean;  // empty when n == 0
  std::optional<double> stddev;
  std::size_t n = 0;
};

/// For every (reference, target) combination: builds the SLERP audio target
/// from the reference pair and the target frame, and measures its distance to
/// the target audio. Image relation compares the scenes of the two frames,
/// audio relation the scenes of the two audios. Returns the four cells in the
/// order (unrelated, related), (unrelated, unrelated), (related, unrelated),
/// (related, related), audio relation first.
std::vector<PairStats> pair_stats(const EmbeddingStore& store,
                                  std::span<const FrameAudioPair> references,
                                  std::span<const FrameAudioPair> targets, const SlerpParams& p);

/// Sample Pearson correlation coefficient.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  std::string metric_name;
  double r = 0.0;
  std::size_t n = 0;
};

using MetricTable = std::map<FrameAudioPair, double>;

enum class RaterPooling {
  kAveragePerPair,  // one point per (frame, audio): mean MOS across raters
  kIndependent,     // one point per rating
};

/// Joins ratings to metric values per (frame, audio) pair and correlates
/// metric against MOS.
CorrelationReport correlate(std::span<const RatingRecord> ratings, const MetricTable& metrics,
                            std::string metric_name,
                            RaterPooling pooling = RaterPooling::kAveragePerPair);

}  // namespace sonify
