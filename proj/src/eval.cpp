#include "sonify/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "sonify/error.hpp"

namespace sonify {
namespace {

[[noreturn]] void ratings_error(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParseError, source + ":" + std::to_string(line) + ": " + what);
}

// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (was_quoted) {
      return std::nullopt;  // text after a closing quote
    } else {
      field += c;
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find('\n') != std::string::npos || s.find('\r') != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "ratings fields cannot contain newlines");
  }
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments population_moments(std::span<const double> v) {
  double sum = 0.0;
  for (const double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  const auto days = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{t - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const auto y = num(0, 4), mo = num(5, 2), d = num(8, 2);
  const auto h = num(11, 2), mi = num(14, 2), s = num(17, 2);
  if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                        std::chrono::month{static_cast<unsigned>(*mo)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || *s > 59) return std::nullopt;
  return std::chrono::sys_days{ymd} + std::chrono::hours{*h} + std::chrono::minutes{*mi} +
         std::chrono::seconds{*s};
}

std::vector<RatingRecord> parse_ratings(std::istream& in, const std::string& source_name) {
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) ratings_error(source_name, 1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRatingsHeader) {
    ratings_error(source_name, line_no, "header must be '" + std::string(kRatingsHeader) + "'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (!fields) ratings_error(source_name, line_no, "malformed quoting");
    if (fields->size() != 5) {
      ratings_error(source_name, line_no,
                    "expected 5 fields, got " + std::to_string(fields->size()));
    }
    RatingRecord r;
    r.rater_id = (*fields)[0];
    r.frame_id = (*fields)[1];
    r.audio_id = (*fields)[2];
    if (r.rater_id.empty() || r.frame_id.empty() || r.audio_id.empty()) {
      ratings_error(source_name, line_no, "rater_id, frame_id and audio_id must be non-empty");
    }
    const auto& mos = (*fields)[3];
    if (mos.size() != 1 || mos[0] < '0' + kMinMos || mos[0] > '0' + kMaxMos) {
      ratings_error(source_name, line_no, "mos '" + mos + "' is not an integer in 1..5");
    }
    r.mos = mos[0] - '0';
    const auto ts = parse_timestamp((*fields)[4]);
    if (!ts) {
      ratings_error(source_name, line_no,
                    "timestamp '" + (*fields)[4] + "' is not ISO-8601 UTC (YYYY-MM-DDTHH:MM:SSZ)");
    }
    r.timestamp = *ts;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RatingRecord> read_ratings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open ratings file " + path.string());
  return parse_ratings(in, path.string());
}

std::string format_rating_row(const RatingRecord& r) {
  if (r.mos < kMinMos || r.mos > kMaxMos) {
    throw Error(ErrorCode::kInvalidMos, "mos " + std::to_string(r.mos) + " outside 1..5");
  }
  return csv_field(r.rater_id) + "," + csv_field(r.frame_id) + "," + csv_field(r.audio_id) + "," +
         std::to_string(r.mos) + "," + format_timestamp(r.timestamp);
}

void write_ratings(std::ostream& out, std::span<const RatingRecord> ratings) {
  out << kRatingsHeader << '\n';
  for (const auto& r : ratings) out << format_rating_row(r) << '\n';
}

void write_ratings(const std::filesystem::path& path, std::span<const RatingRecord> ratings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write ratings file " + path.string());
  write_ratings(out, ratings);
  if (!out) throw Error(ErrorCode::kIo, "failed writing ratings file " + path.string());
}

std::string_view group_by_name(GroupBy g) { return g == GroupBy::kScene ? "scene" : "pair"; }

GroupBy group_by_from_name(std::string_view name) {
  if (name == "scene") return GroupBy::kScene;
  if (name == "pair") return GroupBy::kPair;
  throw Error(ErrorCode::kInvalidArgument, "unknown grouping '" + std::string(name) + "' (scene|pair)");
}

std::string pair_label(std::string_view frame_id, std::string_view audio_id) {
  return std::string(frame_id) + "|" + std::string(audio_id);
}

std::vector<GroupStats> mos_aggregate(std::span<const RatingRecord> ratings, GroupBy group_by,
                                      const Manifest* manifest) {
  if (ratings.empty()) throw Error(ErrorCode::kEmptyRatings, "no ratings to aggregate");
  if (group_by == GroupBy::kScene && manifest == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "grouping by scene needs a manifest");
  }
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : ratings) {
    std::string key;
    if (group_by == GroupBy::kScene) {
      const auto* record = manifest->find(r.frame_id);
      if (!record) throw Error(ErrorCode::kUnknownFrame, "frame '" + r.frame_id + "' not in manifest");
      key = record->scene;
    } else {
      key = pair_label(r.frame_id, r.audio_id);
    }
    groups[key].push_back(static_cast<double>(r.mos));
  }
  std::vector<GroupStats> out;
  for (const auto& [label, values] : groups) {
    const auto m = population_moments(values);
    out.push_back({label, m.mean, m.stddev, values.size()});
  }
  return out;
}

Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "no values to bin");
  if (bins < 1) throw Error(ErrorCode::kInvalidArgument, "bins must be >= 1");
  if (!(hi > lo)) throw Error(ErrorCode::kInvalidArgument, "histogram range is empty");
  Histogram h;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) h.bin_edges.push_back(lo + width * static_cast<double>(i));
  h.bin_edges.push_back(hi);
  h.counts.assign(bins, 0);
  for (const double v : values) {
    if (std::isnan(v)) throw Error(ErrorCode::kInvalidArgument, "cannot bin NaN");
    const double clamped = std::clamp(v, lo, hi);
    auto bin = static_cast<std::size_t>(std::floor((clamped - lo) / width));
    bin = std::min(bin, bins - 1);
    ++h.counts[bin];
  }
  h.total = values.size();
  return h;
}

std::string_view component_name(ReportComponent c) {
  switch (c) {
    case ReportComponent::kImageText: return "d_image_text";
    case ReportComponent::kImageAudio: return "d_image_audio";
    case ReportComponent::kInc: return "inc";
  }
  return "inc";
}

ReportComponent component_from_name(std::string_view name) {
  if (name == "d_image_text") return ReportComponent::kImageText;
  if (name == "d_image_audio") return ReportComponent::kImageAudio;
  if (name == "inc") return ReportComponent::kInc;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown component '" + std::string(name) + "' (d_image_text|d_image_audio|inc)");
}

Histogram inconsistency_histogram(std::span<const InconsistencyReport> reports,
                                  ReportComponent component, std::size_t bins) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "no inconsistency reports");
  std::vector<double> values;
  values.reserve(reports.size());
  for (const auto& r : reports) {
    switch (component) {
      case ReportComponent::kImageText: values.push_back(r.d_image_text); break;
      case ReportComponent::kImageAudio: values.push_back(r.d_image_audio); break;
      case ReportComponent::kInc: values.push_back(r.inc); break;
    }
  }
  if (component == ReportComponent::kInc) return histogram(values, -1.0, 2.0, bins);
  return histogram(values, 0.0, 1.0, bins);
}

std::string_view relation_name(Relation r) {
  return r == Relation::kRelated ? "related" : "unrelated";
}

std::vector<PairStats> pair_stats(const EmbeddingStore& store,
                                  std::span<const FrameAudioPair> references,
                                  std::span<const FrameAudioPair> targets, const SlerpParams& p) {
  validate(p);
  constexpr std::pair<Relation, Relation> kCells[] = {
      {Relation::kUnrelated, Relation::kRelated},
      {Relation::kUnrelated, Relation::kUnrelated},
      {Relation::kRelated, Relation::kUnrelated},
      {Relation::kRelated, Relation::kRelated},
  };
  auto cell_of = [](Relation audio, Relation image) -> std::size_t {
    if (audio == Relation::kUnrelated) return image == Relation::kRelated ? 0 : 1;
    return image == Relation::kUnrelated ? 2 : 3;
  };
  std::vector<double> samples[4];

  for (const auto& ref : references) {
    const auto& ref_frame = store.at(ref.frame_id);
    const auto& ref_audio = store.at(ref.audio_id);
    const auto& ref_frame_scene = store.scene_of(ref.frame_id);
    const auto& ref_audio_scene = store.scene_of(ref.audio_id);
    std::unordered_map<std::string, Embedding> audio_targets;
    for (const auto& tgt : targets) {
      const auto& tgt_frame = store.at(tgt.frame_id);
      const auto& tgt_audio = store.at(tgt.audio_id);
      auto it = audio_targets.find(tgt.frame_id);
      if (it == audio_targets.end()) {
        it = audio_targets
                 .emplace(tgt.frame_id, slerp_audio_target(ref_audio, ref_frame, tgt_frame, p))
                 .first;
      }
      const auto image_rel = store.scene_of(tgt.frame_id) == ref_frame_scene ? Relation::kRelated
                                                                             : Relation::kUnrelated;
      const auto audio_rel = store.scene_of(tgt.audio_id) == ref_audio_scene ? Relation::kRelated
                                                                             : Relation::kUnrelated;
      samples[cell_of(audio_rel, image_rel)].push_back(slerp_distance(tgt_audio, it->second, p));
    }
  }

  std::vector<PairStats> out;
  for (std::size_t c = 0; c < 4; ++c) {
    PairStats s;
    s.audio_relation = kCells[c].first;
    s.image_relation = kCells[c].second;
    s.n = samples[c].size();
    if (s.n > 0) {
      const auto m = population_moments(samples[c]);
      s.mean = m.mean;
      s.stddev = m.stddev;
    }
    out.push_back(s);
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "series lengths differ: " + std::to_string(x.size()) +
                                                " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw Error(ErrorCode::kDegenerateSeries, "need at least two points");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) {
    throw Error(ErrorCode::kDegenerateSeries, "a series has zero variance");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error(ErrorCode::kDegenerateSeries, "a series has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlate(std::span<const RatingRecord> ratings, const MetricTable& metrics,
                            std::string metric_name, RaterPooling pooling) {
  std::vector<double> xs;
  std::vector<double> ys;
  auto metric_for = [&](const FrameAudioPair& pair) {
    const auto it = metrics.find(pair);
    if (it == metrics.end()) {
      throw Error(ErrorCode::kMissingMetric,
                  "no metric value for pair (" + pair.frame_id + ", " + pair.audio_id + ")");
    }
    return it->second;
  };

  if (pooling == RaterPooling::kIndependent) {
    for (const auto& r : ratings) {
      xs.push_back(metric_for({r.frame_id, r.audio_id}));
      ys.push_back(static_cast<double>(r.mos));
    }
  } else {
    std::map<FrameAudioPair, std::pair<double, std::size_t>> pooled;
    for (const auto& r : ratings) {
      auto& slot = pooled[{r.frame_id, r.audio_id}];
      slot.first += static_cast<double>(r.mos);
      ++slot.second;
    }
    for (const auto& [pair, acc] : pooled) {
      xs.push_back(metric_for(pair));
      ys.push_back(acc.first / static_cast<double>(acc.second));
    }
  }
  if (xs.size() < 2) {
    throw Error(ErrorCode::kDegenerateSeries,
                "need at least two joined points, got " + std::to_string(xs.size()));
  }
  CorrelationReport report;
  report.metric_name = std::move(metric_name);
  report.r = pearson(xs, ys);
  report.n = xs.size();
  return report;
}

}  // namespace sonify
