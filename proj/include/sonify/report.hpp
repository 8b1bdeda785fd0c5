#pragma once

#include <filesystem>
#include <span>
#include <string_view>

#include "json.hpp"
#include "sonify/eval.hpp"
#include "sonify/metrics.hpp"
#include "sonify/retrieval.hpp"

namespace sonify::report {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// {"schema_version", "kind", "generated_at"?}; callers append their payload.
Json envelope(std::string_view kind, bool with_timestamp);

Json to_json(const RankedResult& r);
Json to_json(const InconsistencyReport& r);
Json to_json(const SonorizationPlan& plan);
Json to_json(const GroupStats& g);
Json to_json(const Histogram& h);
Json to_json(const PairStats& s);
Json to_json(const CorrelationReport& c);
Json to_json(const SlerpParams& p);

void write_json(const std::filesystem::path& path, const Json& doc);
Json read_json(const std::filesystem::path& path);

/// Collects (query_id, candidate_id) -> score from a "rank" report.
MetricTable metrics_from_rank_report(const Json& doc);

}  // namespace sonify::report
