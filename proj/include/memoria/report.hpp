#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "memoria/ingest.hpp"
#include "memoria/pipeline.hpp"
#include "memoria/project.hpp"

#include "json.hpp"

namespace memoria::report {

// One scenario's outcome for one country, plus its bootstrap standard error
// (0 when the bootstrap was not run).
struct CountryResult {
    ingest::CountryCode country;
    project::CountryProjection projection;
    double se = 0.0;
};

// Aggregate rows hold raw profile counts; the CSV writer renders them in
// millions with 4 decimal places.
struct AggregateRow {
    std::string group;
    double profiles = 0.0;
    double se = 0.0;
    double percentage = 0.0; // share of global_profiles, in percent
};

struct AggregateTable {
    std::vector<AggregateRow> rows; // descending by profiles
    // Sequential sum over the final row order, so the rows reproduce it
    // exactly; percentages are taken against it.
    double global_profiles = 0.0;
    double global_se = 0.0; // root-sum-of-squares over rows
};

// Continent partition: per-row totals are the exact sequential sums of the
// member countries, SEs combine as root-sum-of-squares.
AggregateTable aggregate_by_continent(const std::vector<CountryResult>& results);

// Top `count` countries by total plus a Rest of World remainder row (omitted
// when nothing remains).
AggregateTable top_countries_table(const std::vector<CountryResult>& results, int count);

void write_aggregate_csv(std::ostream& out, const AggregateTable& table);

enum class Grouping { country, continent };

// Rows (year, group, yearly_deaths, cumulative_dead) for every group plus a
// Global row, year-major, groups alphabetical within a year.
void timeseries_export(std::ostream& out, const std::vector<CountryResult>& results,
                       const project::CountryProjection& global, Grouping grouping);

struct HeatmapRecord {
    ingest::CountryCode country;
    bool included = false;
    double value = 0.0;                    // meaningful only when included
    std::optional<double> log_value;       // log10(value); absent when value is 0
    bool zero = false;                     // included with value exactly 0
    std::string exclusion_reason;          // filled for excluded countries
};

// One record per known country (the full metadata set), code-ordered.
// Countries absent from results are marked excluded; the reason comes from
// the exclusion lists when present.
std::vector<HeatmapRecord> heatmap_export(const std::vector<CountryResult>& results,
                                          const std::vector<pipeline::ExcludedCountry>& excluded,
                                          const ingest::CountryMeta& metadata);

void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapRecord>& records);

struct InputDigest {
    std::string path;
    std::uint64_t fnv1a64 = 0;
};

// Everything needed to reproduce a run bit-for-bit, plus a timestamp.
// The timestamp varies between runs, so golden comparisons cover the data
// artifacts, not this file.
struct RunManifest {
    std::string version;
    std::string generated_at; // UTC, ISO 8601
    std::uint64_t seed = 0;
    std::vector<InputDigest> inputs;
    nlohmann::json config; // flag-for-flag echo of the effective settings
};

std::string software_version();
nlohmann::json manifest_to_json(const RunManifest& manifest);

} // namespace memoria::report
