#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace memoria::ingest {

// Input is syntactically unusable (bad header, wrong field count, unparseable
// numbers where the format demands them).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input parsed but violates a data invariant (negative counts, inverted
// bounds, duplicate bins). The message names the offending row.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Continent {
    Africa,
    Asia,
    Europe,
    NorthAmerica,
    Oceania,
    SouthAmerica,
};

const std::string& to_string(Continent c);
Continent continent_from_string(const std::string& s);

struct CountryCode {
    std::string code; // ISO-3166 alpha-3
    std::string name;
    Continent continent = Continent::Africa;

    bool operator==(const CountryCode&) const = default;
};

// Keyed by alpha-3 code.
using CountryMeta = std::map<std::string, CountryCode>;

// Parses a code,name,continent CSV with header.
CountryMeta load_country_metadata(std::istream& in);

// Compiled-in copy of data/country_continents.csv.
const CountryMeta& bundled_country_metadata();

struct DemographicRecord {
    int year_bin_start = 0;
    int age_bin_start = 0;
    int bin_width = 5;
    double deaths = 0.0;
    double population = 0.0;

    bool operator==(const DemographicRecord&) const = default;
};

struct DemographicTable {
    CountryCode country;
    std::vector<DemographicRecord> records; // sorted by (year, age)

    bool operator==(const DemographicTable&) const = default;
};

struct AudienceEntry {
    int age = 0;            // 18..64, or 65 for the open-ended bucket
    bool open_ended = false; // true for the "65+" bucket
    double lower = 0.0;
    double upper = 0.0;
    double midpoint = 0.0;

    bool operator==(const AudienceEntry&) const = default;
};

struct AudienceSnapshot {
    CountryCode country;
    int reference_year = 2018;
    std::vector<AudienceEntry> entries; // sorted by age, open bucket last

    double total_midpoint() const;

    bool operator==(const AudienceSnapshot&) const = default;
};

// Rows that could not be used but did not abort the parse.
struct ParseReport {
    int rows_read = 0;
    int rows_skipped = 0;
    std::vector<std::string> warnings;
};

// CSV with header country_code,year_bin,age_bin,deaths,population. Counts are
// multiplied by unit_scale (1 for units, 1000 for thousands). Rows for codes
// absent from country_meta are skipped with a warning; syntactically broken
// rows likewise. Semantic violations (negative counts, deaths without
// population, duplicate bins) abort with ValidationError.
std::vector<DemographicTable> parse_demographic_table(std::istream& in,
                                                      const CountryMeta& country_meta,
                                                      double unit_scale = 1.0,
                                                      ParseReport* report = nullptr);

void serialize_demographic_tables(std::ostream& out,
                                  const std::vector<DemographicTable>& tables);

// CSV with header country_code,age,lower,upper, or a JSON array of objects
// with those keys; the format is sniffed from the first non-space character.
// age is an integer in 18..64 or the literal "65+".
std::vector<AudienceSnapshot> parse_audience_snapshot(std::istream& in,
                                                      const CountryMeta& country_meta,
                                                      ParseReport* report = nullptr);

// CSV form only; round-trips through parse_audience_snapshot.
void serialize_audience_snapshots(std::ostream& out,
                                  const std::vector<AudienceSnapshot>& snapshots);

struct RateObservation {
    double year = 0.0; // bin midpoint
    double age = 0.0;  // bin midpoint
    double rate = 0.0; // in [epsilon, 1-epsilon]
    double weight = 1.0;
};

struct ValueObservation {
    double year = 0.0;
    double age = 0.0;
    double value = 0.0;
    double weight = 1.0;
};

// rate = deaths / (population * bin_width years), clamped into
// [epsilon, 1-epsilon]; coordinates at bin midpoints. epsilon in (0, 0.01].
std::vector<RateObservation> to_rate_observations(const DemographicTable& table,
                                                  double epsilon = 1e-6);

// Per-single-year-of-age population (bin count / bin_width) at bin midpoints.
std::vector<ValueObservation> to_population_observations(const DemographicTable& table);

// User counts by age at the snapshot reference year. The open-ended 65+
// bucket is anchored at age 70 with weight 0.5; single ages carry weight 1.
std::vector<ValueObservation> to_audience_observations(const AudienceSnapshot& snapshot);

struct FilterResult {
    std::vector<AudienceSnapshot> kept;
    std::vector<std::pair<std::string, double>> excluded; // code, total midpoint
};

// Drops countries whose summed midpoints fall below min_users.
FilterResult filter_countries(const std::vector<AudienceSnapshot>& snapshots,
                              double min_users);

} // namespace memoria::ingest
