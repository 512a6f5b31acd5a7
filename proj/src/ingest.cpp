#include "memoria/ingest.hpp"

#include "memoria/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace memoria::ingest {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& raw, const char* what, int line) {
    const std::string s = trim(raw);
    int value = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw FormatError("line " + std::to_string(line) + ": cannot parse " + what +
                          " from '" + raw + "'");
    return value;
}

double parse_double(const std::string& raw, const char* what, int line) {
    const std::string s = trim(raw);
    double value = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(value))
        throw FormatError("line " + std::to_string(line) + ": cannot parse " + what +
                          " from '" + raw + "'");
    return value;
}

// Maps required column names to their positions in the header row.
std::vector<std::size_t> resolve_header(const std::vector<std::string>& header,
                                        const std::vector<std::string>& required,
                                        const char* stream_name) {
    std::vector<std::size_t> pos;
    pos.reserve(required.size());
    for (const auto& name : required) {
        const auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
            return trim(h) == name;
        });
        if (it == header.end())
            throw FormatError(std::string(stream_name) + ": missing column '" + name + "'");
        pos.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    return pos;
}

void warn(ParseReport* report, std::string message) {
    if (report) {
        ++report->rows_skipped;
        report->warnings.push_back(std::move(message));
    }
}

struct AudienceRow {
    std::string code;
    int age = 0;
    bool open_ended = false;
    double lower = 0.0;
    double upper = 0.0;
};

void parse_age_label(const std::string& raw, AudienceRow& row, int line) {
    const std::string s = trim(raw);
    if (s == "65+") {
        row.age = 65;
        row.open_ended = true;
        return;
    }
    row.age = parse_int(s, "age", line);
    row.open_ended = false;
    if (row.age < 18 || row.age > 64)
        throw ValidationError("line " + std::to_string(line) + ": age " + s +
                              " outside 18..64 (65+ is the only aggregate bucket)");
}

std::vector<AudienceSnapshot> assemble_snapshots(const std::vector<AudienceRow>& rows,
                                                 const CountryMeta& country_meta,
                                                 ParseReport* report) {
    std::map<std::string, AudienceSnapshot> by_code;
    std::set<std::pair<std::string, int>> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = "audience row " + std::to_string(i + 1) + " (" + row.code + ")";
        const auto meta = country_meta.find(row.code);
        if (meta == country_meta.end()) {
            warn(report, where + ": unknown country code, skipped");
            continue;
        }
        if (row.lower < 0.0)
            throw ValidationError(where + ": negative lower bound");
        if (row.upper < row.lower)
            throw ValidationError(where + ": upper bound below lower bound");
        if (!seen.insert({row.code, row.age}).second)
            throw ValidationError(where + ": duplicate age " + std::to_string(row.age));
        auto& snap = by_code[row.code];
        snap.country = meta->second;
        snap.entries.push_back({row.age, row.open_ended, row.lower, row.upper,
                                (row.lower + row.upper) / 2.0});
    }
    std::vector<AudienceSnapshot> out;
    out.reserve(by_code.size());
    for (auto& [code, snap] : by_code) {
        std::sort(snap.entries.begin(), snap.entries.end(),
                  [](const AudienceEntry& a, const AudienceEntry& b) {
                      return std::tie(a.age, a.open_ended) < std::tie(b.age, b.open_ended);
                  });
        out.push_back(std::move(snap));
    }
    return out;
}

} // namespace

const std::string& to_string(Continent c) {
    static const std::string names[] = {"Africa",        "Asia",    "Europe",
                                        "North America", "Oceania", "South America"};
    return names[static_cast<int>(c)];
}

Continent continent_from_string(const std::string& s) {
    static const std::pair<const char*, Continent> table[] = {
        {"Africa", Continent::Africa},
        {"Asia", Continent::Asia},
        {"Europe", Continent::Europe},
        {"North America", Continent::NorthAmerica},
        {"Oceania", Continent::Oceania},
        {"South America", Continent::SouthAmerica},
    };
    const std::string t = trim(s);
    for (const auto& [name, value] : table)
        if (t == name)
            return value;
    throw FormatError("unknown continent '" + s + "'");
}

CountryMeta load_country_metadata(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields))
        throw FormatError("country metadata: empty stream");
    const auto cols = resolve_header(fields, {"code", "name", "continent"}, "country metadata");
    CountryMeta meta;
    while (reader.next(fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty())
            continue;
        if (fields.size() <= std::max({cols[0], cols[1], cols[2]}))
            throw FormatError("country metadata line " + std::to_string(reader.line()) +
                              ": wrong field count");
        CountryCode cc;
        cc.code = trim(fields[cols[0]]);
        cc.name = trim(fields[cols[1]]);
        cc.continent = continent_from_string(fields[cols[2]]);
        if (cc.code.size() != 3)
            throw FormatError("country metadata line " + std::to_string(reader.line()) +
                              ": code '" + cc.code + "' is not alpha-3");
        if (!meta.emplace(cc.code, cc).second)
            throw ValidationError("country metadata: duplicate code " + cc.code);
    }
    return meta;
}

double AudienceSnapshot::total_midpoint() const {
    double total = 0.0;
    for (const auto& e : entries)
        total += e.midpoint;
    return total;
}

std::vector<DemographicTable> parse_demographic_table(std::istream& in,
                                                      const CountryMeta& country_meta,
                                                      double unit_scale,
                                                      ParseReport* report) {
    if (!(unit_scale > 0.0))
        throw std::invalid_argument("unit_scale must be positive");
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields))
        throw FormatError("demographic table: empty stream");
    const auto cols = resolve_header(
        fields, {"country_code", "year_bin", "age_bin", "deaths", "population"},
        "demographic table");
    const std::size_t max_col = *std::max_element(cols.begin(), cols.end());

    std::map<std::string, DemographicTable> by_code;
    std::set<std::tuple<std::string, int, int>> seen;
    while (reader.next(fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty())
            continue;
        if (report)
            ++report->rows_read;
        const int line = reader.line();
        if (fields.size() <= max_col) {
            warn(report, "line " + std::to_string(line) + ": wrong field count, skipped");
            continue;
        }
        const std::string code = trim(fields[cols[0]]);
        const auto meta = country_meta.find(code);
        if (meta == country_meta.end()) {
            warn(report, "line " + std::to_string(line) + ": unknown country code '" + code +
                             "', skipped");
            continue;
        }
        DemographicRecord rec;
        try {
            rec.year_bin_start = parse_int(fields[cols[1]], "year_bin", line);
            rec.age_bin_start = parse_int(fields[cols[2]], "age_bin", line);
            rec.deaths = parse_double(fields[cols[3]], "deaths", line) * unit_scale;
            rec.population = parse_double(fields[cols[4]], "population", line) * unit_scale;
        } catch (const FormatError& e) {
            warn(report, std::string(e.what()) + ", skipped");
            continue;
        }
        const std::string where = "line " + std::to_string(line) + " (" + code + ", " +
                                  std::to_string(rec.year_bin_start) + ", " +
                                  std::to_string(rec.age_bin_start) + ")";
        if (rec.deaths < 0.0)
            throw ValidationError(where + ": negative deaths");
        if (rec.population < 0.0)
            throw ValidationError(where + ": negative population");
        if (rec.population == 0.0 && rec.deaths > 0.0)
            throw ValidationError(where + ": deaths recorded with zero population");
        if (rec.year_bin_start < 2000 || rec.year_bin_start > 2100 || rec.age_bin_start < 0 ||
            rec.age_bin_start > 100) {
            warn(report, where + ": outside the 2000-2100 x 0-100 window, skipped");
            continue;
        }
        if (rec.population == 0.0) {
            warn(report, where + ": empty bin (zero population), skipped");
            continue;
        }
        if (!seen.insert({code, rec.year_bin_start, rec.age_bin_start}).second)
            throw ValidationError(where + ": duplicate (year_bin, age_bin)");
        auto& table = by_code[code];
        table.country = meta->second;
        table.records.push_back(rec);
    }

    std::vector<DemographicTable> out;
    out.reserve(by_code.size());
    for (auto& [code, table] : by_code) {
        std::sort(table.records.begin(), table.records.end(),
                  [](const DemographicRecord& a, const DemographicRecord& b) {
                      return std::tie(a.year_bin_start, a.age_bin_start) <
                             std::tie(b.year_bin_start, b.age_bin_start);
                  });
        out.push_back(std::move(table));
    }
    return out;
}

void serialize_demographic_tables(std::ostream& out,
                                  const std::vector<DemographicTable>& tables) {
    csv::write_row(out, {"country_code", "year_bin", "age_bin", "deaths", "population"});
    for (const auto& table : tables)
        for (const auto& rec : table.records)
            csv::write_row(out, {table.country.code, std::to_string(rec.year_bin_start),
                                 std::to_string(rec.age_bin_start), csv::format_double(rec.deaths),
                                 csv::format_double(rec.population)});
}

std::vector<AudienceSnapshot> parse_audience_snapshot(std::istream& in,
                                                      const CountryMeta& country_meta,
                                                      ParseReport* report) {
    std::string content(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        throw FormatError("audience snapshot: empty stream");

    std::vector<AudienceRow> rows;
    if (content[first] == '[') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(content);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("audience snapshot: bad JSON: ") + e.what());
        }
        int index = 0;
        for (const auto& item : doc) {
            ++index;
            if (report)
                ++report->rows_read;
            if (!item.is_object() || !item.contains("country_code") || !item.contains("age") ||
                !item.contains("lower") || !item.contains("upper"))
                throw FormatError("audience snapshot entry " + std::to_string(index) +
                                  ": expected {country_code, age, lower, upper}");
            AudienceRow row;
            row.code = item.at("country_code").get<std::string>();
            const auto& age = item.at("age");
            if (age.is_string())
                parse_age_label(age.get<std::string>(), row, index);
            else if (age.is_number_integer())
                parse_age_label(std::to_string(age.get<long long>()), row, index);
            else
                throw FormatError("audience snapshot entry " + std::to_string(index) +
                                  ": age must be an integer or '65+'");
            if (!item.at("lower").is_number() || !item.at("upper").is_number())
                throw FormatError("audience snapshot entry " + std::to_string(index) +
                                  ": bounds must be numbers");
            row.lower = item.at("lower").get<double>();
            row.upper = item.at("upper").get<double>();
            rows.push_back(std::move(row));
        }
    } else {
        std::istringstream stream(content);
        csv::Reader reader(stream);
        std::vector<std::string> fields;
        if (!reader.next(fields))
            throw FormatError("audience snapshot: empty stream");
        const auto cols =
            resolve_header(fields, {"country_code", "age", "lower", "upper"}, "audience snapshot");
        const std::size_t max_col = *std::max_element(cols.begin(), cols.end());
        while (reader.next(fields)) {
            if (fields.size() == 1 && trim(fields[0]).empty())
                continue;
            if (report)
                ++report->rows_read;
            const int line = reader.line();
            if (fields.size() <= max_col)
                throw FormatError("audience snapshot line " + std::to_string(line) +
                                  ": wrong field count");
            AudienceRow row;
            row.code = trim(fields[cols[0]]);
            parse_age_label(fields[cols[1]], row, line);
            row.lower = parse_double(fields[cols[2]], "lower", line);
            row.upper = parse_double(fields[cols[3]], "upper", line);
            rows.push_back(std::move(row));
        }
    }
    return assemble_snapshots(rows, country_meta, report);
}

void serialize_audience_snapshots(std::ostream& out,
                                  const std::vector<AudienceSnapshot>& snapshots) {
    csv::write_row(out, {"country_code", "age", "lower", "upper"});
    for (const auto& snap : snapshots)
        for (const auto& e : snap.entries)
            csv::write_row(out, {snap.country.code,
                                 e.open_ended ? std::string("65+") : std::to_string(e.age),
                                 csv::format_double(e.lower), csv::format_double(e.upper)});
}

std::vector<RateObservation> to_rate_observations(const DemographicTable& table, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 0.01)
        throw std::invalid_argument("epsilon must lie in (0, 0.01]");
    std::vector<RateObservation> obs;
    obs.reserve(table.records.size());
    for (const auto& rec : table.records) {
        const double width = static_cast<double>(rec.bin_width);
        const double rate = rec.deaths / (rec.population * width);
        obs.push_back({rec.year_bin_start + width / 2.0, rec.age_bin_start + width / 2.0,
                       std::clamp(rate, epsilon, 1.0 - epsilon), 1.0});
    }
    return obs;
}

std::vector<ValueObservation> to_population_observations(const DemographicTable& table) {
    std::vector<ValueObservation> obs;
    obs.reserve(table.records.size());
    for (const auto& rec : table.records) {
        const double width = static_cast<double>(rec.bin_width);
        obs.push_back({rec.year_bin_start + width / 2.0, rec.age_bin_start + width / 2.0,
                       rec.population / width, 1.0});
    }
    return obs;
}

std::vector<ValueObservation> to_audience_observations(const AudienceSnapshot& snapshot) {
    std::vector<ValueObservation> obs;
    obs.reserve(snapshot.entries.size());
    for (const auto& e : snapshot.entries) {
        const double year = static_cast<double>(snapshot.reference_year);
        if (e.open_ended)
            obs.push_back({year, 70.0, e.midpoint, 0.5});
        else
            obs.push_back({year, static_cast<double>(e.age), e.midpoint, 1.0});
    }
    return obs;
}

FilterResult filter_countries(const std::vector<AudienceSnapshot>& snapshots, double min_users) {
    if (min_users < 0.0)
        throw std::invalid_argument("min_users must be non-negative");
    FilterResult result;
    for (const auto& snap : snapshots) {
        const double total = snap.total_midpoint();
        if (total < min_users)
            result.excluded.emplace_back(snap.country.code, total);
        else
            result.kept.push_back(snap);
    }
    return result;
}

} // namespace memoria::ingest
