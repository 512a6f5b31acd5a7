#include "memoria/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>

#include "memoria/csv.hpp"

namespace memoria::report {

namespace {

constexpr double kMillion = 1e6;

void finalize_table(AggregateTable& table) {
    std::sort(table.rows.begin(), table.rows.end(),
              [](const AggregateRow& a, const AggregateRow& b) {
                  if (a.profiles != b.profiles)
                      return a.profiles > b.profiles;
                  return a.group < b.group;
              });
    table.global_profiles = 0.0;
    double ss = 0.0;
    for (const AggregateRow& row : table.rows) {
        table.global_profiles += row.profiles;
        ss += row.se * row.se;
    }
    table.global_se = std::sqrt(ss);
    for (AggregateRow& row : table.rows)
        row.percentage =
            table.global_profiles > 0.0 ? 100.0 * (row.profiles / table.global_profiles) : 0.0;
}

// The remainder row stays last: it is an aggregate, not a ranked entry.
void finalize_table_keeping_last(AggregateTable& table) {
    AggregateRow rest = std::move(table.rows.back());
    table.rows.pop_back();
    finalize_table(table);
    table.global_profiles += rest.profiles;
    table.global_se = std::sqrt(table.global_se * table.global_se + rest.se * rest.se);
    table.rows.push_back(std::move(rest));
    for (AggregateRow& row : table.rows)
        row.percentage =
            table.global_profiles > 0.0 ? 100.0 * (row.profiles / table.global_profiles) : 0.0;
}

} // namespace

AggregateTable aggregate_by_continent(const std::vector<CountryResult>& results) {
    const ingest::CountryMeta& metadata = ingest::bundled_country_metadata();
    // Keyed by continent name; map order is irrelevant because member sums
    // accumulate in input order and rows are re-sorted afterwards.
    std::map<std::string, AggregateRow> by_continent;
    for (const CountryResult& result : results) {
        const auto it = metadata.find(result.country.code);
        if (it == metadata.end())
            throw std::invalid_argument("country " + result.country.code +
                                        " has no continent mapping");
        AggregateRow& row = by_continent[ingest::to_string(it->second.continent)];
        row.profiles += result.projection.total_2100;
        row.se = std::sqrt(row.se * row.se + result.se * result.se);
    }
    AggregateTable table;
    table.rows.reserve(by_continent.size());
    for (auto& [name, row] : by_continent) {
        row.group = name;
        table.rows.push_back(std::move(row));
    }
    finalize_table(table);
    return table;
}

AggregateTable top_countries_table(const std::vector<CountryResult>& results, int count) {
    if (count < 1)
        throw std::invalid_argument("top-country table needs count >= 1");

    std::vector<const CountryResult*> order;
    order.reserve(results.size());
    for (const CountryResult& result : results)
        order.push_back(&result);
    std::sort(order.begin(), order.end(), [](const CountryResult* a, const CountryResult* b) {
        if (a->projection.total_2100 != b->projection.total_2100)
            return a->projection.total_2100 > b->projection.total_2100;
        return a->country.code < b->country.code;
    });

    AggregateTable table;
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(count), order.size());
    for (std::size_t i = 0; i < top; ++i) {
        AggregateRow row;
        row.group = order[i]->country.name;
        row.profiles = order[i]->projection.total_2100;
        row.se = order[i]->se;
        table.rows.push_back(std::move(row));
    }
    if (top < order.size()) {
        AggregateRow rest;
        rest.group = "Rest of World";
        double ss = 0.0;
        for (std::size_t i = top; i < order.size(); ++i) {
            rest.profiles += order[i]->projection.total_2100;
            ss += order[i]->se * order[i]->se;
        }
        rest.se = std::sqrt(ss);
        table.rows.push_back(std::move(rest));
        finalize_table_keeping_last(table);
    } else {
        finalize_table(table);
    }
    return table;
}

void write_aggregate_csv(std::ostream& out, const AggregateTable& table) {
    csv::write_row(out, {"group", "profiles_millions", "se_millions", "percentage"});
    for (const AggregateRow& row : table.rows)
        csv::write_row(out, {row.group, csv::format_fixed(row.profiles / kMillion, 4),
                             csv::format_fixed(row.se / kMillion, 4),
                             csv::format_fixed(row.percentage, 4)});
    csv::write_row(out, {"Global", csv::format_fixed(table.global_profiles / kMillion, 4),
                         csv::format_fixed(table.global_se / kMillion, 4),
                         csv::format_fixed(table.rows.empty() ? 0.0 : 100.0, 4)});
}

void timeseries_export(std::ostream& out, const std::vector<CountryResult>& results,
                       const project::CountryProjection& global, Grouping grouping) {
    const Eigen::Index years = global.deaths_by_year.size();
    // Group label -> (yearly, cumulative); map iteration gives alphabetical
    // group order within each year.
    std::map<std::string, std::pair<Eigen::VectorXd, Eigen::VectorXd>> series;
    for (const CountryResult& result : results) {
        if (result.projection.deaths_by_year.size() != years)
            throw std::invalid_argument("projection grids disagree across countries");
        const std::string label = grouping == Grouping::country
                                      ? result.country.name
                                      : ingest::to_string(result.country.continent);
        auto [it, inserted] = series.try_emplace(
            label, Eigen::VectorXd::Zero(years), Eigen::VectorXd::Zero(years));
        it->second.first += result.projection.deaths_by_year;
        it->second.second += result.projection.cumulative_dead;
    }

    csv::write_row(out, {"year", "group", "yearly_deaths", "cumulative_dead"});
    for (Eigen::Index t = 0; t < years; ++t) {
        const std::string year = std::to_string(global.grid.year_min + static_cast<int>(t));
        csv::write_row(out, {year, "Global", csv::format_double(global.deaths_by_year(t)),
                             csv::format_double(global.cumulative_dead(t))});
        for (const auto& [label, pair] : series)
            csv::write_row(out, {year, label, csv::format_double(pair.first(t)),
                                 csv::format_double(pair.second(t))});
    }
}

std::vector<HeatmapRecord> heatmap_export(const std::vector<CountryResult>& results,
                                          const std::vector<pipeline::ExcludedCountry>& excluded,
                                          const ingest::CountryMeta& metadata) {
    std::map<std::string, const CountryResult*> by_code;
    for (const CountryResult& result : results)
        by_code[result.country.code] = &result;
    std::map<std::string, const std::string*> reasons;
    for (const pipeline::ExcludedCountry& entry : excluded)
        reasons.emplace(entry.code, &entry.reason);

    std::vector<HeatmapRecord> records;
    records.reserve(metadata.size());
    for (const auto& [code, country] : metadata) {
        HeatmapRecord record;
        record.country = country;
        if (const auto it = by_code.find(code); it != by_code.end()) {
            record.included = true;
            record.value = it->second->projection.total_2100;
            if (record.value > 0.0)
                record.log_value = std::log10(record.value);
            else
                record.zero = true;
        } else if (const auto reason = reasons.find(code); reason != reasons.end()) {
            record.exclusion_reason = *reason->second;
        } else {
            record.exclusion_reason = "no input data";
        }
        records.push_back(std::move(record));
    }
    return records;
}

void write_heatmap_csv(std::ostream& out, const std::vector<HeatmapRecord>& records) {
    csv::write_row(out, {"country_code", "country_name", "continent", "value", "log10_value",
                         "included", "zero", "reason"});
    for (const HeatmapRecord& record : records) {
        csv::write_row(out,
                       {record.country.code, record.country.name,
                        ingest::to_string(record.country.continent),
                        record.included ? csv::format_double(record.value) : std::string{},
                        record.log_value ? csv::format_double(*record.log_value) : std::string{},
                        record.included ? "true" : "false", record.zero ? "true" : "false",
                        record.exclusion_reason});
    }
}

std::string software_version() {
#ifdef MEMORIA_VERSION
    return MEMORIA_VERSION;
#else
    return "0.0.0";
#endif
}

nlohmann::json manifest_to_json(const RunManifest& manifest) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const InputDigest& input : manifest.inputs) {
        char digest[17];
        std::snprintf(digest, sizeof digest, "%016llx",
                      static_cast<unsigned long long>(input.fnv1a64));
        inputs.push_back({{"path", input.path}, {"fnv1a64", digest}});
    }
    return {{"version", manifest.version},
            {"generated_at", manifest.generated_at},
            {"seed", manifest.seed},
            {"inputs", std::move(inputs)},
            {"config", manifest.config}};
}

} // namespace memoria::report
