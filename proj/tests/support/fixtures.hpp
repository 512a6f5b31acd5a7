#pragma once

#include "memoria/ingest.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>

namespace testsupport {

inline memoria::ingest::CountryCode make_country(std::string code, std::string name,
                                                 memoria::ingest::Continent continent) {
    return memoria::ingest::CountryCode{std::move(code), std::move(name), continent};
}

// Binned table whose rate observations reproduce rate_fn exactly at the bin
// midpoints: deaths are derived from the midpoint rate and population.
// pop_fn gives the per-single-year-of-age count, so population observations
// reproduce it exactly as well. Year and age bins share one width.
inline memoria::ingest::DemographicTable
synth_demographics(memoria::ingest::CountryCode country, int year_start, int year_end,
                   int age_start, int age_end, int width,
                   const std::function<double(double, double)>& rate_fn,
                   const std::function<double(double, double)>& pop_fn) {
    memoria::ingest::DemographicTable table;
    table.country = std::move(country);
    for (int year = year_start; year <= year_end; year += width)
        for (int age = age_start; age <= age_end; age += width) {
            const double mid_year = year + width / 2.0;
            const double mid_age = age + width / 2.0;
            memoria::ingest::DemographicRecord rec;
            rec.year_bin_start = year;
            rec.age_bin_start = age;
            rec.bin_width = width;
            rec.population = pop_fn(mid_year, mid_age) * width;
            rec.deaths = rate_fn(mid_year, mid_age) * rec.population * width;
            table.records.push_back(rec);
        }
    return table;
}

// Single-year audience entries for ages 18..64 plus the open-ended 65+
// bucket, midpoints from midpoint_fn (the bucket uses midpoint_fn(70)).
inline memoria::ingest::AudienceSnapshot
synth_audience(memoria::ingest::CountryCode country,
               const std::function<double(double)>& midpoint_fn) {
    memoria::ingest::AudienceSnapshot snapshot;
    snapshot.country = std::move(country);
    snapshot.reference_year = 2018;
    for (int age = 18; age <= 64; ++age) {
        const double mid = midpoint_fn(age);
        snapshot.entries.push_back({age, false, 0.85 * mid, 1.15 * mid, mid});
    }
    const double bucket = midpoint_fn(70.0);
    snapshot.entries.push_back({65, true, 0.85 * bucket, 1.15 * bucket, bucket});
    return snapshot;
}

// Smooth mortality rising in age, improving slowly in time.
inline double smooth_rate(double year, double age) {
    return 5e-4 * std::exp(0.055 * age) * std::exp(-0.004 * (year - 1950.0)) /
           (1.0 + 5e-4 * std::exp(0.055 * age));
}

// Smooth population hump by age with a mild secular trend.
inline double smooth_population(double year, double age) {
    const double shape = std::exp(-0.5 * std::pow((age - 32.0) / 28.0, 2.0));
    return 9e7 * shape * (1.0 + 0.002 * (year - 1950.0));
}

// Audience curve peaking near age 25 at 17.5 million.
// Young-skewed audience curve: ~17.5M at the age-25 peak with a steep
// old-age falloff, so usage is already negligible near the top of the range.
inline double india_like_audience(double age) {
    return 17.5e6 * std::exp(-0.5 * std::pow((age - 25.0) / 12.0, 2.0));
}

} // namespace testsupport
