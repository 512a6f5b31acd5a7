#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>

#include "json.hpp"

namespace memoria::project {

// Annual single-year-of-age grid covering the projection window.
struct ProjectionGrid {
    int year_min = 2018;
    int year_max = 2100;
    int age_min = 13;
    int age_max = 100;

    int years() const { return year_max - year_min + 1; }
    int ages() const { return age_max - age_min + 1; }
    int year_index(int year) const;
    int age_index(int age) const;

    bool operator==(const ProjectionGrid&) const = default;
};

// values(i, j) = quantity at year (year_min + i), age (age_min + j).
struct Surface {
    ProjectionGrid grid;
    Eigen::MatrixXd values;
};

Surface make_surface(const ProjectionGrid& grid);

// Mortality surfaces live strictly inside (0,1); population and user
// surfaces are non-negative. Both must be finite everywhere.
void validate_rate_surface(const Surface& surface);
void validate_population_surface(const Surface& surface);

enum class ScenarioVariant { A, B };

std::string to_string(ScenarioVariant variant);

struct ScenarioConfig {
    ScenarioVariant variant = ScenarioVariant::A;
    double growth_factor = 1.13; // ignored by Scenario A
    int base_year = 2018;
};

// Scenario A: the base-year cohort ages forward under mortality attrition
// with no new users. g0 holds users by age on the grid's age axis; ages
// below 18 are treated as zero. The last age row is an open-ended bucket:
// survivors reaching it stay and keep attriting there.
Surface extrapolate_scenario_a(const Eigen::VectorXd& g0, const Surface& mortality,
                               const ProjectionGrid& grid);

// Scenario B: cohorts grow by a constant factor each year, capped by the
// population surface cell-by-cell. New 18-year-old cohorts enter at the
// base-year level grown at the same rate (capped). No mortality attrition
// pre-cap; deaths are counted by expected_deaths against this surface.
Surface extrapolate_scenario_b(const Eigen::VectorXd& g0, const Surface& population,
                               const ScenarioConfig& config, const ProjectionGrid& grid);

// deaths(t) = sum_a mortality(t, a) * users(t, a), unit-width rectangle rule.
Eigen::VectorXd expected_deaths(const Surface& mortality, const Surface& users);

// Users still alive after the final projected year's mortality is applied.
double survivors_after(const Surface& mortality, const Surface& users);

struct CountryProjection {
    std::string country;
    ProjectionGrid grid;
    Eigen::VectorXd deaths_by_year;
    Eigen::VectorXd cumulative_dead; // prefix sums of deaths_by_year
    double total_2100 = 0.0;         // last cumulative entry
};

CountryProjection accumulate(std::string country, const ProjectionGrid& grid,
                             const Eigen::VectorXd& deaths_by_year);

// Matrix CSV: header row of ages, one row per year, first column the year.
void write_surface_csv(std::ostream& out, const Surface& surface);

nlohmann::json projection_to_json(const CountryProjection& projection);
CountryProjection projection_from_json(const nlohmann::json& doc);

} // namespace memoria::project
