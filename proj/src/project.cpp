#include "memoria/project.hpp"

#include "memoria/csv.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace memoria::project {

int ProjectionGrid::year_index(int year) const {
    if (year < year_min || year > year_max)
        throw std::out_of_range("year " + std::to_string(year) + " outside the projection grid");
    return year - year_min;
}

int ProjectionGrid::age_index(int age) const {
    if (age < age_min || age > age_max)
        throw std::out_of_range("age " + std::to_string(age) + " outside the projection grid");
    return age - age_min;
}

Surface make_surface(const ProjectionGrid& grid) {
    return Surface{grid, Eigen::MatrixXd::Zero(grid.years(), grid.ages())};
}

namespace {

void check_shape(const Surface& surface, const char* what) {
    if (surface.values.rows() != surface.grid.years() ||
        surface.values.cols() != surface.grid.ages())
        throw std::invalid_argument(std::string(what) + " surface shape does not match its grid");
    if (!surface.values.allFinite())
        throw std::invalid_argument(std::string(what) + " surface contains non-finite values");
}

// g0 on the grid's age axis, with ages below 18 carrying no users.
Eigen::VectorXd adult_baseline(const Eigen::VectorXd& g0, const ProjectionGrid& grid) {
    if (g0.size() != grid.ages())
        throw std::invalid_argument("baseline curve length does not match the grid ages");
    if (!g0.allFinite() || g0.minCoeff() < 0.0)
        throw std::invalid_argument("baseline user counts must be finite and non-negative");
    Eigen::VectorXd adults = g0;
    for (int a = grid.age_min; a < 18 && a <= grid.age_max; ++a)
        adults(grid.age_index(a)) = 0.0;
    return adults;
}

} // namespace

void validate_rate_surface(const Surface& surface) {
    check_shape(surface, "mortality");
    if (surface.values.minCoeff() <= 0.0 || surface.values.maxCoeff() >= 1.0)
        throw std::invalid_argument("mortality rates must lie strictly in (0,1)");
}

void validate_population_surface(const Surface& surface) {
    check_shape(surface, "population");
    if (surface.values.minCoeff() < 0.0)
        throw std::invalid_argument("population counts must be non-negative");
}

std::string to_string(ScenarioVariant variant) {
    return variant == ScenarioVariant::A ? "A" : "B";
}

Surface extrapolate_scenario_a(const Eigen::VectorXd& g0, const Surface& mortality,
                               const ProjectionGrid& grid) {
    check_shape(mortality, "mortality");
    if (mortality.grid != grid)
        throw std::invalid_argument("mortality surface grid mismatch");
    Surface users = make_surface(grid);
    users.values.row(0) = adult_baseline(g0, grid).transpose();

    const int last = grid.ages() - 1;
    for (int t = 1; t < grid.years(); ++t) {
        for (int a = 1; a < last; ++a)
            users.values(t, a) =
                users.values(t - 1, a - 1) * (1.0 - mortality.values(t - 1, a - 1));
        // The top age is an open-ended bucket: survivors arriving from below
        // join survivors already there.
        users.values(t, last) =
            users.values(t - 1, last - 1) * (1.0 - mortality.values(t - 1, last - 1)) +
            users.values(t - 1, last) * (1.0 - mortality.values(t - 1, last));
    }
    return users;
}

Surface extrapolate_scenario_b(const Eigen::VectorXd& g0, const Surface& population,
                               const ScenarioConfig& config, const ProjectionGrid& grid) {
    check_shape(population, "population");
    if (population.grid != grid)
        throw std::invalid_argument("population surface grid mismatch");
    if (config.variant != ScenarioVariant::B)
        throw std::invalid_argument("scenario config variant must be B");
    if (!(config.growth_factor >= 1.0))
        throw std::invalid_argument("growth factor must be at least 1");

    const Eigen::VectorXd base = adult_baseline(g0, grid);
    const double gamma = config.growth_factor;
    Surface users = make_surface(grid);
    users.values.row(0) = base.transpose().cwiseMin(population.values.row(0));

    const int entry = grid.age_index(18);
    const int last = grid.ages() - 1;
    // New cohorts enter at the base-year 18-year-old level compounded by the
    // growth factor, before the population cap.
    double entry_level = base(entry);
    for (int t = 1; t < grid.years(); ++t) {
        entry_level *= gamma;
        users.values(t, entry) = std::min(population.values(t, entry), entry_level);
        for (int a = 1; a < last; ++a) {
            if (a == entry)
                continue;
            users.values(t, a) =
                std::min(population.values(t, a), users.values(t - 1, a - 1) * gamma);
        }
        users.values(t, last) =
            std::min(population.values(t, last),
                     (users.values(t - 1, last - 1) + users.values(t - 1, last)) * gamma);
    }
    return users;
}

Eigen::VectorXd expected_deaths(const Surface& mortality, const Surface& users) {
    if (mortality.grid != users.grid)
        throw std::invalid_argument("mortality and user surfaces must share a grid");
    return (mortality.values.array() * users.values.array()).rowwise().sum();
}

double survivors_after(const Surface& mortality, const Surface& users) {
    if (mortality.grid != users.grid)
        throw std::invalid_argument("mortality and user surfaces must share a grid");
    const Eigen::Index t = users.values.rows() - 1;
    return (users.values.row(t).array() * (1.0 - mortality.values.row(t).array())).sum();
}

CountryProjection accumulate(std::string country, const ProjectionGrid& grid,
                             const Eigen::VectorXd& deaths_by_year) {
    if (deaths_by_year.size() != grid.years())
        throw std::invalid_argument("deaths_by_year length does not match the grid years");
    CountryProjection projection;
    projection.country = std::move(country);
    projection.grid = grid;
    projection.deaths_by_year = deaths_by_year;
    projection.cumulative_dead.resize(deaths_by_year.size());
    double running = 0.0;
    for (Eigen::Index i = 0; i < deaths_by_year.size(); ++i) {
        running += deaths_by_year(i);
        projection.cumulative_dead(i) = running;
    }
    projection.total_2100 = running;
    return projection;
}

void write_surface_csv(std::ostream& out, const Surface& surface) {
    std::vector<std::string> header;
    header.push_back("year");
    for (int a = surface.grid.age_min; a <= surface.grid.age_max; ++a)
        header.push_back("age_" + std::to_string(a));
    csv::write_row(out, header);
    for (int t = 0; t < surface.grid.years(); ++t) {
        std::vector<std::string> row;
        row.push_back(std::to_string(surface.grid.year_min + t));
        for (int a = 0; a < surface.grid.ages(); ++a)
            row.push_back(csv::format_double(surface.values(t, a)));
        csv::write_row(out, row);
    }
}

nlohmann::json projection_to_json(const CountryProjection& projection) {
    nlohmann::json doc;
    doc["country"] = projection.country;
    doc["year_min"] = projection.grid.year_min;
    doc["year_max"] = projection.grid.year_max;
    doc["age_min"] = projection.grid.age_min;
    doc["age_max"] = projection.grid.age_max;
    doc["deaths_by_year"] = nlohmann::json::array();
    doc["cumulative_dead"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < projection.deaths_by_year.size(); ++i) {
        doc["deaths_by_year"].push_back(projection.deaths_by_year(i));
        doc["cumulative_dead"].push_back(projection.cumulative_dead(i));
    }
    doc["total_2100"] = projection.total_2100;
    return doc;
}

CountryProjection projection_from_json(const nlohmann::json& doc) {
    CountryProjection projection;
    projection.country = doc.at("country").get<std::string>();
    projection.grid.year_min = doc.at("year_min").get<int>();
    projection.grid.year_max = doc.at("year_max").get<int>();
    projection.grid.age_min = doc.at("age_min").get<int>();
    projection.grid.age_max = doc.at("age_max").get<int>();
    const auto& deaths = doc.at("deaths_by_year");
    const auto& cumulative = doc.at("cumulative_dead");
    if (deaths.size() != cumulative.size())
        throw std::invalid_argument("projection document: series length mismatch");
    projection.deaths_by_year.resize(static_cast<Eigen::Index>(deaths.size()));
    projection.cumulative_dead.resize(static_cast<Eigen::Index>(cumulative.size()));
    for (std::size_t i = 0; i < deaths.size(); ++i) {
        projection.deaths_by_year(static_cast<Eigen::Index>(i)) = deaths[i].get<double>();
        projection.cumulative_dead(static_cast<Eigen::Index>(i)) = cumulative[i].get<double>();
    }
    projection.total_2100 = doc.at("total_2100").get<double>();
    return projection;
}

} // namespace memoria::project
