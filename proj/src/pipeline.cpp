#include "memoria/pipeline.hpp"

#include "memoria/csv.hpp"
#include "memoria/numerics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

namespace memoria::pipeline {

namespace {

constexpr int kBasisDimension = 10;

SmoothProblem make_mortality_problem(const ingest::DemographicTable& demo, double epsilon) {
    const auto obs = ingest::to_rate_observations(demo, epsilon);
    std::vector<double> ages, times;
    ages.reserve(obs.size());
    times.reserve(obs.size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(obs.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        ages.push_back(obs[i].age);
        times.push_back(obs[i].year);
        y(static_cast<Eigen::Index>(i)) = obs[i].rate;
        w(static_cast<Eigen::Index>(i)) = obs[i].weight;
    }
    SmoothProblem problem;
    problem.design = smooth::build_tensor_design(ages, times, kBasisDimension, kBasisDimension);
    problem.response = std::move(y);
    problem.weights = std::move(w);
    problem.family.kind = smooth::FamilyKind::BetaLogit;
    problem.bootstrap_rows = static_cast<int>(obs.size());
    return problem;
}

SmoothProblem make_population_problem(const ingest::DemographicTable& demo) {
    const auto obs = ingest::to_population_observations(demo);
    std::vector<double> ages, times;
    ages.reserve(obs.size());
    times.reserve(obs.size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(obs.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        ages.push_back(obs[i].age);
        times.push_back(obs[i].year);
        y(static_cast<Eigen::Index>(i)) = obs[i].value;
        w(static_cast<Eigen::Index>(i)) = obs[i].weight;
    }
    SmoothProblem problem;
    problem.design = smooth::build_tensor_design(ages, times, kBasisDimension, kBasisDimension);
    problem.response = std::move(y);
    problem.weights = std::move(w);
    problem.family.kind = smooth::FamilyKind::GaussianLog;
    problem.bootstrap_rows = static_cast<int>(obs.size());
    return problem;
}

SmoothProblem make_audience_problem(const ingest::AudienceSnapshot& audience) {
    const auto obs = ingest::to_audience_observations(audience);
    const Eigen::Index n = static_cast<Eigen::Index>(obs.size());
    std::vector<double> ages;
    ages.reserve(obs.size() + 1);
    Eigen::VectorXd y(n + 1), w(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        ages.push_back(obs[static_cast<std::size_t>(i)].age);
        y(i) = obs[static_cast<std::size_t>(i)].value;
        w(i) = obs[static_cast<std::size_t>(i)].weight;
    }
    // Zero users at age 100 anchors the curve's old-age tail; the row is a
    // modeling device, so reweighting never touches it.
    ages.push_back(100.0);
    y(n) = 0.0;
    w(n) = 1.0;
    SmoothProblem problem;
    problem.design = smooth::build_univariate_design(ages, kBasisDimension);
    problem.response = std::move(y);
    problem.weights = std::move(w);
    problem.family.kind = smooth::FamilyKind::NegativeBinomialLog;
    problem.bootstrap_rows = static_cast<int>(obs.size());
    return problem;
}

} // namespace

CountryProblems build_country_problems(const ingest::DemographicTable& demo,
                                       const ingest::AudienceSnapshot& audience,
                                       double epsilon) {
    if (demo.country.code != audience.country.code)
        throw std::invalid_argument("demographic table is for " + demo.country.code +
                                    " but audience snapshot is for " + audience.country.code);
    CountryProblems problems;
    problems.country = audience.country;
    problems.mortality = make_mortality_problem(demo, epsilon);
    problems.audience = make_audience_problem(audience);
    problems.population = make_population_problem(demo);
    return problems;
}

CountryModels fit_country_models(const CountryProblems& problems,
                                 const smooth::FitOptions& mortality_options,
                                 const smooth::FitOptions& audience_options,
                                 const smooth::FitOptions& population_options) {
    CountryModels models;
    models.mortality = smooth::fit(problems.mortality.design, problems.mortality.response,
                                   problems.mortality.weights, problems.mortality.family,
                                   mortality_options);
    models.audience = smooth::fit(problems.audience.design, problems.audience.response,
                                  problems.audience.weights, problems.audience.family,
                                  audience_options);
    models.population = smooth::fit(problems.population.design, problems.population.response,
                                    problems.population.weights, problems.population.family,
                                    population_options);
    return models;
}

CountryModels fit_country_models(const CountryProblems& problems,
                                 const smooth::FitOptions& options) {
    return fit_country_models(problems, options, options, options);
}

GridEvaluator make_grid_evaluator(const CountryProblems& problems,
                                  const project::ProjectionGrid& grid) {
    GridEvaluator evaluator;
    evaluator.grid = grid;
    std::vector<std::pair<double, double>> cells;
    cells.reserve(static_cast<std::size_t>(grid.years()) * static_cast<std::size_t>(grid.ages()));
    for (int t = 0; t < grid.years(); ++t)
        for (int a = 0; a < grid.ages(); ++a)
            cells.emplace_back(grid.age_min + a, grid.year_min + t);
    evaluator.mortality_rows = problems.mortality.design.layout.matrix(cells);
    evaluator.population_rows = problems.population.design.layout.matrix(cells);

    std::vector<std::pair<double, double>> age_points;
    age_points.reserve(static_cast<std::size_t>(grid.ages()));
    for (int a = 0; a < grid.ages(); ++a)
        age_points.emplace_back(grid.age_min + a, grid.year_min);
    evaluator.audience_rows = problems.audience.design.layout.matrix(age_points);
    return evaluator;
}

CountrySurfaces evaluate_surfaces(const CountryModels& models, const GridEvaluator& evaluator,
                                  double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 0.01))
        throw std::invalid_argument("epsilon must lie in (0, 0.01]");
    const project::ProjectionGrid& grid = evaluator.grid;
    CountrySurfaces surfaces{project::make_surface(grid), Eigen::VectorXd::Zero(grid.ages()),
                             project::make_surface(grid)};

    const Eigen::VectorXd mu_f = models.mortality.predict_rows(evaluator.mortality_rows);
    const Eigen::VectorXd mu_h = models.population.predict_rows(evaluator.population_rows);
    for (int t = 0; t < grid.years(); ++t)
        for (int a = 0; a < grid.ages(); ++a) {
            const Eigen::Index cell = static_cast<Eigen::Index>(t) * grid.ages() + a;
            surfaces.mortality.values(t, a) =
                std::clamp(mu_f(cell), epsilon, 1.0 - epsilon);
            surfaces.population.values(t, a) = mu_h(cell);
        }

    const Eigen::VectorXd mu_g = models.audience.predict_rows(evaluator.audience_rows);
    for (int a = 0; a < grid.ages(); ++a)
        surfaces.baseline(a) = grid.age_min + a >= 18 ? mu_g(a) : 0.0;

    project::validate_rate_surface(surfaces.mortality);
    project::validate_population_surface(surfaces.population);
    return surfaces;
}

CountryOutcome project_country(const ingest::CountryCode& country,
                               const CountrySurfaces& surfaces,
                               const ScenarioSettings& scenarios,
                               const project::ProjectionGrid& grid) {
    if (!scenarios.run_a && !scenarios.run_b)
        throw std::invalid_argument("at least one scenario must be enabled");
    CountryOutcome outcome;
    outcome.country = country;
    if (scenarios.run_a) {
        const project::Surface users =
            project::extrapolate_scenario_a(surfaces.baseline, surfaces.mortality, grid);
        outcome.scenario_a = project::accumulate(
            country.code, grid, project::expected_deaths(surfaces.mortality, users));
    }
    if (scenarios.run_b) {
        project::ScenarioConfig config{project::ScenarioVariant::B, scenarios.growth_factor,
                                       grid.year_min};
        const project::Surface users =
            project::extrapolate_scenario_b(surfaces.baseline, surfaces.population, config, grid);
        outcome.scenario_b = project::accumulate(
            country.code, grid, project::expected_deaths(surfaces.mortality, users));
    }
    return outcome;
}

PipelineResult run_pipeline(const std::vector<ingest::DemographicTable>& tables,
                            const std::vector<ingest::AudienceSnapshot>& snapshots,
                            const PipelineConfig& config) {
    if (!config.scenarios.run_a && !config.scenarios.run_b)
        throw std::invalid_argument("at least one scenario must be enabled");

    PipelineResult result;
    ingest::FilterResult filtered = ingest::filter_countries(snapshots, config.min_users);
    for (const auto& [code, total] : filtered.excluded)
        result.filtered.push_back({code, "audience total " + csv::format_double(total) +
                                             " below the minimum of " +
                                             csv::format_double(config.min_users)});

    std::map<std::string, const ingest::DemographicTable*> demo_by_code;
    for (const auto& table : tables)
        demo_by_code[table.country.code] = &table;

    struct WorkItem {
        const ingest::AudienceSnapshot* audience;
        const ingest::DemographicTable* demo;
    };
    std::vector<WorkItem> items;
    for (const auto& snapshot : filtered.kept) {
        const auto found = demo_by_code.find(snapshot.country.code);
        if (found == demo_by_code.end())
            result.unprojectable.push_back({snapshot.country.code, "no demographic records"});
        else
            items.push_back({&snapshot, found->second});
    }
    std::sort(items.begin(), items.end(), [](const WorkItem& a, const WorkItem& b) {
        return a.audience->country.code < b.audience->country.code;
    });

    std::set<std::string> snapshot_codes;
    for (const auto& snapshot : snapshots)
        snapshot_codes.insert(snapshot.country.code);
    for (const auto& table : tables)
        if (!snapshot_codes.count(table.country.code))
            result.warnings.push_back("demographic records without an audience snapshot: " +
                                      table.country.code);

    std::vector<std::optional<CountryOutcome>> outcomes(items.size());
    std::vector<std::string> errors(items.size());
    std::vector<std::vector<std::string>> notes(items.size());
    const unsigned threads =
        config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    parallel_for(items.size(), threads, [&](std::size_t i) {
        try {
            const CountryProblems problems =
                build_country_problems(*items[i].demo, *items[i].audience, config.epsilon);
            const CountryModels models = fit_country_models(problems, config.fit_options);
            const GridEvaluator evaluator = make_grid_evaluator(problems, config.grid);
            const CountrySurfaces surfaces = evaluate_surfaces(models, evaluator, config.epsilon);
            outcomes[i] = project_country(problems.country, surfaces, config.scenarios,
                                          config.grid);
            const std::string& code = problems.country.code;
            for (const auto& warning : models.mortality.warnings)
                notes[i].push_back(code + " mortality model: " + warning);
            for (const auto& warning : models.audience.warnings)
                notes[i].push_back(code + " audience model: " + warning);
            for (const auto& warning : models.population.warnings)
                notes[i].push_back(code + " population model: " + warning);
        } catch (const std::exception& error) {
            errors[i] = error.what();
        }
    });

    Eigen::VectorXd global_a = Eigen::VectorXd::Zero(config.grid.years());
    Eigen::VectorXd global_b = Eigen::VectorXd::Zero(config.grid.years());
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (auto& note : notes[i])
            result.warnings.push_back(std::move(note));
        if (!outcomes[i]) {
            result.unprojectable.push_back({items[i].audience->country.code, errors[i]});
            continue;
        }
        if (outcomes[i]->scenario_a)
            global_a += outcomes[i]->scenario_a->deaths_by_year;
        if (outcomes[i]->scenario_b)
            global_b += outcomes[i]->scenario_b->deaths_by_year;
        result.countries.push_back(std::move(*outcomes[i]));
    }
    if (result.countries.empty())
        throw std::runtime_error("no projectable countries after filtering and fitting");

    result.global.country =
        ingest::CountryCode{"GLOBAL", "Global", ingest::Continent::Africa};
    if (config.scenarios.run_a)
        result.global.scenario_a = project::accumulate("GLOBAL", config.grid, global_a);
    if (config.scenarios.run_b)
        result.global.scenario_b = project::accumulate("GLOBAL", config.grid, global_b);
    return result;
}

} // namespace memoria::pipeline
