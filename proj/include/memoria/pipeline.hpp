#pragma once

#include "memoria/fit.hpp"
#include "memoria/ingest.hpp"
#include "memoria/project.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace memoria::pipeline {

// One model's fitting inputs. Weights are the full-data replication weights
// (open-ended audience bucket 0.5, everything else 1). The first
// bootstrap_rows rows take part in posterior reweighting; rows after them
// (the age-100 audience anchor) keep their base weight in every replicate.
struct SmoothProblem {
    smooth::SmoothDesign design;
    Eigen::VectorXd response;
    Eigen::VectorXd weights;
    smooth::Family family;
    int bootstrap_rows = 0;
};

struct CountryProblems {
    ingest::CountryCode country;
    SmoothProblem mortality;  // beta-logit tensor over demographic rate bins
    SmoothProblem audience;   // negative-binomial age curve, zero anchored at 100
    SmoothProblem population; // Gaussian-log tensor over population bins
};

// epsilon is the band the mortality rates were clamped into on ingest; the
// fitted surface is clamped into the same band before projection.
CountryProblems build_country_problems(const ingest::DemographicTable& demo,
                                       const ingest::AudienceSnapshot& audience,
                                       double epsilon = 1e-6);

struct CountryModels {
    smooth::FittedSmoothModel mortality;
    smooth::FittedSmoothModel audience;
    smooth::FittedSmoothModel population;
};

// Fits the three models; per-model options allow warm starts and smoothing
// restarts when refitting under bootstrap weights.
CountryModels fit_country_models(const CountryProblems& problems,
                                 const smooth::FitOptions& mortality_options,
                                 const smooth::FitOptions& audience_options,
                                 const smooth::FitOptions& population_options);
CountryModels fit_country_models(const CountryProblems& problems,
                                 const smooth::FitOptions& options = {});

// Design rows for every projection-grid cell. Layouts depend only on the
// observation coordinates, never on weights, so one evaluator serves the
// full-data fit and every bootstrap refit of the same problems.
struct GridEvaluator {
    project::ProjectionGrid grid;
    Eigen::MatrixXd mortality_rows;  // (years*ages) x p_f, cell order (t, a)
    Eigen::MatrixXd audience_rows;   // ages x p_g
    Eigen::MatrixXd population_rows; // (years*ages) x p_h
};

GridEvaluator make_grid_evaluator(const CountryProblems& problems,
                                  const project::ProjectionGrid& grid);

struct CountrySurfaces {
    project::Surface mortality;  // clamped into [epsilon, 1-epsilon]
    Eigen::VectorXd baseline;    // users by grid age at 2018, zero below 18
    project::Surface population;
};

CountrySurfaces evaluate_surfaces(const CountryModels& models, const GridEvaluator& evaluator,
                                  double epsilon = 1e-6);

struct ScenarioSettings {
    bool run_a = true;
    bool run_b = true;
    double growth_factor = 1.13;
};

struct CountryOutcome {
    ingest::CountryCode country;
    std::optional<project::CountryProjection> scenario_a;
    std::optional<project::CountryProjection> scenario_b;
};

CountryOutcome project_country(const ingest::CountryCode& country,
                               const CountrySurfaces& surfaces,
                               const ScenarioSettings& scenarios,
                               const project::ProjectionGrid& grid);

struct PipelineConfig {
    project::ProjectionGrid grid;
    ScenarioSettings scenarios;
    double min_users = 10000.0;
    double epsilon = 1e-6;
    unsigned threads = 0; // 0 picks the hardware concurrency
    smooth::FitOptions fit_options;
};

struct ExcludedCountry {
    std::string code;
    std::string reason;
};

// Countries sorted by code; the global outcome sums their yearly deaths in
// that order, so results are identical across thread counts.
struct PipelineResult {
    std::vector<CountryOutcome> countries;
    CountryOutcome global;
    std::vector<ExcludedCountry> filtered;      // audience below min_users
    std::vector<ExcludedCountry> unprojectable; // build or fit failures
    std::vector<std::string> warnings;
};

PipelineResult run_pipeline(const std::vector<ingest::DemographicTable>& tables,
                            const std::vector<ingest::AudienceSnapshot>& snapshots,
                            const PipelineConfig& config);

} // namespace memoria::pipeline
