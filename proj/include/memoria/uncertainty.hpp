#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "memoria/ingest.hpp"
#include "memoria/pipeline.hpp"

namespace memoria::uncertainty {

struct BootstrapConfig {
    int replicates = 500;
    std::uint64_t seed = 0;
    // Smoothing parameters are re-selected per replicate within this many
    // grid steps of the full-data choice; 0 freezes them.
    int lambda_neighborhood = 1;
    unsigned threads = 0; // 0 picks hardware concurrency
    // A country whose share of failed replicates exceeds this is flagged.
    double failure_flag_share = 0.10;
};

struct PosteriorSummary {
    double point = 0.0; // full-data, unweighted fit
    std::vector<double> replicate_values;
    double se = 0.0;
    bool degenerate = false; // fewer than 2 replicate values behind se
};

struct CountryPosterior {
    ingest::CountryCode country;
    std::optional<PosteriorSummary> scenario_a;
    std::optional<PosteriorSummary> scenario_b;
    // Indices of the replicates that produced values, ascending; both
    // scenarios share one index list because a replicate fails as a unit.
    std::vector<int> replicate_indices;
    int failures = 0;
    bool flagged = false; // failure share above the configured threshold
    std::vector<std::string> warnings;
};

// Flat Dirichlet draw: unit-exponential variates normalized by their sum.
// Strictly positive, sums to 1. Consumes exactly n words from the stream.
Eigen::VectorXd draw_dirichlet_weights(int n, std::mt19937_64& rng);

// Sample standard deviation (divisor n-1). Fewer than 2 values is
// degenerate: returns 0 and sets the flag when given.
double standard_error(const std::vector<double>& values, bool* degenerate = nullptr);

// Seed stream: one 64-bit seed per (run seed, country code) pair, then one
// per replicate. Exposed so dumps and tests can replay a single replicate.
std::uint64_t country_seed(std::uint64_t run_seed, const std::string& country_code);
std::uint64_t replicate_seed(std::uint64_t cseed, int replicate_index);

// Bayesian bootstrap for one country: refits the mortality, audience, and
// population models under independent Dirichlet observation weights per
// replicate, reruns the projection, and summarizes total_2100 for every
// enabled scenario. The point estimate is the unweighted fit.
CountryPosterior bootstrap_country(const ingest::DemographicTable& demo,
                                   const ingest::AudienceSnapshot& audience,
                                   const pipeline::PipelineConfig& config,
                                   const BootstrapConfig& bootstrap);

} // namespace memoria::uncertainty
