#include "memoria/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "memoria/fit.hpp"
#include "memoria/numerics.hpp"

namespace memoria::uncertainty {

namespace {

// Replicate weights: the Dirichlet draw rescaled to mean 1, multiplied into
// the base weights over the resampled rows. Multiplying (rather than
// replacing) keeps intentionally down-weighted rows down-weighted in
// expectation; trailing anchor rows keep their base weight untouched.
Eigen::VectorXd replicate_weights(const pipeline::SmoothProblem& problem,
                                  std::mt19937_64& rng) {
    const int n = problem.bootstrap_rows;
    Eigen::VectorXd w = problem.weights;
    if (n == 0)
        return w;
    const Eigen::VectorXd dirichlet = draw_dirichlet_weights(n, rng);
    w.head(n) = w.head(n).cwiseProduct(dirichlet * static_cast<double>(n));
    return w;
}

// Replicates re-select smoothing locally around the full-data choice and
// keep its dispersion: weight noise should perturb the curve, not restart
// model selection from scratch.
smooth::FitOptions replicate_options(const smooth::FitOptions& base,
                                     const smooth::FittedSmoothModel& full,
                                     int neighborhood) {
    smooth::FitOptions options = base;
    options.fixed_lambdas.clear();
    options.initial_lambdas = full.lambdas;
    options.lambda_neighborhood = neighborhood;
    options.fixed_dispersion = full.family.dispersion;
    options.warm_start = &full.coefficients;
    return options;
}

smooth::FittedSmoothModel refit(const pipeline::SmoothProblem& problem,
                                const smooth::FittedSmoothModel& full,
                                const smooth::FitOptions& base, int neighborhood,
                                std::mt19937_64& rng) {
    return smooth::fit(problem.design, problem.response, replicate_weights(problem, rng),
                       problem.family, replicate_options(base, full, neighborhood));
}

} // namespace

Eigen::VectorXd draw_dirichlet_weights(int n, std::mt19937_64& rng) {
    if (n < 1)
        throw std::invalid_argument("dirichlet dimension must be at least 1");
    Eigen::VectorXd e(n);
    // uniform_from_bits stays strictly inside (0,1), so every variate is
    // strictly positive and the weights never hit 0 or 1.
    for (int i = 0; i < n; ++i)
        e(i) = -std::log(uniform_from_bits(rng()));
    return e / e.sum();
}

double standard_error(const std::vector<double>& values, bool* degenerate) {
    if (degenerate)
        *degenerate = values.size() < 2;
    if (values.size() < 2)
        return 0.0;
    // Summing in sorted order makes the result bit-identical under any
    // permutation of the input.
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double mean = 0.0;
    for (double v : sorted)
        mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : sorted)
        ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

std::uint64_t country_seed(std::uint64_t run_seed, const std::string& country_code) {
    return splitmix64(run_seed ^ fnv1a64(country_code.data(), country_code.size()));
}

std::uint64_t replicate_seed(std::uint64_t cseed, int replicate_index) {
    if (replicate_index < 0)
        throw std::invalid_argument("replicate index must be non-negative");
    return splitmix64(cseed ^ (static_cast<std::uint64_t>(replicate_index) + 1));
}

CountryPosterior bootstrap_country(const ingest::DemographicTable& demo,
                                   const ingest::AudienceSnapshot& audience,
                                   const pipeline::PipelineConfig& config,
                                   const BootstrapConfig& bootstrap) {
    if (bootstrap.replicates < 1)
        throw std::invalid_argument("bootstrap needs at least one replicate");
    if (!config.scenarios.run_a && !config.scenarios.run_b)
        throw std::invalid_argument("no scenario enabled");
    if (!(bootstrap.failure_flag_share >= 0.0 && bootstrap.failure_flag_share <= 1.0))
        throw std::invalid_argument("failure_flag_share must lie in [0, 1]");

    const auto problems = pipeline::build_country_problems(demo, audience, config.epsilon);
    const auto full = pipeline::fit_country_models(problems, config.fit_options);
    const auto evaluator = pipeline::make_grid_evaluator(problems, config.grid);
    const auto surfaces = pipeline::evaluate_surfaces(full, evaluator, config.epsilon);
    const auto point =
        pipeline::project_country(problems.country, surfaces, config.scenarios, config.grid);

    const int replicates = bootstrap.replicates;
    std::vector<double> a_values(replicates, 0.0), b_values(replicates, 0.0);
    std::vector<char> succeeded(replicates, 0);
    std::vector<std::string> errors(replicates);

    const std::uint64_t cseed = country_seed(bootstrap.seed, problems.country.code);
    const unsigned threads = bootstrap.threads != 0
                                 ? bootstrap.threads
                                 : std::max(1u, std::thread::hardware_concurrency());

    // Each replicate's stream depends only on (seed, country, index), and
    // results land in their own slot, so any thread count gives identical
    // output.
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t i) {
        try {
            std::mt19937_64 rng(replicate_seed(cseed, static_cast<int>(i)));
            // Weight draws happen in a fixed model order: mortality,
            // audience, population.
            const pipeline::CountryModels models{
                refit(problems.mortality, full.mortality, config.fit_options,
                      bootstrap.lambda_neighborhood, rng),
                refit(problems.audience, full.audience, config.fit_options,
                      bootstrap.lambda_neighborhood, rng),
                refit(problems.population, full.population, config.fit_options,
                      bootstrap.lambda_neighborhood, rng)};
            const auto replicate_surfaces =
                pipeline::evaluate_surfaces(models, evaluator, config.epsilon);
            const auto outcome = pipeline::project_country(problems.country, replicate_surfaces,
                                                           config.scenarios, config.grid);
            if (outcome.scenario_a)
                a_values[i] = outcome.scenario_a->total_2100;
            if (outcome.scenario_b)
                b_values[i] = outcome.scenario_b->total_2100;
            succeeded[i] = 1;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    CountryPosterior posterior;
    posterior.country = problems.country;
    for (const auto& w : full.mortality.warnings)
        posterior.warnings.push_back("mortality model: " + w);
    for (const auto& w : full.audience.warnings)
        posterior.warnings.push_back("audience model: " + w);
    for (const auto& w : full.population.warnings)
        posterior.warnings.push_back("population model: " + w);

    PosteriorSummary a, b;
    a.point = point.scenario_a ? point.scenario_a->total_2100 : 0.0;
    b.point = point.scenario_b ? point.scenario_b->total_2100 : 0.0;
    std::string first_error;
    for (int i = 0; i < replicates; ++i) {
        if (!succeeded[i]) {
            ++posterior.failures;
            if (first_error.empty())
                first_error = errors[i];
            continue;
        }
        posterior.replicate_indices.push_back(i);
        if (config.scenarios.run_a)
            a.replicate_values.push_back(a_values[i]);
        if (config.scenarios.run_b)
            b.replicate_values.push_back(b_values[i]);
    }
    if (posterior.failures > 0)
        posterior.warnings.push_back(std::to_string(posterior.failures) + " of " +
                                     std::to_string(replicates) +
                                     " replicates failed; first error: " + first_error);
    posterior.flagged = static_cast<double>(posterior.failures) >
                        bootstrap.failure_flag_share * static_cast<double>(replicates);
    if (posterior.flagged)
        posterior.warnings.push_back("replicate failure share above " +
                                     std::to_string(bootstrap.failure_flag_share));

    const auto summarize = [](PosteriorSummary& summary) {
        summary.se = standard_error(summary.replicate_values, &summary.degenerate);
    };
    if (config.scenarios.run_a) {
        summarize(a);
        posterior.scenario_a = std::move(a);
    }
    if (config.scenarios.run_b) {
        summarize(b);
        posterior.scenario_b = std::move(b);
    }
    return posterior;
}

} // namespace memoria::uncertainty
