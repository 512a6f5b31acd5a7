// Command line front end: parses demographic and audience inputs, projects
// deceased-profile accumulation per country under the requested scenarios,
// bootstraps uncertainty, and writes the report artifacts into --out.

#include "memoria/csv.hpp"
#include "memoria/ingest.hpp"
#include "memoria/numerics.hpp"
#include "memoria/pipeline.hpp"
#include "memoria/project.hpp"
#include "memoria/report.hpp"
#include "memoria/uncertainty.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using namespace memoria;

struct CliOptions {
    std::string demographics;
    std::string audience;
    std::string scenario = "both";
    double growth_rate = 0.13;
    int min_users = 10000;
    int bootstrap = 500;
    std::uint64_t seed = 0;
    std::vector<std::string> countries;
    std::string out = ".";
    bool dump_posterior = false;
    std::string unit = "units";
    unsigned threads = 0;
    double epsilon = 1e-6;
    int top = 10;
};

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path + " for reading");
    return in;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void print_parse_report(const char* label, const ingest::ParseReport& report) {
    for (const auto& warning : report.warnings)
        std::cerr << "warning: " << label << ": " << warning << "\n";
}

// One scenario's data, assembled from the pipeline outcome and the bootstrap.
struct ScenarioResults {
    char label = 'A';
    std::vector<report::CountryResult> countries;
    const project::CountryProjection* global = nullptr;
};

void write_scenario_artifacts(const std::filesystem::path& out_dir,
                              const ScenarioResults& scenario,
                              const std::vector<pipeline::ExcludedCountry>& excluded,
                              int top_count) {
    const std::string suffix = std::string(1, scenario.label) + ".csv";

    auto continents = report::aggregate_by_continent(scenario.countries);
    auto tables_out = open_output(out_dir / ("tables_continents_" + suffix));
    report::write_aggregate_csv(tables_out, continents);

    auto top = report::top_countries_table(scenario.countries, top_count);
    auto top_out = open_output(out_dir / ("tables_countries_" + suffix));
    report::write_aggregate_csv(top_out, top);

    auto ts_countries = open_output(out_dir / ("timeseries_countries_" + suffix));
    report::timeseries_export(ts_countries, scenario.countries, *scenario.global,
                              report::Grouping::country);
    auto ts_continents = open_output(out_dir / ("timeseries_continents_" + suffix));
    report::timeseries_export(ts_continents, scenario.countries, *scenario.global,
                              report::Grouping::continent);

    auto records = report::heatmap_export(scenario.countries, excluded,
                                          ingest::bundled_country_metadata());
    auto heatmap_out = open_output(out_dir / ("heatmap_" + suffix));
    report::write_heatmap_csv(heatmap_out, records);
}

int run(const CliOptions& options) {
    const auto& metadata = ingest::bundled_country_metadata();

    double unit_scale = options.unit == "thousands" ? 1000.0 : 1.0;
    ingest::ParseReport demo_report;
    auto demo_in = open_input(options.demographics);
    auto tables = ingest::parse_demographic_table(demo_in, metadata, unit_scale, &demo_report);
    print_parse_report("demographics", demo_report);

    ingest::ParseReport audience_report;
    auto audience_in = open_input(options.audience);
    auto snapshots = ingest::parse_audience_snapshot(audience_in, metadata, &audience_report);
    print_parse_report("audience", audience_report);

    if (!options.countries.empty()) {
        std::set<std::string> wanted;
        for (std::string code : options.countries) {
            std::transform(code.begin(), code.end(), code.begin(),
                           [](unsigned char c) { return std::toupper(c); });
            wanted.insert(code);
        }
        std::erase_if(tables, [&](const auto& t) { return !wanted.count(t.country.code); });
        std::erase_if(snapshots, [&](const auto& s) { return !wanted.count(s.country.code); });
        for (const auto& code : wanted) {
            bool present = std::any_of(snapshots.begin(), snapshots.end(),
                                       [&](const auto& s) { return s.country.code == code; });
            if (!present)
                std::cerr << "warning: requested country " << code
                          << " has no audience data in the inputs\n";
        }
    }

    pipeline::PipelineConfig config;
    config.scenarios.run_a = options.scenario != "B";
    config.scenarios.run_b = options.scenario != "A";
    config.scenarios.growth_factor = 1.0 + options.growth_rate;
    config.min_users = options.min_users;
    config.epsilon = options.epsilon;
    config.threads = options.threads;

    auto result = pipeline::run_pipeline(tables, snapshots, config);
    for (const auto& warning : result.warnings)
        std::cerr << "warning: " << warning << "\n";

    // Bootstrap posteriors, keyed by country code. The bootstrap refits the
    // full-data models itself; its point estimates match the pipeline's
    // projections because the fits are deterministic.
    std::map<std::string, uncertainty::CountryPosterior> posteriors;
    if (options.bootstrap > 0) {
        std::map<std::string, const ingest::DemographicTable*> table_by_code;
        for (const auto& table : tables)
            table_by_code[table.country.code] = &table;
        std::map<std::string, const ingest::AudienceSnapshot*> snapshot_by_code;
        for (const auto& snapshot : snapshots)
            snapshot_by_code[snapshot.country.code] = &snapshot;

        uncertainty::BootstrapConfig bootstrap_config;
        bootstrap_config.replicates = options.bootstrap;
        bootstrap_config.seed = options.seed;
        bootstrap_config.threads = options.threads;

        for (const auto& outcome : result.countries) {
            const auto* table = table_by_code.at(outcome.country.code);
            const auto* snapshot = snapshot_by_code.at(outcome.country.code);
            auto posterior =
                uncertainty::bootstrap_country(*table, *snapshot, config, bootstrap_config);
            for (const auto& warning : posterior.warnings)
                std::cerr << "warning: " << outcome.country.code << ": " << warning << "\n";
            if (posterior.flagged)
                std::cerr << "warning: " << outcome.country.code
                          << ": bootstrap failure share exceeds "
                          << csv::format_double(bootstrap_config.failure_flag_share)
                          << "; standard errors are unreliable\n";
            posteriors.emplace(outcome.country.code, std::move(posterior));
        }
    }

    auto posterior_se = [&](const std::string& code, char label) {
        auto it = posteriors.find(code);
        if (it == posteriors.end())
            return 0.0;
        const auto& summary = label == 'A' ? it->second.scenario_a : it->second.scenario_b;
        return summary ? summary->se : 0.0;
    };

    std::vector<ScenarioResults> scenarios;
    if (config.scenarios.run_a)
        scenarios.push_back({'A', {}, result.global.scenario_a ? &*result.global.scenario_a
                                                               : nullptr});
    if (config.scenarios.run_b)
        scenarios.push_back({'B', {}, result.global.scenario_b ? &*result.global.scenario_b
                                                               : nullptr});
    for (auto& scenario : scenarios) {
        if (!scenario.global)
            throw std::runtime_error(std::string("pipeline produced no global projection for "
                                                 "scenario ") +
                                     scenario.label);
        for (const auto& outcome : result.countries) {
            const auto& projection =
                scenario.label == 'A' ? outcome.scenario_a : outcome.scenario_b;
            if (!projection)
                continue;
            scenario.countries.push_back({outcome.country, *projection,
                                          posterior_se(outcome.country.code, scenario.label)});
        }
    }

    std::filesystem::path out_dir(options.out);
    std::filesystem::create_directories(out_dir);

    std::vector<pipeline::ExcludedCountry> excluded = result.filtered;
    excluded.insert(excluded.end(), result.unprojectable.begin(), result.unprojectable.end());

    for (const auto& scenario : scenarios)
        write_scenario_artifacts(out_dir, scenario, excluded, options.top);

    if (options.dump_posterior) {
        if (options.bootstrap <= 0)
            std::cerr << "warning: --dump-posterior has no replicates to dump "
                         "(--bootstrap 0)\n";
        auto out = open_output(out_dir / "posterior.csv");
        csv::write_row(out, {"country", "scenario", "replicate", "total_2100"});
        for (const auto& [code, posterior] : posteriors) {
            auto dump = [&](char label, const std::optional<uncertainty::PosteriorSummary>& s) {
                if (!s)
                    return;
                for (std::size_t i = 0; i < s->replicate_values.size(); ++i)
                    csv::write_row(out, {code, std::string(1, label),
                                         std::to_string(posterior.replicate_indices[i]),
                                         csv::format_double(s->replicate_values[i])});
            };
            dump('A', posterior.scenario_a);
            dump('B', posterior.scenario_b);
        }
    }

    report::RunManifest manifest;
    manifest.version = report::software_version();
    manifest.generated_at = utc_timestamp();
    manifest.seed = options.seed;
    manifest.inputs.push_back({options.demographics, fnv1a64_file(options.demographics)});
    manifest.inputs.push_back({options.audience, fnv1a64_file(options.audience)});
    manifest.config = {
        {"scenario", options.scenario},
        {"growth_rate", options.growth_rate},
        {"min_users", options.min_users},
        {"bootstrap", options.bootstrap},
        {"countries", options.countries},
        {"unit", options.unit},
        {"epsilon", options.epsilon},
        {"threads", options.threads},
        {"top", options.top},
        {"dump_posterior", options.dump_posterior},
        {"grid",
         {{"year_min", config.grid.year_min},
          {"year_max", config.grid.year_max},
          {"age_min", config.grid.age_min},
          {"age_max", config.grid.age_max}}},
    };
    auto manifest_out = open_output(out_dir / "manifest.json");
    manifest_out << report::manifest_to_json(manifest).dump(2) << "\n";

    std::cout << "projected " << result.countries.size() << " countries ("
              << result.filtered.size() << " below the user floor, "
              << result.unprojectable.size() << " unprojectable); artifacts in "
              << out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CliOptions options;
    CLI::App app{"Projects the accumulation of deceased social-network profiles per country "
                 "through 2100 and writes aggregate tables, time series, heatmap data, and a "
                 "run manifest."};
    app.add_option("--demographics", options.demographics,
                   "CSV of country_code,year_bin,age_bin,deaths,population")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--audience", options.audience,
                   "Audience snapshot (CSV country_code,age,lower,upper or JSON array)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--scenario", options.scenario, "Scenario to project")
        ->check(CLI::IsMember({"A", "B", "both"}))
        ->capture_default_str();
    auto* growth = app.add_option("--growth-rate", options.growth_rate,
                                  "Scenario B annual audience growth rate")
                       ->capture_default_str();
    app.add_option("--min-users", options.min_users,
                   "Drop countries with fewer snapshot users than this")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--bootstrap", options.bootstrap,
                   "Bootstrap replicates per country (0 disables uncertainty)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--seed", options.seed, "Bootstrap seed")->capture_default_str();
    app.add_option("--countries", options.countries,
                   "Comma separated alpha-3 codes to restrict the run to")
        ->delimiter(',');
    app.add_option("--out", options.out, "Output directory")->capture_default_str();
    app.add_flag("--dump-posterior", options.dump_posterior,
                 "Also write every bootstrap replicate total to posterior.csv");
    app.add_option("--unit", options.unit, "Units of the demographic counts")
        ->check(CLI::IsMember({"units", "thousands"}))
        ->capture_default_str();
    app.add_option("--threads", options.threads, "Worker threads (0 = hardware)")
        ->capture_default_str();
    app.add_option("--epsilon", options.epsilon, "Mortality rate clamp band")
        ->check(CLI::Range(1e-12, 0.01))
        ->capture_default_str();
    app.add_option("--top", options.top, "Countries in the top table")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (options.scenario == "A" && growth->count() > 0)
        std::cerr << "warning: --growth-rate only affects scenario B, which is not being run\n";

    try {
        return run(options);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
