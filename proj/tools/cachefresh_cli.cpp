// Command-line front end: evaluate, optimize, simulate and sweep cache
// freshness scenarios, writing CSV.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cachefresh/scenario.hpp"

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string preset_name;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string format = "csv";
};

cachefresh::ScenarioConfig load(const GlobalOptions& opts) {
    if (!opts.config_path.empty() && !opts.preset_name.empty()) {
        throw std::invalid_argument("use either --config or --preset, not both");
    }
    cachefresh::ScenarioConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = cachefresh::load_config(opts.config_path);
    } else if (!opts.preset_name.empty()) {
        cfg = cachefresh::preset(opts.preset_name);
    } else {
        throw std::invalid_argument("a scenario is required: pass --config PATH or --preset NAME");
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (!opts.out_path.empty()) cfg.output_path = opts.out_path;
    return cfg;
}

void emit(const cachefresh::ScenarioConfig& cfg) {
    const auto result = cachefresh::run_scenario(cfg);
    if (cfg.output_path.empty()) {
        cachefresh::write_csv(std::cout, result);
        return;
    }
    std::ofstream csv(cfg.output_path);
    if (!csv) throw std::runtime_error("cannot write " + cfg.output_path);
    cachefresh::write_csv(csv, result);
    std::ofstream manifest(cfg.output_path + ".manifest.json");
    if (!manifest) throw std::runtime_error("cannot write manifest next to " + cfg.output_path);
    manifest << cachefresh::run_manifest(cfg).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Freshness analysis and rate allocation for source-cache-user update networks"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "Scenario config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--preset", opts.preset_name, "Bundled scenario (see `presets`)");
    app.add_option("--seed", opts.seed, "Simulation seed, overrides the config");
    app.add_option("--out", opts.out_path, "CSV output path (default: stdout)");
    app.add_option("--format", opts.format, "Output format")->check(CLI::IsMember({"csv"}));

    auto* eval = app.add_subcommand("eval", "Analytic freshness of the config's allocation");
    auto* optimize = app.add_subcommand("optimize", "Alternating maximization of the rate allocation");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo freshness of an allocation");
    std::size_t replications = 0;
    double horizon = 0.0;
    simulate->add_option("--replications", replications, "Replications per file");
    simulate->add_option("--horizon", horizon, "Simulated time per replication");

    auto* baseline = app.add_subcommand("baseline", "Baseline allocations");
    std::string baseline_policy;
    baseline->add_option("--policy", baseline_policy, "lambda-proportional or lambda-inverse")
        ->check(CLI::IsMember({"lambda-proportional", "lambda-inverse"}));

    app.add_subcommand("run", "Full scenario as configured");

    auto* presets = app.add_subcommand("presets", "List bundled scenarios");
    std::string show;
    presets->add_option("--show", show, "Print one preset's config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets->parsed()) {
            if (show.empty()) {
                for (const auto& name : cachefresh::preset_names()) std::cout << name << '\n';
            } else {
                std::cout << cachefresh::to_json(cachefresh::preset(show)).dump(2) << '\n';
            }
            return 0;
        }

        auto cfg = load(opts);
        if (eval->parsed()) {
            if (!cfg.allocation) throw std::invalid_argument("eval needs an 'allocation' in the config");
            cfg.policies = {"given"};
            cfg.simulation.reset();
        } else if (optimize->parsed()) {
            cfg.policies = {"optimized"};
            cfg.simulation.reset();
        } else if (baseline->parsed()) {
            if (baseline_policy.empty()) {
                cfg.policies = {"lambda-proportional", "lambda-inverse"};
            } else {
                cfg.policies = {baseline_policy};
            }
            cfg.simulation.reset();
        } else if (simulate->parsed()) {
            cfg.policies = {cfg.allocation ? "given" : "optimized"};
            if (!cfg.simulation) cfg.simulation = cachefresh::SimulationSpec{};
            if (replications > 0) cfg.simulation->replications = replications;
            if (horizon > 0.0) cfg.simulation->horizon = horizon;
        }
        emit(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
