#ifndef CACHEFRESH_SCENARIO_HPP
#define CACHEFRESH_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachefresh/model.hpp"
#include "cachefresh/optimizer.hpp"
#include "cachefresh/simulator.hpp"

namespace cachefresh {

/// lambda_i = b q^i (i = 1..n) with b chosen so the rates sum to `total`.
std::vector<double> geometric_lambdas(double total, double q, std::size_t n);

struct GeometricSource {
    double total = 10.0;  ///< a
    double q = 0.7;
    std::size_t n = 15;
};

struct SourceSpec {
    std::optional<std::vector<double>> lambdas;  ///< explicit rates win over `geometric`
    GeometricSource geometric;
    std::vector<double> weights;
    std::vector<double> cache_success;
    std::vector<double> user_success;
};

struct SimulationSpec {
    double horizon = 0.0;  ///< 0 selects default_horizon()
    std::size_t replications = 20;
    double warmup = 0.0;
};

/// One swept parameter. Recognized names: a, q, n, C (= C1), C1..Cm, U (= U1), U1..Ud.
struct SweepAxis {
    std::string param;
    std::vector<double> values;
};

enum class SweepMode {
    product,   ///< cartesian product of all axes
    separate,  ///< each axis varies alone around the base configuration
};

/// "optimized", "lambda-proportional", "lambda-inverse" or "given".
using PolicyName = std::string;

struct ScenarioConfig {
    std::string id = "scenario";
    SourceSpec source;
    TopologyKind topology = TopologyKind::single_cache;
    std::vector<double> cache_budgets{1.0};
    std::vector<double> user_budgets{1.0};
    OptimizerSettings optimizer;
    std::optional<SimulationSpec> simulation;
    std::vector<PolicyName> policies{"optimized"};
    std::optional<RateAllocation> allocation;  ///< for the "given" policy / given init
    std::vector<SweepAxis> sweeps;
    SweepMode sweep_mode = SweepMode::product;
    std::uint64_t seed = 0;
    std::string output_path;
};

/// Throws std::invalid_argument with a description of the first problem.
ScenarioConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::string& path);

std::vector<std::string> preset_names();
ScenarioConfig preset(const std::string& name);

/// Concrete problem at one sweep point.
struct ScenarioPoint {
    std::vector<std::pair<std::string, double>> sweep;  ///< (param, value), empty without sweeps
    SourceProfile profile;
    Topology topology;
};

/// Sweep points in deterministic order.
std::vector<ScenarioPoint> expand_points(const ScenarioConfig& cfg);

struct PolicyResult {
    std::size_t point_index = 0;
    PolicyName policy;
    RateAllocation allocation;
    FreshnessReport report;
    std::optional<double> kkt_residual;   ///< optimized policy only
    std::optional<std::size_t> iterations;
    std::optional<bool> converged;
    std::optional<SimEstimate> simulation;
};

struct ScenarioResult {
    std::string id;
    std::vector<ScenarioPoint> points;
    std::vector<PolicyResult> results;  ///< point-major, then policy order of the config
};

ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Fixed column order; see write_csv.
const std::vector<std::string>& csv_columns();

/// One row per (point, policy, node, file) plus one "total" row per
/// (point, policy). Numbers use 12 significant digits.
void write_csv(std::ostream& os, const ScenarioResult& result);

/// Config echo, seed and version, written next to the CSV.
nlohmann::json run_manifest(const ScenarioConfig& cfg);

std::string format_number(double value);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cachefresh

#endif  // CACHEFRESH_SCENARIO_HPP
