#include "cachefresh/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "cachefresh/analytics.hpp"

namespace cachefresh {

using nlohmann::json;

std::vector<double> geometric_lambdas(double total, double q, std::size_t n) {
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw std::invalid_argument("geometric source: total rate a must be positive");
    }
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("geometric source: q must lie in (0, 1]");
    if (n < 1) throw std::invalid_argument("geometric source: n must be at least 1");

    std::vector<double> out(n);
    double power = 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        power *= q;
        out[i] = power;
        sum += power;
    }
    const double b = total / sum;
    for (double& x : out) x *= b;
    return out;
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

namespace {

// Values of a start/stop/step range snapped to 12 significant digits, so
// 0.1 + 9 * 0.1 comes out as 1 and not 1.0000000000000002.
std::vector<double> expand_range(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start)) {
        throw std::invalid_argument("sweep range needs step > 0 and stop >= start");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(std::stod(format_number(start + static_cast<double>(k) * step)));
    }
    return out;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

std::vector<std::vector<double>> get_matrix(const json& obj, const char* key) {
    if (!obj.contains(key)) return {};
    return obj.at(key).get<std::vector<std::vector<double>>>();
}

InitPolicy init_from_string(const std::string& s) {
    if (s == "uniform") return InitPolicy::uniform;
    if (s == "given") return InitPolicy::given;
    throw std::invalid_argument("unknown optimizer init policy: " + s);
}

std::size_t budget_slot(const std::string& param, char prefix) {
    if (param.size() == 1) return 0;
    const auto idx = std::stoul(param.substr(1));
    if (idx < 1) throw std::invalid_argument(std::string("sweep parameter ") + prefix + " index starts at 1");
    return idx - 1;
}

bool is_budget_param(const std::string& param, char prefix) {
    if (param.empty() || param[0] != prefix) return false;
    for (std::size_t i = 1; i < param.size(); ++i) {
        if (param[i] < '0' || param[i] > '9') return false;
    }
    return true;
}

void apply_sweep(ScenarioConfig& cfg, const std::string& param, double value) {
    auto& geo = cfg.source.geometric;
    if (param == "a" || param == "q" || param == "n") {
        if (cfg.source.lambdas) {
            throw std::invalid_argument("sweep over '" + param + "' needs a geometric source");
        }
        if (param == "a") {
            geo.total = value;
        } else if (param == "q") {
            geo.q = value;
        } else {
            if (value < 1.0 || value != std::floor(value)) {
                throw std::invalid_argument("sweep over n needs positive integers");
            }
            geo.n = static_cast<std::size_t>(value);
        }
        return;
    }
    for (char prefix : {'C', 'U'}) {
        if (!is_budget_param(param, prefix)) continue;
        auto& budgets = prefix == 'C' ? cfg.cache_budgets : cfg.user_budgets;
        const auto slot = budget_slot(param, prefix);
        if (slot >= budgets.size()) {
            throw std::invalid_argument("sweep parameter " + param + " exceeds the node count");
        }
        budgets[slot] = value;
        return;
    }
    throw std::invalid_argument("unknown sweep parameter: " + param);
}

ScenarioPoint make_point(const ScenarioConfig& cfg, std::vector<std::pair<std::string, double>> sweep) {
    ScenarioConfig local = cfg;
    for (const auto& [param, value] : sweep) apply_sweep(local, param, value);

    ScenarioPoint point;
    point.sweep = std::move(sweep);
    const auto& src = local.source;
    point.profile.lambdas = src.lambdas ? *src.lambdas
                                        : geometric_lambdas(src.geometric.total, src.geometric.q,
                                                            src.geometric.n);
    point.profile.weights = src.weights;
    point.profile.cache_success = src.cache_success;
    point.profile.user_success = src.user_success;
    point.topology = Topology{local.topology, local.cache_budgets, local.user_budgets,
                              point.profile.file_count()};

    auto errors = validate_profile(point.profile);
    auto topo_errors = validate_topology(point.profile, point.topology);
    errors.insert(errors.end(), topo_errors.begin(), topo_errors.end());
    throw_if_invalid(std::move(errors));
    return point;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string opt_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string{};
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
    try {
        ScenarioConfig cfg;
        cfg.id = get_or<std::string>(doc, "id", cfg.id);
        cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
        cfg.output_path = get_or<std::string>(doc, "output", "");

        const json& src = doc.at("source");
        if (src.contains("lambdas")) {
            cfg.source.lambdas = src.at("lambdas").get<std::vector<double>>();
        } else {
            const json& geo = src.at("geometric");
            cfg.source.geometric.total = geo.at("a").get<double>();
            cfg.source.geometric.q = geo.at("q").get<double>();
            cfg.source.geometric.n = geo.at("n").get<std::size_t>();
        }
        cfg.source.weights = get_or<std::vector<double>>(src, "weights", {});
        cfg.source.cache_success = get_or<std::vector<double>>(src, "cache_success", {});
        cfg.source.user_success = get_or<std::vector<double>>(src, "user_success", {});

        const json& topo = doc.at("topology");
        cfg.topology = topology_kind_from_string(topo.at("kind").get<std::string>());
        cfg.cache_budgets = topo.at("cache_budgets").get<std::vector<double>>();
        cfg.user_budgets = topo.at("user_budgets").get<std::vector<double>>();

        if (doc.contains("optimizer")) {
            const json& opt = doc.at("optimizer");
            cfg.optimizer.max_outer_iterations =
                get_or<std::size_t>(opt, "max_outer_iterations", cfg.optimizer.max_outer_iterations);
            cfg.optimizer.objective_tolerance =
                get_or<double>(opt, "objective_tolerance", cfg.optimizer.objective_tolerance);
            cfg.optimizer.kkt_tolerance = get_or<double>(opt, "kkt_tolerance", cfg.optimizer.kkt_tolerance);
            cfg.optimizer.init = init_from_string(get_or<std::string>(opt, "init", "uniform"));
        }
        validate_settings(cfg.optimizer);

        if (doc.contains("simulation") && !doc.at("simulation").is_null()) {
            const json& sim = doc.at("simulation");
            SimulationSpec spec;
            spec.horizon = get_or<double>(sim, "horizon", 0.0);
            spec.replications = get_or<std::size_t>(sim, "replications", spec.replications);
            spec.warmup = get_or<double>(sim, "warmup", 0.0);
            if (spec.horizon < 0.0 || spec.replications < 1 || spec.warmup < 0.0) {
                throw std::invalid_argument("simulation settings out of range");
            }
            cfg.simulation = spec;
        }

        if (doc.contains("policies")) cfg.policies = doc.at("policies").get<std::vector<std::string>>();
        if (cfg.policies.empty()) throw std::invalid_argument("at least one policy is required");
        for (const auto& p : cfg.policies) {
            if (p != "optimized" && p != "given") baseline_policy_from_string(p);
        }

        if (doc.contains("allocation")) {
            const json& a = doc.at("allocation");
            cfg.allocation = RateAllocation{get_matrix(a, "cache_rates"), get_matrix(a, "user_rates")};
        }
        const bool needs_alloc = cfg.optimizer.init == InitPolicy::given ||
                                 std::find(cfg.policies.begin(), cfg.policies.end(), "given") !=
                                     cfg.policies.end();
        if (needs_alloc && !cfg.allocation) {
            throw std::invalid_argument("config needs an 'allocation' section");
        }

        if (doc.contains("sweeps")) {
            for (const json& axis : doc.at("sweeps")) {
                SweepAxis sweep;
                sweep.param = axis.at("param").get<std::string>();
                if (axis.contains("values")) {
                    sweep.values = axis.at("values").get<std::vector<double>>();
                } else {
                    sweep.values = expand_range(axis.at("start").get<double>(),
                                                axis.at("stop").get<double>(),
                                                axis.at("step").get<double>());
                }
                if (sweep.values.empty()) {
                    throw std::invalid_argument("sweep over " + sweep.param + " has no values");
                }
                cfg.sweeps.push_back(std::move(sweep));
            }
        }
        const auto mode = get_or<std::string>(doc, "sweep_mode", "product");
        if (mode == "product") {
            cfg.sweep_mode = SweepMode::product;
        } else if (mode == "separate") {
            cfg.sweep_mode = SweepMode::separate;
        } else {
            throw std::invalid_argument("unknown sweep_mode: " + mode);
        }
        return cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
}

json to_json(const ScenarioConfig& cfg) {
    json doc;
    doc["id"] = cfg.id;
    doc["seed"] = cfg.seed;
    if (!cfg.output_path.empty()) doc["output"] = cfg.output_path;

    json src;
    if (cfg.source.lambdas) {
        src["lambdas"] = *cfg.source.lambdas;
    } else {
        src["geometric"] = {{"a", cfg.source.geometric.total},
                            {"q", cfg.source.geometric.q},
                            {"n", cfg.source.geometric.n}};
    }
    if (!cfg.source.weights.empty()) src["weights"] = cfg.source.weights;
    if (!cfg.source.cache_success.empty()) src["cache_success"] = cfg.source.cache_success;
    if (!cfg.source.user_success.empty()) src["user_success"] = cfg.source.user_success;
    doc["source"] = src;

    doc["topology"] = {{"kind", to_string(cfg.topology)},
                       {"cache_budgets", cfg.cache_budgets},
                       {"user_budgets", cfg.user_budgets}};
    doc["optimizer"] = {{"max_outer_iterations", cfg.optimizer.max_outer_iterations},
                        {"objective_tolerance", cfg.optimizer.objective_tolerance},
                        {"kkt_tolerance", cfg.optimizer.kkt_tolerance},
                        {"init", cfg.optimizer.init == InitPolicy::given ? "given" : "uniform"}};
    if (cfg.simulation) {
        doc["simulation"] = {{"horizon", cfg.simulation->horizon},
                             {"replications", cfg.simulation->replications},
                             {"warmup", cfg.simulation->warmup}};
    }
    doc["policies"] = cfg.policies;
    if (cfg.allocation) {
        doc["allocation"] = {{"cache_rates", cfg.allocation->cache_rates},
                             {"user_rates", cfg.allocation->user_rates}};
    }
    if (!cfg.sweeps.empty()) {
        json sweeps = json::array();
        for (const auto& s : cfg.sweeps) sweeps.push_back({{"param", s.param}, {"values", s.values}});
        doc["sweeps"] = sweeps;
        doc["sweep_mode"] = cfg.sweep_mode == SweepMode::product ? "product" : "separate";
    }
    return doc;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument("cannot parse config file " + path + ": " + e.what());
    }
    return parse_config(doc);
}

std::vector<std::string> preset_names() {
    return {"example1", "example2", "example3", "example4", "example5"};
}

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.id = name;
    if (name == "example1") {
        cfg.source.geometric = {10.0, 0.7, 15};
        cfg.topology = TopologyKind::single_cache;
        cfg.cache_budgets = {5.0};
        cfg.user_budgets = {10.0};
    } else if (name == "example2") {
        cfg.source.geometric = {10.0, 0.7, 20};
        cfg.topology = TopologyKind::single_cache;
        cfg.cache_budgets = {15.0};
        cfg.user_budgets = {10.0};
        cfg.policies = {"optimized", "lambda-proportional", "lambda-inverse"};
        cfg.sweeps = {{"q", expand_range(0.1, 1.0, 0.1)}, {"a", expand_range(1.0, 20.0, 1.0)}};
        cfg.sweep_mode = SweepMode::separate;
    } else if (name == "example3") {
        cfg.source.geometric = {2.0, 1.0, 15};
        cfg.topology = TopologyKind::single_cache;
        cfg.cache_budgets = {1.0};
        cfg.user_budgets = {10.0};
        cfg.sweeps = {{"q", {0.5, 0.75, 1.0}}, {"C", expand_range(1.0, 10.0, 0.5)}};
        cfg.sweep_mode = SweepMode::product;
    } else if (name == "example4") {
        cfg.source.geometric = {10.0, 0.7, 10};
        cfg.topology = TopologyKind::serial_chain;
        cfg.cache_budgets = {4.0, 10.0};
        cfg.user_budgets = {20.0};
        cfg.sweeps = {{"C1", {4.0, 8.0}}};
    } else if (name == "example5") {
        cfg.source.geometric = {10.0, 0.7, 10};
        cfg.topology = TopologyKind::multi_user;
        cfg.cache_budgets = {10.0};
        cfg.user_budgets = {5.0, 20.0};
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return cfg;
}

std::vector<ScenarioPoint> expand_points(const ScenarioConfig& cfg) {
    std::vector<ScenarioPoint> points;
    if (cfg.sweeps.empty()) {
        points.push_back(make_point(cfg, {}));
        return points;
    }
    if (cfg.sweep_mode == SweepMode::separate) {
        for (const auto& axis : cfg.sweeps) {
            for (double v : axis.values) points.push_back(make_point(cfg, {{axis.param, v}}));
        }
        return points;
    }
    // Odometer over the axes; the last axis varies fastest.
    std::vector<std::size_t> digit(cfg.sweeps.size(), 0);
    for (;;) {
        std::vector<std::pair<std::string, double>> sweep;
        for (std::size_t a = 0; a < cfg.sweeps.size(); ++a) {
            sweep.emplace_back(cfg.sweeps[a].param, cfg.sweeps[a].values[digit[a]]);
        }
        points.push_back(make_point(cfg, std::move(sweep)));
        std::size_t a = cfg.sweeps.size();
        while (a > 0) {
            --a;
            if (++digit[a] < cfg.sweeps[a].values.size()) break;
            digit[a] = 0;
            if (a == 0) return points;
        }
    }
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    validate_settings(cfg.optimizer);
    ScenarioResult out;
    out.id = cfg.id;
    out.points = expand_points(cfg);

    for (std::size_t p = 0; p < out.points.size(); ++p) {
        const auto& point = out.points[p];
        for (const auto& policy : cfg.policies) {
            PolicyResult res;
            res.point_index = p;
            res.policy = policy;
            if (policy == "optimized") {
                std::optional<RateAllocation> init;
                if (cfg.optimizer.init == InitPolicy::given) init = cfg.allocation;
                auto solved = alternating_maximize(point.profile, point.topology, cfg.optimizer, init);
                res.allocation = std::move(solved.allocation);
                res.kkt_residual = max_kkt_residual(point.profile, point.topology, res.allocation);
                res.iterations = solved.trace.iterations_used;
                res.converged = solved.trace.converged;
            } else if (policy == "given") {
                res.allocation = *cfg.allocation;
            } else {
                res.allocation =
                    baseline_allocation(baseline_policy_from_string(policy), point.topology, point.profile);
            }
            res.report = evaluate(point.profile, point.topology, res.allocation);

            if (cfg.simulation) {
                SimConfig sim;
                sim.horizon = cfg.simulation->horizon > 0.0 ? cfg.simulation->horizon
                                                            : default_horizon(point.profile);
                sim.replications = cfg.simulation->replications;
                sim.warmup = cfg.simulation->warmup;
                sim.seed = cfg.seed + p;
                res.simulation = simulate_system(point.profile, point.topology, res.allocation, sim);
            }
            out.results.push_back(std::move(res));
        }
    }
    return out;
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "scenario_id", "sweep_param", "sweep_value",       "policy",           "node",
        "file_index",  "lambda",      "rate",              "freshness_analytic", "freshness_sim_mean",
        "freshness_sim_ci", "total_objective", "kkt_residual", "iterations"};
    return cols;
}

void write_csv(std::ostream& os, const ScenarioResult& result) {
    const auto& cols = csv_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
    os << '\n';

    auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t c = 0; c < fields.size(); ++c) os << (c ? "," : "") << csv_field(fields[c]);
        os << '\n';
    };

    for (const auto& res : result.results) {
        const auto& point = result.points[res.point_index];
        std::string params;
        std::string values;
        for (std::size_t s = 0; s < point.sweep.size(); ++s) {
            params += (s ? ";" : "") + point.sweep[s].first;
            values += (s ? ";" : "") + format_number(point.sweep[s].second);
        }
        const auto& topo = point.topology;
        for (NodeId node : block_order(topo)) {
            const bool cache = node.kind == NodeKind::cache;
            const auto& rates = res.allocation.rates(node);
            const auto& fresh = cache ? res.report.cache_freshness[node.index]
                                      : res.report.user_freshness[node.index];
            for (std::size_t i = 0; i < topo.files; ++i) {
                std::optional<double> sim_mean;
                std::optional<double> sim_ci;
                if (res.simulation) {
                    const auto& iv = cache ? res.simulation->caches[node.index][i]
                                           : res.simulation->users[node.index][i];
                    sim_mean = iv.mean;
                    sim_ci = iv.half_width;
                }
                emit({result.id, params, values, res.policy, node_label(node), std::to_string(i + 1),
                      format_number(point.profile.lambdas[i]), format_number(rates[i]),
                      format_number(fresh[i]), opt_number(sim_mean), opt_number(sim_ci), "", "", ""});
            }
        }
        std::optional<double> sim_mean;
        std::optional<double> sim_ci;
        if (res.simulation) {
            sim_mean = res.simulation->grand_total.mean;
            sim_ci = res.simulation->grand_total.half_width;
        }
        emit({result.id, params, values, res.policy, "total", "", "", "", "", opt_number(sim_mean),
              opt_number(sim_ci), format_number(res.report.grand_total), opt_number(res.kkt_residual),
              res.iterations ? std::to_string(*res.iterations) : std::string{}});
    }
}

json run_manifest(const ScenarioConfig& cfg) {
    return {{"tool", "cachefresh"},
            {"version", kVersion},
            {"seed", cfg.seed},
            {"columns", csv_columns()},
            {"config", to_json(cfg)}};
}

}  // namespace cachefresh
