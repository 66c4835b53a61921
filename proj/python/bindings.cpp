// Python bindings. Vectors map to lists and results to dicts so the module
// has no dependency beyond the interpreter.

#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cachefresh/analytics.hpp"
#include "cachefresh/model.hpp"
#include "cachefresh/optimizer.hpp"
#include "cachefresh/scenario.hpp"
#include "cachefresh/simulator.hpp"

namespace py = pybind11;
using namespace cachefresh;

namespace {

using Matrix = std::vector<std::vector<double>>;

SourceProfile make_profile(std::vector<double> lambdas, std::vector<double> weights,
                           std::vector<double> cache_success, std::vector<double> user_success) {
    return SourceProfile{std::move(lambdas), std::move(weights), std::move(cache_success),
                         std::move(user_success)};
}

Topology make_topology(const std::string& kind, std::size_t files, std::vector<double> cache_budgets,
                       std::vector<double> user_budgets) {
    return Topology{topology_kind_from_string(kind), std::move(cache_budgets), std::move(user_budgets), files};
}

py::dict allocation_dict(const RateAllocation& a) {
    py::dict d;
    d["cache_rates"] = a.cache_rates;
    d["user_rates"] = a.user_rates;
    return d;
}

py::dict report_dict(const FreshnessReport& r) {
    py::dict d;
    d["cache_freshness"] = r.cache_freshness;
    d["user_freshness"] = r.user_freshness;
    d["total_per_user"] = r.total_per_user;
    d["grand_total"] = r.grand_total;
    return d;
}

py::tuple interval(const Interval& iv) { return py::make_tuple(iv.mean, iv.half_width); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Freshness analysis and rate allocation for source-cache-user update networks";
    m.attr("__version__") = kVersion;

    py::register_exception<ValidationFailure>(m, "ValidationFailure", PyExc_ValueError);

    m.def("single_hop_freshness", &single_hop_freshness, py::arg("rate"), py::arg("lam"));
    m.def("two_hop_user_freshness", &two_hop_user_freshness, py::arg("user_rate"), py::arg("cache_rate"),
          py::arg("lam"), py::arg("cache_success") = 1.0, py::arg("user_success") = 1.0);
    m.def(
        "chain_freshness",
        [](const std::vector<double>& chain, double user_rate, double lam, double p, double q) {
            const auto out = chain_freshness(chain, user_rate, lam, p, q);
            return py::make_tuple(out.stages, out.user);
        },
        py::arg("chain_rates"), py::arg("user_rate"), py::arg("lam"), py::arg("cache_success") = 1.0,
        py::arg("user_success") = 1.0, "Returns (per-stage freshness, user freshness).");
    m.def(
        "multi_user_freshness",
        [](double cache_rate, const std::vector<double>& users, double lam, double p, double q) {
            return multi_user_freshness(cache_rate, users, lam, p, q);
        },
        py::arg("cache_rate"), py::arg("user_rates"), py::arg("lam"), py::arg("cache_success") = 1.0,
        py::arg("user_success") = 1.0);
    m.def(
        "alt_single_hop_freshness",
        [](const std::string& policy, double rate, double lam) {
            return alt_single_hop_freshness(update_policy_from_string(policy), rate, lam);
        },
        py::arg("policy"), py::arg("rate"), py::arg("lam"),
        "policy is 'fixed-order', 'random-order' or 'purely-random'.");

    m.def("geometric_lambdas", &geometric_lambdas, py::arg("total"), py::arg("q"), py::arg("n"));

    m.def(
        "threshold_inner_solve",
        [](std::vector<double> sigmas, std::vector<double> lambdas, double budget) {
            const auto sol = threshold_inner_solve({std::move(sigmas), std::move(lambdas), budget});
            py::dict d;
            d["rates"] = sol.rates;
            d["threshold"] = sol.threshold;
            d["degenerate"] = sol.degenerate;
            d["rounds"] = sol.rounds;
            return d;
        },
        py::arg("sigmas"), py::arg("lambdas"), py::arg("budget"));

    m.def(
        "evaluate",
        [](const std::vector<double>& lambdas, const std::string& kind, const std::vector<double>& cache_budgets,
           const std::vector<double>& user_budgets, const Matrix& cache_rates, const Matrix& user_rates,
           const std::vector<double>& weights, const std::vector<double>& cache_success,
           const std::vector<double>& user_success) {
            const auto p = make_profile(lambdas, weights, cache_success, user_success);
            const auto topo = make_topology(kind, lambdas.size(), cache_budgets, user_budgets);
            return report_dict(evaluate(p, topo, RateAllocation{cache_rates, user_rates}));
        },
        py::arg("lambdas"), py::arg("kind"), py::arg("cache_budgets"), py::arg("user_budgets"),
        py::arg("cache_rates"), py::arg("user_rates"), py::arg("weights") = std::vector<double>{},
        py::arg("cache_success") = std::vector<double>{}, py::arg("user_success") = std::vector<double>{});

    m.def(
        "optimize",
        [](const std::vector<double>& lambdas, const std::string& kind, const std::vector<double>& cache_budgets,
           const std::vector<double>& user_budgets, const std::vector<double>& weights,
           const std::vector<double>& cache_success, const std::vector<double>& user_success,
           std::size_t max_outer_iterations) {
            const auto p = make_profile(lambdas, weights, cache_success, user_success);
            const auto topo = make_topology(kind, lambdas.size(), cache_budgets, user_budgets);
            OptimizerSettings settings;
            settings.max_outer_iterations = max_outer_iterations;
            const auto res = alternating_maximize(p, topo, settings);
            std::vector<double> objectives;
            for (const auto& it : res.trace.iterations) objectives.push_back(it.objective);
            py::dict d = allocation_dict(res.allocation);
            d["objective"] = objectives.empty() ? 0.0 : objectives.back();
            d["objective_trace"] = objectives;
            d["converged"] = res.trace.converged;
            d["iterations"] = res.trace.iterations_used;
            d["kkt_residual"] = max_kkt_residual(p, topo, res.allocation);
            return d;
        },
        py::arg("lambdas"), py::arg("kind"), py::arg("cache_budgets"), py::arg("user_budgets"),
        py::arg("weights") = std::vector<double>{}, py::arg("cache_success") = std::vector<double>{},
        py::arg("user_success") = std::vector<double>{}, py::arg("max_outer_iterations") = 10000,
        "Alternating maximization from a uniform start. Returns rates, objective trace and KKT residual.");

    m.def(
        "baseline_allocation",
        [](const std::string& policy, const std::vector<double>& lambdas, const std::string& kind,
           const std::vector<double>& cache_budgets, const std::vector<double>& user_budgets) {
            const auto p = make_profile(lambdas, {}, {}, {});
            const auto topo = make_topology(kind, lambdas.size(), cache_budgets, user_budgets);
            return allocation_dict(baseline_allocation(baseline_policy_from_string(policy), topo, p));
        },
        py::arg("policy"), py::arg("lambdas"), py::arg("kind"), py::arg("cache_budgets"),
        py::arg("user_budgets"));

    m.def(
        "simulate_file",
        [](double lam, const std::vector<double>& chain, const std::vector<double>& users, double horizon,
           std::size_t replications, std::uint64_t seed, std::vector<double> cache_success,
           std::vector<double> user_success) {
            SimConfig cfg;
            cfg.horizon = horizon;
            cfg.replications = replications;
            cfg.seed = seed;
            const auto est =
                simulate_file(lam, chain, users, cfg, LinkSuccess{std::move(cache_success), std::move(user_success)});
            py::list caches, user_list;
            for (const auto& iv : est.caches) caches.append(interval(iv));
            for (const auto& iv : est.users) user_list.append(interval(iv));
            py::dict d;
            d["caches"] = caches;
            d["users"] = user_list;
            d["events"] = est.events;
            d["monotonicity_violations"] = est.monotonicity_violations;
            return d;
        },
        py::arg("lam"), py::arg("chain_rates"), py::arg("user_rates"), py::arg("horizon"),
        py::arg("replications") = 20, py::arg("seed") = 0, py::arg("cache_success") = std::vector<double>{},
        py::arg("user_success") = std::vector<double>{},
        "Monte Carlo freshness of one file. Each node maps to (mean, 99% half-width).");

    m.def("preset_names", &preset_names);
    m.def(
        "preset_config", [](const std::string& name) { return to_json(preset(name)).dump(); }, py::arg("name"),
        "A bundled scenario as a JSON string.");
    m.def(
        "run_scenario",
        [](const std::string& config_json) {
            const auto cfg = parse_config(nlohmann::json::parse(config_json));
            std::ostringstream os;
            write_csv(os, run_scenario(cfg));
            return os.str();
        },
        py::arg("config_json"), "Runs a scenario given as a JSON string and returns the CSV text.");
}
