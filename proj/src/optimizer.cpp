#include "cachefresh/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cachefresh {

namespace {

double factor(double rate, double lambda) {
    return rate > 0.0 ? rate / (rate + lambda) : 0.0;
}

void check_inner(const InnerProblem& p) {
    if (p.sigmas.size() != p.lambdas.size()) {
        throw std::invalid_argument("inner problem: sigma and lambda lengths differ");
    }
    if (!(p.budget > 0.0) || !std::isfinite(p.budget)) {
        throw std::invalid_argument("inner problem: budget must be positive and finite");
    }
    for (std::size_t i = 0; i < p.sigmas.size(); ++i) {
        if (!(p.lambdas[i] > 0.0) || !std::isfinite(p.lambdas[i])) {
            throw std::invalid_argument("inner problem: lambda must be positive and finite");
        }
        if (!(p.sigmas[i] >= 0.0) || !std::isfinite(p.sigmas[i])) {
            throw std::invalid_argument("inner problem: sigma must be non-negative and finite");
        }
    }
}

// Nodes whose freshness for a file is a product with `dropped`'s factor and
// therefore contribute nothing once `dropped` stops requesting that file.
std::vector<NodeId> dependents(const Topology& topo, NodeId dropped) {
    std::vector<NodeId> out;
    if (topo.kind == TopologyKind::multi_user) {
        if (dropped.kind == NodeKind::cache) {
            for (std::size_t k = 0; k < topo.user_count(); ++k) out.push_back({NodeKind::user, k});
        }
        return out;
    }
    for (NodeId node : block_order(topo)) {
        if (!(node == dropped)) out.push_back(node);
    }
    return out;
}

void apply_pairing(const Topology& topo, RateAllocation& alloc, NodeId solved) {
    const auto& rates = alloc.rates(solved);
    const auto deps = dependents(topo, solved);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates[i] > 0.0) continue;
        for (NodeId dep : deps) alloc.rates(dep)[i] = 0.0;
    }
}

std::vector<std::size_t> support_of(const std::vector<double>& rates) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates[i] > 0.0) out.push_back(i);
    }
    return out;
}

}  // namespace

InnerSolution threshold_inner_solve(const InnerProblem& problem) {
    check_inner(problem);
    const std::size_t n = problem.sigmas.size();
    InnerSolution out;
    out.rates.assign(n, 0.0);

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        if (problem.sigmas[i] > 0.0) active.push_back(i);
    }
    if (active.empty()) {
        out.degenerate = true;
        return out;
    }

    double root_beta = 0.0;
    for (;;) {
        ++out.rounds;
        double sum_root = 0.0;
        double sum_lambda = 0.0;
        for (std::size_t i : active) {
            sum_root += std::sqrt(problem.sigmas[i] * problem.lambdas[i]);
            sum_lambda += problem.lambdas[i];
        }
        root_beta = sum_root / (problem.budget + sum_lambda);
        const double beta = root_beta * root_beta;

        // The file with the largest sigma/lambda always survives, so the
        // support never empties.
        const auto removed = std::erase_if(active, [&](std::size_t i) {
            return problem.sigmas[i] / problem.lambdas[i] <= beta;
        });
        if (removed == 0) break;
    }

    for (std::size_t i : active) {
        const double x = std::sqrt(problem.sigmas[i] * problem.lambdas[i]) / root_beta - problem.lambdas[i];
        out.rates[i] = std::max(0.0, x);
    }
    out.threshold = root_beta * root_beta;
    return out;
}

double inner_objective(const InnerProblem& problem, const std::vector<double>& rates) {
    double total = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        total += problem.sigmas[i] * factor(rates[i], problem.lambdas[i]);
    }
    return total;
}

std::vector<NodeId> block_order(const Topology& topo) {
    std::vector<NodeId> order;
    if (topo.kind == TopologyKind::multi_user) {
        for (std::size_t k = 0; k < topo.user_count(); ++k) order.push_back({NodeKind::user, k});
        for (std::size_t r = 0; r < topo.cache_count(); ++r) order.push_back({NodeKind::cache, r});
    } else {
        for (std::size_t r = 0; r < topo.cache_count(); ++r) order.push_back({NodeKind::cache, r});
        for (std::size_t k = 0; k < topo.user_count(); ++k) order.push_back({NodeKind::user, k});
    }
    return order;
}

InnerProblem build_sigma(const SourceProfile& profile, const Topology& topo,
                         const RateAllocation& alloc, NodeId target) {
    const auto& budgets = target.kind == NodeKind::cache ? topo.cache_budgets : topo.user_budgets;
    if (target.index >= budgets.size()) {
        throw std::out_of_range("unknown node " + node_label(target));
    }
    const std::size_t n = topo.files;
    InnerProblem problem;
    problem.budget = budgets[target.index];
    problem.sigmas.resize(n);
    problem.lambdas.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double lambda = profile.lambdas[i];
        const double p = profile.cache_p(i);
        const double q = profile.user_q(i);
        double sigma = 1.0;

        if (topo.kind == TopologyKind::multi_user && target.kind == NodeKind::cache) {
            sigma = 0.0;
            for (const auto& user : alloc.user_rates) sigma += factor(q * user[i], lambda);
        } else {
            for (std::size_t r = 0; r < alloc.cache_rates.size(); ++r) {
                if (target.kind == NodeKind::cache && r == target.index) continue;
                sigma *= factor(p * alloc.cache_rates[r][i], lambda);
            }
            // In a star a user sees only the cache; in a chain the single
            // user's factor enters every cache's coefficient.
            if (target.kind == NodeKind::cache) {
                sigma *= factor(q * alloc.user_rates[0][i], lambda);
            }
        }
        problem.sigmas[i] = profile.weight(i) * sigma;
        problem.lambdas[i] = lambda / (target.kind == NodeKind::cache ? p : q);
    }
    return problem;
}

void validate_settings(const OptimizerSettings& settings) {
    if (settings.max_outer_iterations < 1) {
        throw std::invalid_argument("max_outer_iterations must be at least 1");
    }
    if (!(settings.objective_tolerance > 0.0) || !(settings.kkt_tolerance > 0.0)) {
        throw std::invalid_argument("optimizer tolerances must be positive");
    }
}

SolveResult alternating_maximize(const SourceProfile& profile, const Topology& topo,
                                 const OptimizerSettings& settings,
                                 const std::optional<RateAllocation>& init) {
    validate_settings(settings);
    auto errors = validate_profile(profile);
    auto topo_errors = validate_topology(profile, topo);
    errors.insert(errors.end(), topo_errors.begin(), topo_errors.end());
    throw_if_invalid(std::move(errors));

    SolveResult result;
    if (settings.init == InitPolicy::given) {
        if (!init) throw std::invalid_argument("InitPolicy::given requires an initial allocation");
        throw_if_invalid(validate(profile, topo, *init));
        result.allocation = *init;
    } else {
        result.allocation = RateAllocation::uniform(topo);
    }

    auto& alloc = result.allocation;
    auto& trace = result.trace;
    const auto order = block_order(topo);
    double objective = total_objective(profile, topo, alloc);

    for (std::size_t iter = 1; iter <= settings.max_outer_iterations; ++iter) {
        const double cycle_start = objective;
        for (NodeId node : order) {
            const auto solution = threshold_inner_solve(build_sigma(profile, topo, alloc, node));
            RateAllocation candidate = alloc;
            candidate.rates(node) = solution.rates;
            apply_pairing(topo, candidate, node);
            const double candidate_objective = total_objective(profile, topo, candidate);
            if (candidate_objective >= objective) {
                alloc = std::move(candidate);
                objective = candidate_objective;
            }
        }

        IterationRecord record;
        record.objective = objective;
        record.max_kkt_residual = max_kkt_residual(profile, topo, alloc);
        for (NodeId node : order) record.supports.push_back(support_of(alloc.rates(node)));
        trace.iterations.push_back(std::move(record));
        trace.iterations_used = iter;

        if (std::abs(objective - cycle_start) < settings.objective_tolerance &&
            trace.iterations.back().max_kkt_residual < settings.kkt_tolerance) {
            trace.converged = true;
            break;
        }
    }
    return result;
}

std::vector<NodeResidual> kkt_residuals(const SourceProfile& profile, const Topology& topo,
                                        const RateAllocation& alloc) {
    throw_if_invalid(validate(profile, topo, alloc));
    std::vector<NodeResidual> out;
    for (NodeId node : block_order(topo)) {
        const auto problem = build_sigma(profile, topo, alloc, node);
        const auto& x = alloc.rates(node);
        const std::size_t n = x.size();

        std::vector<double> gain(n);
        double on_sum = 0.0;
        std::size_t on_count = 0;
        double rate_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double denom = x[i] + problem.lambdas[i];
            gain[i] = problem.sigmas[i] * problem.lambdas[i] / (denom * denom);
            rate_sum += x[i];
            if (x[i] > 0.0) {
                on_sum += gain[i];
                ++on_count;
            }
        }

        NodeResidual res{node, 0.0, 0.0};
        if (on_count == 0) {
            for (double g : gain) res.residual = std::max(res.residual, g);
            out.push_back(res);
            continue;
        }
        res.multiplier = on_sum / static_cast<double>(on_count);
        double spread = 0.0;
        double excess = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (x[i] > 0.0) {
                spread = std::max(spread, std::abs(gain[i] - res.multiplier));
            } else {
                excess = std::max(excess, gain[i] - res.multiplier);
            }
        }
        res.residual = spread + excess;
        // Unused budget is only stationary with a zero multiplier.
        if (rate_sum < problem.budget * (1.0 - kBudgetTolerance)) res.residual += res.multiplier;
        out.push_back(res);
    }
    return out;
}

double max_kkt_residual(const SourceProfile& profile, const Topology& topo,
                        const RateAllocation& alloc) {
    double worst = 0.0;
    for (const auto& r : kkt_residuals(profile, topo, alloc)) worst = std::max(worst, r.residual);
    return worst;
}

std::string to_string(BaselinePolicy policy) {
    return policy == BaselinePolicy::lambda_proportional ? "lambda-proportional" : "lambda-inverse";
}

BaselinePolicy baseline_policy_from_string(const std::string& name) {
    if (name == "lambda-proportional") return BaselinePolicy::lambda_proportional;
    if (name == "lambda-inverse") return BaselinePolicy::lambda_inverse;
    throw std::invalid_argument("unknown baseline policy: " + name);
}

RateAllocation baseline_allocation(BaselinePolicy policy, const Topology& topo,
                                   const SourceProfile& profile) {
    auto errors = validate_profile(profile);
    auto topo_errors = validate_topology(profile, topo);
    errors.insert(errors.end(), topo_errors.begin(), topo_errors.end());
    throw_if_invalid(std::move(errors));

    std::vector<double> shares(topo.files);
    for (std::size_t i = 0; i < topo.files; ++i) {
        const double l = profile.lambdas[i];
        shares[i] = policy == BaselinePolicy::lambda_proportional ? l : 1.0 / l;
    }
    double total = 0.0;
    for (double s : shares) total += s;

    auto split = [&](double budget) {
        std::vector<double> row(topo.files);
        for (std::size_t i = 0; i < topo.files; ++i) row[i] = budget * shares[i] / total;
        return row;
    };
    RateAllocation alloc;
    for (double b : topo.cache_budgets) alloc.cache_rates.push_back(split(b));
    for (double b : topo.user_budgets) alloc.user_rates.push_back(split(b));
    return alloc;
}

}  // namespace cachefresh
