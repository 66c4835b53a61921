#include "cachefresh/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cachefresh/analytics.hpp"

namespace cachefresh {

std::string to_string(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::single_cache: return "single_cache";
        case TopologyKind::serial_chain: return "serial_chain";
        case TopologyKind::multi_user: return "multi_user";
    }
    return "unknown";
}

TopologyKind topology_kind_from_string(const std::string& name) {
    if (name == "single_cache") return TopologyKind::single_cache;
    if (name == "serial_chain") return TopologyKind::serial_chain;
    if (name == "multi_user") return TopologyKind::multi_user;
    throw std::invalid_argument("unknown topology kind: " + name);
}

Topology Topology::single_cache(std::size_t n, double cache_budget, double user_budget) {
    return Topology{TopologyKind::single_cache, {cache_budget}, {user_budget}, n};
}

Topology Topology::serial_chain(std::size_t n, std::vector<double> cache_budgets, double user_budget) {
    return Topology{TopologyKind::serial_chain, std::move(cache_budgets), {user_budget}, n};
}

Topology Topology::multi_user(std::size_t n, double cache_budget, std::vector<double> user_budgets) {
    return Topology{TopologyKind::multi_user, {cache_budget}, std::move(user_budgets), n};
}

std::string node_label(NodeId node) {
    return (node.kind == NodeKind::cache ? "cache" : "user") + std::to_string(node.index + 1);
}

const std::vector<double>& RateAllocation::rates(NodeId node) const {
    const auto& rows = node.kind == NodeKind::cache ? cache_rates : user_rates;
    if (node.index >= rows.size()) throw std::out_of_range("unknown node " + node_label(node));
    return rows[node.index];
}

std::vector<double>& RateAllocation::rates(NodeId node) {
    auto& rows = node.kind == NodeKind::cache ? cache_rates : user_rates;
    if (node.index >= rows.size()) throw std::out_of_range("unknown node " + node_label(node));
    return rows[node.index];
}

RateAllocation RateAllocation::uniform(const Topology& topo) {
    RateAllocation alloc;
    const auto n = static_cast<double>(topo.files);
    for (double b : topo.cache_budgets) alloc.cache_rates.emplace_back(topo.files, b / n);
    for (double b : topo.user_budgets) alloc.user_rates.emplace_back(topo.files, b / n);
    return alloc;
}

namespace {

std::string describe(const char* what, std::size_t i, double value) {
    std::ostringstream os;
    os << what << " [" << i << "] = " << value;
    return os.str();
}

std::string join(const std::vector<ValidationError>& errors) {
    std::string msg = "invalid input:";
    for (const auto& e : errors) msg += "\n  " + e.message;
    return msg;
}

void check_rows(const std::vector<std::vector<double>>& rows, const std::vector<double>& budgets,
                std::size_t n, NodeKind kind, std::vector<ValidationError>& out) {
    if (rows.size() != budgets.size()) {
        out.push_back({ValidationCode::dimension_mismatch,
                       std::string(kind == NodeKind::cache ? "cache" : "user") + " row count " +
                           std::to_string(rows.size()) + " does not match topology (" +
                           std::to_string(budgets.size()) + ")"});
        return;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string label = node_label({kind, r});
        if (rows[r].size() != n) {
            out.push_back({ValidationCode::dimension_mismatch,
                           label + " has " + std::to_string(rows[r].size()) + " rates, expected " +
                               std::to_string(n)});
            continue;
        }
        double sum = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rows[r][i];
            if (!std::isfinite(x)) {
                out.push_back({ValidationCode::nonfinite_rate, describe((label + " rate").c_str(), i, x)});
                finite = false;
            } else if (x < 0.0) {
                out.push_back({ValidationCode::negative_rate, describe((label + " rate").c_str(), i, x)});
            }
            sum += x;
        }
        if (finite && sum > budgets[r] * (1.0 + kBudgetTolerance)) {
            std::ostringstream os;
            os << label << " rates sum to " << sum << ", budget is " << budgets[r];
            out.push_back({ValidationCode::budget_exceeded, os.str()});
        }
    }
}

}  // namespace

ValidationFailure::ValidationFailure(std::vector<ValidationError> errors)
    : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}

std::vector<ValidationError> validate_profile(const SourceProfile& profile) {
    std::vector<ValidationError> out;
    const std::size_t n = profile.file_count();
    if (n == 0) {
        out.push_back({ValidationCode::empty_profile, "source profile has no files"});
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double l = profile.lambdas[i];
        if (!(l > 0.0) || !std::isfinite(l)) {
            out.push_back({ValidationCode::nonpositive_lambda, describe("lambda", i, l)});
        }
    }
    auto check_len = [&](const std::vector<double>& v, const char* name) {
        if (!v.empty() && v.size() != n) {
            out.push_back({ValidationCode::dimension_mismatch,
                           std::string(name) + " has " + std::to_string(v.size()) +
                               " entries, expected " + std::to_string(n)});
            return false;
        }
        return true;
    };
    if (check_len(profile.weights, "weights")) {
        for (std::size_t i = 0; i < profile.weights.size(); ++i) {
            const double w = profile.weights[i];
            if (!(w >= 0.0) || !std::isfinite(w)) {
                out.push_back({ValidationCode::invalid_weight, describe("weight", i, w)});
            }
        }
    }
    for (const auto* probs : {&profile.cache_success, &profile.user_success}) {
        const char* name = probs == &profile.cache_success ? "cache_success" : "user_success";
        if (!check_len(*probs, name)) continue;
        for (std::size_t i = 0; i < probs->size(); ++i) {
            const double p = (*probs)[i];
            if (!(p > 0.0 && p <= 1.0)) {
                out.push_back({ValidationCode::invalid_probability, describe(name, i, p)});
            }
        }
    }
    return out;
}

std::vector<ValidationError> validate_topology(const SourceProfile& profile, const Topology& topo) {
    std::vector<ValidationError> out;
    if (topo.files != profile.file_count()) {
        out.push_back({ValidationCode::dimension_mismatch,
                       "topology has " + std::to_string(topo.files) + " files, profile has " +
                           std::to_string(profile.file_count())});
    }
    const std::size_t m = topo.cache_count();
    const std::size_t d = topo.user_count();
    bool shape_ok = true;
    switch (topo.kind) {
        case TopologyKind::single_cache: shape_ok = m == 1 && d == 1; break;
        case TopologyKind::serial_chain: shape_ok = m >= 1 && d == 1; break;
        case TopologyKind::multi_user: shape_ok = m == 1 && d >= 1; break;
    }
    if (!shape_ok) {
        out.push_back({ValidationCode::invalid_topology,
                       to_string(topo.kind) + " cannot have " + std::to_string(m) + " caches and " +
                           std::to_string(d) + " users"});
    }
    for (std::size_t r = 0; r < m; ++r) {
        const double b = topo.cache_budgets[r];
        if (!(b > 0.0) || !std::isfinite(b)) {
            out.push_back({ValidationCode::invalid_budget, describe("cache budget", r, b)});
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        const double b = topo.user_budgets[k];
        if (!(b > 0.0) || !std::isfinite(b)) {
            out.push_back({ValidationCode::invalid_budget, describe("user budget", k, b)});
        }
    }
    return out;
}

std::vector<ValidationError> validate(const SourceProfile& profile, const Topology& topo,
                                      const RateAllocation& alloc) {
    auto out = validate_profile(profile);
    auto topo_errors = validate_topology(profile, topo);
    out.insert(out.end(), topo_errors.begin(), topo_errors.end());
    check_rows(alloc.cache_rates, topo.cache_budgets, topo.files, NodeKind::cache, out);
    check_rows(alloc.user_rates, topo.user_budgets, topo.files, NodeKind::user, out);
    return out;
}

void throw_if_invalid(std::vector<ValidationError> errors) {
    if (!errors.empty()) throw ValidationFailure(std::move(errors));
}

FreshnessReport evaluate(const SourceProfile& profile, const Topology& topo,
                         const RateAllocation& alloc) {
    throw_if_invalid(validate(profile, topo, alloc));

    const std::size_t n = topo.files;
    const std::size_t m = topo.cache_count();
    const std::size_t d = topo.user_count();
    FreshnessReport report;
    report.cache_freshness.assign(m, std::vector<double>(n));
    report.user_freshness.assign(d, std::vector<double>(n));
    report.total_per_user.assign(d, 0.0);

    std::vector<double> chain(m);
    std::vector<double> users(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double lambda = profile.lambdas[i];
        for (std::size_t r = 0; r < m; ++r) chain[r] = alloc.cache_rates[r][i];
        for (std::size_t k = 0; k < d; ++k) users[k] = alloc.user_rates[k][i];

        // Every topology is a chain of caches with d users behind the last one.
        const auto stages = chain_freshness(chain, 0.0, lambda, profile.cache_p(i), profile.user_q(i));
        for (std::size_t r = 0; r < m; ++r) report.cache_freshness[r][i] = stages.stages[r];
        const double at_cache = stages.stages.back();
        for (std::size_t k = 0; k < d; ++k) {
            const double f = single_hop_freshness(profile.user_q(i) * users[k], lambda) * at_cache;
            report.user_freshness[k][i] = f;
            report.total_per_user[k] += profile.weight(i) * f;
        }
    }
    report.grand_total = std::accumulate(report.total_per_user.begin(), report.total_per_user.end(), 0.0);
    return report;
}

double total_objective(const SourceProfile& profile, const Topology& topo,
                       const RateAllocation& alloc) {
    return evaluate(profile, topo, alloc).grand_total;
}

}  // namespace cachefresh
