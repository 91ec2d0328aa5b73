#include "rruc/rounding.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>

#include "rruc/dispatch.hpp"
#include "rruc/errors.hpp"
#include "rruc/parallel.hpp"
#include "rruc/text.hpp"

namespace rruc {

std::vector<std::size_t> order_by_y(const Fleet& fleet, const RelaxedSolution& relaxed) {
    if (relaxed.y.size() != fleet.size()) throw InputError("order_by_y: solution does not match fleet");
    std::vector<std::size_t> order(fleet.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (relaxed.y[i] != relaxed.y[j]) return relaxed.y[i] > relaxed.y[j];
        const auto& gi = fleet.generators[i];
        const auto& gj = fleet.generators[j];
        const double ci = gi.cost(gi.p_max), cj = gj.cost(gj.p_max);
        if (ci != cj) return ci < cj;
        return i < j;
    });
    return order;
}

std::size_t minimal_prefix(std::span<const std::size_t> order, const Fleet& fleet, ReserveScope scope) {
    const double base = fleet.demand + 3.0 * fleet.sigma_d;
    double fleet_largest = 0.0;
    for (const auto& g : fleet.generators) fleet_largest = std::max(fleet_largest, g.p_max);

    double capacity = 0.0, largest = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& g = fleet.generators[order[k]];
        capacity += g.p_max;
        largest = std::max(largest, g.p_max);
        const double requirement = base + (scope == ReserveScope::Fleet ? fleet_largest : largest);
        if (capacity >= requirement) return k + 1;
    }
    throw InfeasibleError("reserve", "reserve constraint infeasible: total capacity " + format_double(capacity) +
                                         " MW < requirement " + format_double(base + fleet_largest) + " MW");
}

std::vector<std::size_t> candidate_cuts(std::size_t m, std::size_t n, std::size_t stride) {
    if (stride == 0) throw InputError("stride must be >= 1");
    std::vector<std::size_t> ks;
    for (std::size_t k = m; k <= n; k += stride) ks.push_back(k);
    if (ks.empty() || ks.back() != n) ks.push_back(n);
    return ks;
}

CommitmentSolution relax_and_round(const Fleet& fleet, const RoundingOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (fleet.empty()) throw InputError("rruc: empty fleet");

    const RelaxedSolution relaxed = solve_relaxed(fleet, options.relaxed);
    std::vector<std::size_t> order =
        options.ordering ? options.ordering(fleet, relaxed) : order_by_y(fleet, relaxed);
    {
        auto check = order;
        std::sort(check.begin(), check.end());
        for (std::size_t i = 0; i < check.size(); ++i)
            if (check[i] != i || check.size() != fleet.size())
                throw InputError("rruc: ordering policy did not return a permutation");
    }

    const std::size_t n = fleet.size();
    const std::size_t m = minimal_prefix(order, fleet, options.reserve_scope);
    const auto cuts = candidate_cuts(m, n, options.stride);

    std::vector<double> objective(cuts.size());
    std::atomic<std::size_t> solves{0};
    parallel_for(cuts.size(), options.threads, [&](std::size_t c) {
        const std::span<const std::size_t> prefix(order.data(), cuts[c]);
        objective[c] = dispatch(fleet, prefix, fleet.demand).objective;
        solves.fetch_add(1, std::memory_order_relaxed);
    });

    // Fixed-order reduction keeps the answer independent of worker count.
    std::size_t best = 0;
    for (std::size_t c = 1; c < cuts.size(); ++c) {
        if (objective[c] < objective[best] - 1e-9 * std::abs(objective[best])) best = c;
    }

    CommitmentSolution s;
    s.k_star = cuts[best];
    s.m = m;
    s.order = std::move(order);
    s.relaxed_objective = relaxed.objective;
    s.relaxed_converged = relaxed.converged;
    s.dispatch_solves = solves.load();
    s.u.assign(n, 0);
    s.p.assign(n, 0.0);
    const std::span<const std::size_t> chosen(s.order.data(), s.k_star);
    const auto d = dispatch(fleet, chosen, fleet.demand);
    for (std::size_t j = 0; j < chosen.size(); ++j) {
        s.u[chosen[j]] = 1;
        s.p[chosen[j]] = d.p[j];
    }
    s.objective = d.objective;
    if (options.trace) {
        for (std::size_t c = 0; c < cuts.size(); ++c) s.trace.emplace_back(cuts[c], objective[c]);
    }
    s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

CommitmentSolution relax_and_round_with_stride(const Fleet& fleet, std::size_t stride, RoundingOptions options) {
    if (stride == 0) throw InputError("stride must be >= 1");
    options.stride = stride;
    return relax_and_round(fleet, options);
}

}  // namespace rruc
