#include "rruc/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rruc/errors.hpp"
#include "rruc/text.hpp"

namespace rruc {

namespace {

constexpr int kMaxBisection = 200;
constexpr double kLambdaRelTol = 1e-12;
constexpr double kMarginRelTol = 1e-9;

double quad_output(const Generator& g, double lambda) {
    return std::clamp((lambda - g.b) / (2.0 * g.a), g.p_min, g.p_max);
}

// Generic over how the committed units are reached so the indexed overload
// does not copy generators.
template <class Get>
DispatchResult solve(std::size_t n, Get&& unit, double demand) {
    if (n == 0) throw InputError("dispatch: empty committed set");

    double sum_min = 0.0, sum_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sum_min += unit(j).p_min;
        sum_max += unit(j).p_max;
    }
    if (sum_max < demand - 1e-12 * std::max(1.0, demand)) {
        throw InfeasibleError("demand", "dispatch infeasible: committed capacity " + format_double(sum_max) +
                                            " MW < demand " + format_double(demand) + " MW");
    }

    DispatchResult r;
    r.p.resize(n);
    r.binding.assign(n, Binding::Lower);

    if (sum_min >= demand) {
        for (std::size_t j = 0; j < n; ++j) {
            r.p[j] = unit(j).p_min;
            r.objective += unit(j).cost(r.p[j]);
        }
        return r;
    }

    // Total output with linear units at their price counted at P_max (right limit).
    auto supply = [&](double lambda) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto& g = unit(j);
            if (g.a > 0.0) s += quad_output(g, lambda);
            else s += lambda >= g.b ? g.p_max : g.p_min;
        }
        return s;
    };

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        lo = std::min(lo, unit(j).b);
        hi = std::max(hi, unit(j).marginal_cost(unit(j).p_max));
    }
    double lambda;
    if (supply(lo) >= demand) {
        lambda = lo;
    } else {
        for (int i = 0; i < 64 && supply(hi) < demand; ++i) hi = hi > 0.0 ? 2.0 * hi : 1.0;
        for (int i = 0; i < kMaxBisection; ++i) {
            if (hi - lo <= kLambdaRelTol * std::max(1.0, std::abs(hi))) break;
            const double mid = 0.5 * (lo + hi);
            (supply(mid) >= demand ? hi : lo) = mid;
        }
        lambda = hi;
    }

    // Linear units priced at the margin share whatever the rest leaves over.
    const double margin = kMarginRelTol * std::max(1.0, std::abs(lambda));
    std::vector<std::size_t> at_margin;
    std::vector<char> is_margin(n, 0);
    double snap = lambda, snap_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        const auto& g = unit(j);
        if (g.a == 0.0 && std::abs(g.b - lambda) <= margin) {
            at_margin.push_back(j);
            is_margin[j] = 1;
            if (std::abs(g.b - lambda) < snap_dist) {
                snap_dist = std::abs(g.b - lambda);
                snap = g.b;
            }
        }
    }
    if (!at_margin.empty()) lambda = snap;

    auto place = [&](double lam) {
        double fixed = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto& g = unit(j);
            if (g.a > 0.0) r.p[j] = quad_output(g, lam);
            else if (is_margin[j]) continue;
            else r.p[j] = lam > g.b ? g.p_max : g.p_min;
            fixed += r.p[j];
        }
        return fixed;
    };

    double fixed = place(lambda);
    if (at_margin.empty()) {
        // Polish lambda in closed form over the interior quadratic units.
        double inv = 0.0, shifted = 0.0, bounded = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto& g = unit(j);
            if (g.a > 0.0 && r.p[j] > g.p_min && r.p[j] < g.p_max) {
                inv += 1.0 / (2.0 * g.a);
                shifted += g.b / (2.0 * g.a);
            } else {
                bounded += r.p[j];
            }
        }
        if (inv > 0.0) {
            const double polished = (demand - bounded + shifted) / inv;
            bool same_set = true;
            for (std::size_t j = 0; j < n && same_set; ++j) {
                const auto& g = unit(j);
                if (g.a > 0.0 && r.p[j] > g.p_min && r.p[j] < g.p_max) {
                    const double v = (polished - g.b) / (2.0 * g.a);
                    same_set = v >= g.p_min && v <= g.p_max;
                }
            }
            if (same_set) {
                for (std::size_t j = 0; j < n; ++j) {
                    const auto& g = unit(j);
                    if (g.a > 0.0 && r.p[j] > g.p_min && r.p[j] < g.p_max)
                        r.p[j] = std::clamp((polished - g.b) / (2.0 * g.a), g.p_min, g.p_max);
                }
                lambda = polished;
                fixed = std::accumulate(r.p.begin(), r.p.end(), 0.0);
            }
        }
    } else {
        std::sort(at_margin.begin(), at_margin.end(),
                  [&](std::size_t x, std::size_t y) { return unit(x).id < unit(y).id; });
        double extra = demand - fixed;
        for (std::size_t j : at_margin) extra -= unit(j).p_min;
        for (std::size_t j : at_margin) {
            const auto& g = unit(j);
            const double add = std::clamp(extra, 0.0, g.p_max - g.p_min);
            r.p[j] = std::min(g.p_min + add, g.p_max);
            extra -= add;
        }
    }

    // Absorb residual roundoff on units with room, in index order.
    double residual = demand - std::accumulate(r.p.begin(), r.p.end(), 0.0);
    for (std::size_t j = 0; j < n && std::abs(residual) > 1e-13 * std::max(1.0, demand); ++j) {
        const auto& g = unit(j);
        const bool movable = r.p[j] > g.p_min && r.p[j] < g.p_max;
        if (!movable) continue;
        const double nv = std::clamp(r.p[j] + residual, g.p_min, g.p_max);
        residual -= nv - r.p[j];
        r.p[j] = nv;
    }

    r.lambda = lambda;
    const double tol = 1e-9 * std::max(1.0, std::abs(lambda));
    for (std::size_t j = 0; j < n; ++j) {
        const auto& g = unit(j);
        r.objective += g.cost(r.p[j]);
        const double span = 1e-9 * std::max(1.0, g.p_max);
        const bool at_lo = r.p[j] <= g.p_min + span;
        const bool at_hi = r.p[j] >= g.p_max - span;
        if (at_lo && at_hi) r.binding[j] = g.marginal_cost(r.p[j]) <= lambda + tol ? Binding::Upper : Binding::Lower;
        else if (at_lo) r.binding[j] = Binding::Lower;
        else if (at_hi) r.binding[j] = Binding::Upper;
        else r.binding[j] = Binding::Interior;
    }
    return r;
}

}  // namespace

DispatchResult dispatch(std::span<const Generator> committed, double demand) {
    return solve(committed.size(), [&](std::size_t j) -> const Generator& { return committed[j]; }, demand);
}

DispatchResult dispatch(const Fleet& fleet, std::span<const std::size_t> indices, double demand) {
    return solve(
        indices.size(), [&](std::size_t j) -> const Generator& { return fleet.generators[indices[j]]; }, demand);
}

bool check_reserve(std::span<const Generator> committed, const ReserveRequirement& requirement) {
    double total = 0.0;
    for (const auto& g : committed) total += g.p_max;
    return total >= requirement.value;
}

}  // namespace rruc
