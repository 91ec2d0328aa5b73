#include "rruc/audit.hpp"

#include <algorithm>
#include <cmath>

#include "rruc/text.hpp"

namespace rruc {

AuditReport audit_commitment(const Fleet& fleet, std::span<const std::uint8_t> u, std::span<const double> p,
                             double claimed_objective, ReserveScope scope, double tol) {
    AuditReport report;
    auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
    const std::size_t n = fleet.size();
    if (u.size() != n || p.size() != n) {
        fail("size mismatch: fleet has " + std::to_string(n) + " units, u has " + std::to_string(u.size()) +
             ", p has " + std::to_string(p.size()));
        return report;
    }

    double served = 0.0, capacity = 0.0, cost = 0.0, largest_all = 0.0, largest_on = 0.0;
    std::size_t on = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = fleet.generators[i];
        largest_all = std::max(largest_all, g.p_max);
        if (u[i] > 1) fail("u[" + g.id + "] is not binary");
        if (!u[i]) {
            if (p[i] != 0.0) fail("unit " + g.id + " is off but dispatched at " + format_double(p[i]) + " MW");
            continue;
        }
        ++on;
        const double slack = tol * std::max(1.0, g.p_max);
        if (p[i] < g.p_min - slack || p[i] > g.p_max + slack)
            fail("unit " + g.id + " output " + format_double(p[i]) + " MW outside [" + format_double(g.p_min) +
                 ", " + format_double(g.p_max) + "]");
        served += p[i];
        capacity += g.p_max;
        largest_on = std::max(largest_on, g.p_max);
        cost += g.a * p[i] * p[i] + g.b * p[i] + g.c;
    }
    if (on == 0) fail("no unit committed");
    const double d = fleet.demand;
    if (served < d - tol * std::max(1.0, d))
        fail("demand: served " + format_double(served) + " MW < D = " + format_double(d) + " MW");
    const double reserve =
        d + 3.0 * fleet.sigma_d + (scope == ReserveScope::Fleet ? largest_all : largest_on);
    if (capacity < reserve - tol * std::max(1.0, reserve))
        fail("reserve: committed capacity " + format_double(capacity) + " MW < requirement " +
             format_double(reserve) + " MW");
    if (std::abs(cost - claimed_objective) > 1e-9 * std::max(1.0, std::abs(cost)))
        fail("objective: claimed " + format_double(claimed_objective) + " but recomputed " + format_double(cost));
    return report;
}

AuditReport audit_commitment(const Fleet& fleet, const CommitmentSolution& s, ReserveScope scope, double tol) {
    return audit_commitment(fleet, s.u, s.p, s.objective, scope, tol);
}

}  // namespace rruc
