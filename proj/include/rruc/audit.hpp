#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rruc/fleet.hpp"
#include "rruc/rounding.hpp"

namespace rruc {

struct AuditReport {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
};

/// Checks a binary commitment against the unit-commitment constraints from
/// first principles: binary u, p = 0 off, bounds on, sum p >= D,
/// sum u P_max >= D + 3 sigma_D + max P_max, and the claimed objective.
/// Shares no code with the solvers.
AuditReport audit_commitment(const Fleet& fleet, std::span<const std::uint8_t> u, std::span<const double> p,
                             double claimed_objective, ReserveScope scope = ReserveScope::Fleet,
                             double tol = 1e-6);

AuditReport audit_commitment(const Fleet& fleet, const CommitmentSolution& solution,
                             ReserveScope scope = ReserveScope::Fleet, double tol = 1e-6);

}  // namespace rruc
