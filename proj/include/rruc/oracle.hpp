#pragma once

#include <cstdint>
#include <vector>

#include "rruc/fleet.hpp"

namespace rruc {

struct OracleOptions {
    std::size_t n_cap = 20;
    unsigned threads = 0;
    ReserveScope reserve_scope = ReserveScope::Fleet;
};

struct OracleResult {
    std::vector<std::uint8_t> u;
    std::vector<double> p;       // MW, 0 for uncommitted units
    double objective = 0.0;      // USD/h
    std::size_t evaluated = 0;   // feasible commitments dispatched
    double wall_time = 0.0;      // seconds
};

/// Global optimum by enumerating all 2^n commitments. Ties go to fewer
/// committed units, then to the lexicographically smallest u.
/// Throws InputError if n > n_cap, InfeasibleError if no subset is feasible.
OracleResult exhaustive_uc(const Fleet& fleet, const OracleOptions& options = {});

}  // namespace rruc
