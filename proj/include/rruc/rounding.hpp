#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rruc/fleet.hpp"
#include "rruc/relaxed.hpp"

namespace rruc {

/// Binary commitment produced by relax-and-round.
struct CommitmentSolution {
    std::vector<std::uint8_t> u;  // fleet order
    std::vector<double> p;        // MW, 0 for uncommitted units
    double objective = 0.0;       // USD/h
    std::size_t k_star = 0;       // number of leading units (in `order`) committed
    std::size_t m = 0;            // shortest reserve-feasible prefix
    std::vector<std::size_t> order;
    double relaxed_objective = 0.0;  // USD/h, lower bound
    bool relaxed_converged = false;
    std::size_t dispatch_solves = 0;
    double wall_time = 0.0;  // seconds
    /// (k, dispatch objective) for every evaluated cut point, when tracing.
    std::vector<std::pair<std::size_t, double>> trace;
};

/// Unit ordering given the relaxed solution; must return a permutation of [0, n).
using OrderingPolicy = std::function<std::vector<std::size_t>(const Fleet&, const RelaxedSolution&)>;

struct RoundingOptions {
    RelaxedOptions relaxed;
    std::size_t stride = 1;
    unsigned threads = 0;  // 0: one per hardware thread
    ReserveScope reserve_scope = ReserveScope::Fleet;
    bool trace = false;
    OrderingPolicy ordering;  // empty: order_by_y
};

/// Indices sorted by y descending; ties by cost at P_max ascending, then index.
std::vector<std::size_t> order_by_y(const Fleet& fleet, const RelaxedSolution& relaxed);

/// Smallest m such that the first m units of `order` meet the reserve.
/// Throws InfeasibleError("reserve") if even the whole fleet does not.
std::size_t minimal_prefix(std::span<const std::size_t> order, const Fleet& fleet,
                           ReserveScope scope = ReserveScope::Fleet);

/// Cut points evaluated for a sweep from m to n with the given stride.
std::vector<std::size_t> candidate_cuts(std::size_t m, std::size_t n, std::size_t stride);

/// Relax, order, then dispatch every prefix k in [m, n] (in parallel) and keep
/// the cheapest; ties within 1e-9 relative go to the smaller k.
CommitmentSolution relax_and_round(const Fleet& fleet, const RoundingOptions& options = {});

/// relax_and_round restricted to k in {m, m + stride, ...} plus n.
CommitmentSolution relax_and_round_with_stride(const Fleet& fleet, std::size_t stride, RoundingOptions options = {});

}  // namespace rruc
