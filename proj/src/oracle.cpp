#include "rruc/oracle.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>

#include "rruc/dispatch.hpp"
#include "rruc/errors.hpp"
#include "rruc/parallel.hpp"

namespace rruc {

namespace {

struct Candidate {
    std::uint64_t mask = 0;
    double objective = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
};

// Strict total order: objective, then unit count, then lexicographic u
// (bit i is unit i, so the lowest differing bit decides).
bool better(std::uint64_t mask, double objective, const Candidate& best) {
    if (objective != best.objective) return objective < best.objective;
    const int ca = std::popcount(mask), cb = std::popcount(best.mask);
    if (ca != cb) return ca < cb;
    const std::uint64_t diff = mask ^ best.mask;
    if (diff == 0) return false;
    return (mask & (diff & (~diff + 1))) == 0;
}

}  // namespace

OracleResult exhaustive_uc(const Fleet& fleet, const OracleOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = fleet.size();
    if (n == 0) throw InputError("oracle: empty fleet");
    if (n > options.n_cap || n > 40)
        throw InputError("oracle: fleet has " + std::to_string(n) + " units, above the cap of " +
                         std::to_string(std::min<std::size_t>(options.n_cap, 40)));

    const double base = fleet.demand + 3.0 * fleet.sigma_d;
    double fleet_largest = 0.0;
    for (const auto& g : fleet.generators) fleet_largest = std::max(fleet_largest, g.p_max);
    const double need_at_least = base + (options.reserve_scope == ReserveScope::Fleet ? fleet_largest : 0.0);

    const std::uint64_t total = std::uint64_t{1} << n;
    const std::size_t chunks = std::min<std::uint64_t>(total, 256);
    const std::uint64_t per_chunk = (total + chunks - 1) / chunks;
    std::vector<Candidate> best(chunks);

    parallel_for(chunks, options.threads, [&](std::size_t c) {
        const std::uint64_t lo = c * per_chunk;
        const std::uint64_t hi = std::min(total, lo + per_chunk);
        if (lo >= hi) return;
        Candidate local;
        std::vector<std::size_t> idx;
        idx.reserve(n);
        // Walk the Gray-code sequence, updating committed capacity one toggle at a time.
        std::uint64_t mask = lo ^ (lo >> 1);
        double capacity = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) capacity += fleet.generators[i].p_max;
        for (std::uint64_t g = lo; g < hi; ++g) {
            if (g != lo) {
                const int bit = std::countr_zero(g);
                mask ^= std::uint64_t{1} << bit;
                capacity += (mask >> bit & 1) ? fleet.generators[bit].p_max : -fleet.generators[bit].p_max;
            }
            if (mask == 0 || capacity < need_at_least - 1e-9 * std::max(1.0, need_at_least)) continue;
            idx.clear();
            double largest = 0.0, exact_capacity = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask >> i & 1) {
                    idx.push_back(i);
                    largest = std::max(largest, fleet.generators[i].p_max);
                    exact_capacity += fleet.generators[i].p_max;
                }
            }
            // Recheck with an exact sum; the running one can drift.
            const double reserve = base + (options.reserve_scope == ReserveScope::Fleet ? fleet_largest : largest);
            if (exact_capacity < reserve || exact_capacity < fleet.demand) continue;
            const double obj = dispatch(fleet, idx, fleet.demand).objective;
            ++local.evaluated;
            if (better(mask, obj, local)) {
                local.mask = mask;
                local.objective = obj;
            }
        }
        best[c] = local;
    });

    Candidate winner;
    std::size_t evaluated = 0;
    for (const auto& c : best) {
        evaluated += c.evaluated;
        if (c.evaluated && better(c.mask, c.objective, winner)) {
            winner.mask = c.mask;
            winner.objective = c.objective;
        }
    }
    if (evaluated == 0)
        throw InfeasibleError("reserve", "oracle: no commitment satisfies the reserve constraint");

    OracleResult r;
    r.u.assign(n, 0);
    r.p.assign(n, 0.0);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (winner.mask >> i & 1) idx.push_back(i);
    const auto d = dispatch(fleet, idx, fleet.demand);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        r.u[idx[j]] = 1;
        r.p[idx[j]] = d.p[j];
    }
    r.objective = d.objective;
    r.evaluated = evaluated;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace rruc
