#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include "rruc/fleet.hpp"
#include "rruc/random.hpp"

namespace rruc::testing {

/// Random fleet with unit parameters in the ranges of small fast-start units:
/// P_min 5-30 MW, P_max 20-300 MW, no-load cost 200-1500 USD/h. Demand is
/// drawn so the reserve requirement is coverable by the whole fleet.
inline Fleet random_fleet(std::size_t n, std::uint64_t seed, double linear_share = 0.2) {
    Rng rng(seed);
    Fleet f;
    for (std::size_t i = 0; i < n; ++i) {
        Generator g;
        g.id = "g" + std::to_string(i);
        g.p_max = uniform(rng, 20.0, 300.0);
        g.p_min = std::min(uniform(rng, 5.0, 30.0), g.p_max);
        g.b = uniform(rng, 10.0, 120.0);
        g.a = uniform01(rng) < linear_share ? 0.0 : uniform(rng, 0.0, 0.5) * g.b / g.p_max;
        g.c = uniform(rng, 200.0, 1500.0);
        g.startup_cost = uniform(rng, 0.0, 5000.0);
        g.first_step_price = g.marginal_cost(g.p_min);
        g.max_step_price = g.marginal_cost(g.p_max);
        f.generators.push_back(g);
    }
    double largest = 0.0;
    for (const auto& g : f.generators) largest = std::max(largest, g.p_max);
    // D (1 + 3 * 0.02) + largest <= total capacity.
    const double room = (f.total_p_max() - largest) / 1.06;
    f.demand = uniform(rng, 0.2, 0.95) * room;
    f.sigma_d = 0.02 * f.demand;
    return f;
}

}  // namespace rruc::testing
