#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rruc/fleet.hpp"

namespace rruc {

enum class Binding { Lower, Interior, Upper };

struct DispatchResult {
    std::vector<double> p;          // MW, one per committed unit, same order as input
    double objective = 0.0;         // USD/h, includes sum of c_j
    std::optional<double> lambda;   // USD/MWh; empty when demand is slack (sum P_min >= D)
    std::vector<Binding> binding;
};

/// Exact economic dispatch of a fixed committed set:
///   min sum a_j p_j^2 + b_j p_j + c_j  s.t.  P_min,j <= p_j <= P_max,j,  sum p_j >= D.
/// Throws InfeasibleError("demand") if sum P_max < D, InputError if `committed` is empty.
/// Linear-cost units sitting exactly at the marginal price are filled in
/// ascending id order.
DispatchResult dispatch(std::span<const Generator> committed, double demand);

/// Same, over fleet.generators[indices[...]]; p is ordered like `indices`.
DispatchResult dispatch(const Fleet& fleet, std::span<const std::size_t> indices, double demand);

/// True iff sum P_max over `committed` >= requirement.value.
bool check_reserve(std::span<const Generator> committed, const ReserveRequirement& requirement);

}  // namespace rruc
