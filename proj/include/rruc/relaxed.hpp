#pragma once

#include <span>
#include <vector>

#include "rruc/fleet.hpp"

namespace rruc {

enum class Relaxation {
    /// Convex form in (y, q = y P): sum a q^2 / y + b q + c y. Solved to global
    /// optimality through its two-multiplier Lagrangian dual.
    Perspective,
    /// Literal sum y (a P^2 + b P + c) in (y, P). Nonconvex; local solve only.
    Bilinear,
};

struct RelaxedOptions {
    double tol = 1e-6;  // on the scaled KKT residual
    int max_iter = 200; // dual bisection steps (perspective) or Newton steps
    Relaxation relaxation = Relaxation::Perspective;
    double smoothing = 1e-8;  // eps in q / max(y, eps) on the barrier paths
};

/// Fractional commitment y in [0, 1] with per-unit dispatch. Always uses the
/// fleet-wide reserve requirement.
struct RelaxedSolution {
    std::vector<double> y;
    std::vector<double> p;       // MW; P_min for units with y < 1e-6
    double objective = 0.0;      // sum y_i cost_i(p_i), USD/h
    double lower_bound = 0.0;    // Lagrangian dual value at (lambda, mu)
    double lambda = 0.0;         // demand multiplier, USD/MWh
    double mu = 0.0;             // reserve multiplier, USD/MWh of capacity
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Throws InfeasibleError("reserve") if the whole fleet cannot cover the
/// reserve requirement, InputError for an empty fleet or bad options.
RelaxedSolution solve_relaxed(const Fleet& fleet, const RelaxedOptions& options = {});

/// Same machinery with every y pinned to 1: only the dispatch is optimized.
RelaxedSolution solve_fixed_commitment(const Fleet& fleet, const RelaxedOptions& options = {});

/// sum_i y_i (a_i p_i^2 + b_i p_i + c_i).
double relaxed_objective(const Fleet& fleet, std::span<const double> y, std::span<const double> p);

/// Lagrangian dual of the relaxation at multipliers (lambda, mu) >= 0:
///   lambda D + mu R + sum_i min(0, min_{P in [P_min, P_max]} cost_i(P) - lambda P - mu P_max,i).
/// A lower bound on the relaxed (hence the binary) optimum.
double relaxed_dual_bound(const Fleet& fleet, double lambda, double mu);

/// max(relative duality gap, relative primal infeasibility), evaluated from
/// the solution fields alone.
double relaxed_kkt_residual(const Fleet& fleet, const RelaxedSolution& solution);

}  // namespace rruc
