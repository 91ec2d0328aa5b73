#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rruc/fleet.hpp"

namespace rruc {

/// One step of a supply curve: `price` applies to output between the previous
/// breakpoint (0 for the first step) and `mw`.
struct BidStep {
    double mw = 0.0;     // MW
    double price = 0.0;  // USD/MWh
};

/// Piecewise-constant marginal price offer for one unit.
struct BidCurve {
    std::string id;
    double no_load_cost = 0.0;  // USD/h
    double startup_cost = 0.0;  // USD
    double eco_min = 0.0;       // MW
    double eco_max = 0.0;       // MW
    std::vector<BidStep> steps;
};

struct CostSample {
    double p = 0.0;     // MW
    double cost = 0.0;  // USD/h
};

struct QuadraticFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double r_squared = 0.0;
};

struct FitOptions {
    bool allow_nonmonotone = false;
    bool amortize_startup = false;  // add startup_cost (one period) to the fixed cost
    int grid_points = 20;           // uniform samples over [eco_min, eco_max]
};

/// Throws InputError if the curve is malformed. Non-monotone prices are rejected
/// unless `allow_nonmonotone`.
void validate(const BidCurve& curve, bool allow_nonmonotone = false);

/// Exact total cost no_load + integral of the step marginal price from 0 to p
/// (plus startup when amortized). p may lie anywhere in [0, eco_max].
double total_cost_at(const BidCurve& curve, double p, bool amortize_startup = false);

/// Total cost sampled every `grid` MW from eco_min to eco_max inclusive, merged
/// with every breakpoint inside that range, sorted by p without duplicates.
std::vector<CostSample> integrate_bid_curve(const BidCurve& curve, double grid,
                                            const FitOptions& options = {});

/// Least squares on {P^2, P, 1}. A negative (or numerically zero) curvature is
/// clamped to 0 and the linear model refit. Throws InputError on fewer than
/// three samples or fewer than two distinct P values.
QuadraticFit fit_quadratic(const std::vector<CostSample>& samples);

struct GeneratorFit {
    Generator generator;
    QuadraticFit fit;
    std::vector<std::string> warnings;
};

/// Full pipeline: integrate, fit, clamp b >= 0 if needed, carry metadata over.
GeneratorFit bid_curve_to_generator(const BidCurve& curve, const FitOptions& options = {});

/// Reads a JSON array of curves.
std::vector<BidCurve> load_bid_curves(const std::filesystem::path& path);
std::vector<BidCurve> parse_bid_curves(const std::string& json_text);

}  // namespace rruc
