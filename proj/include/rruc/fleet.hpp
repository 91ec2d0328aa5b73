#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rruc {

/// One generating unit with a quadratic total-cost curve
/// cost(P) = a P^2 + b P + c, valid for p_min <= P <= p_max.
struct Generator {
    std::string id;
    double p_min = 0.0;  // MW
    double p_max = 0.0;  // MW
    double a = 0.0;      // USD/MW^2h
    double b = 0.0;      // USD/MWh
    double c = 0.0;      // USD/h, no-load (and optionally amortized startup)
    double startup_cost = 0.0;               // USD, metadata
    std::optional<double> first_step_price;  // USD/MWh, metadata
    std::optional<double> max_step_price;    // USD/MWh, metadata

    double cost(double p) const noexcept { return (a * p + b) * p + c; }
    double marginal_cost(double p) const noexcept { return 2.0 * a * p + b; }
};

/// Throws InputError naming the unit and field if the generator is invalid.
void validate(const Generator& g);

struct Fleet {
    std::vector<Generator> generators;
    double demand = 0.0;   // D, MW
    double sigma_d = 0.0;  // standard deviation of D, MW

    std::size_t size() const noexcept { return generators.size(); }
    bool empty() const noexcept { return generators.empty(); }
    double total_p_max() const noexcept;
    double total_p_min() const noexcept;
};

/// Checks every generator, id uniqueness and sigma_d >= 0.
void validate(const Fleet& fleet);

/// Which units the contingency term max_l P_max,l ranges over.
enum class ReserveScope {
    Fleet,      // largest unit anywhere in the fleet (default)
    Committed,  // largest committed unit
};

/// D + 3 sigma_D + max_l P_max,l, in MW.
struct ReserveRequirement {
    double value = 0.0;
};

/// Fleet-wide requirement. Throws InputError on an empty fleet.
ReserveRequirement reserve_requirement(const Fleet& fleet);

/// Requirement for a particular committed set (u[i] != 0 means committed).
/// With ReserveScope::Fleet this equals reserve_requirement(fleet).
ReserveRequirement reserve_requirement(const Fleet& fleet, std::span<const std::uint8_t> u,
                                       ReserveScope scope);

/// Demand defaults applied to fleets that carry no demand of their own.
struct DemandPolicy {
    double load_fraction = 0.8;    // D = load_fraction * sum P_max
    double sigma_fraction = 0.02;  // sigma_D = sigma_fraction * D
};

void apply_default_demand(Fleet& fleet, const DemandPolicy& policy = {});

enum class FleetFormat { Csv, Json };

/// Picks the format from the file extension (".json" or anything else as CSV).
FleetFormat format_from_path(const std::filesystem::path& path);

/// Reads a fleet file. CSV files carry no demand, so the default demand policy
/// is applied; JSON files may carry demand_mw / sigma_d_mw.
Fleet load_fleet(const std::filesystem::path& path, FleetFormat format);
Fleet parse_fleet_csv(const std::string& text);
Fleet parse_fleet_json(const std::string& text);

std::string to_csv(const Fleet& fleet);
std::string to_json_text(const Fleet& fleet);
void save_fleet(const Fleet& fleet, const std::filesystem::path& path, FleetFormat format);

/// Copies the fleet `multiplier` times. Every copy perturbs a, b, c, p_min and
/// p_max by independent factors drawn uniformly from [1 - deviation, 1 + deviation].
/// Copy r of unit "g" gets id "g_r<r>". Demand and sigma_D scale with total capacity.
Fleet replicate_fleet(const Fleet& fleet, int multiplier, double deviation, std::uint64_t seed);

/// Seeded fleet with unit parameters in the ranges typical of small fast-start
/// fossil units (P_min ~ 5-30 MW, P_max ~ 20-300 MW, no-load cost >= 200 USD/h).
/// Demand follows the default policy.
Fleet synthetic_fleet(std::size_t n, std::uint64_t seed);

}  // namespace rruc
