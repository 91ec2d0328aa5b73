#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rruc/fleet.hpp"
#include "rruc/rounding.hpp"

namespace rruc {

enum class Method { Rruc, Oracle };

const char* to_string(Method m);

struct BenchRecord {
    std::size_t n_units = 0;
    Method method = Method::Rruc;
    double wall_time = 0.0;  // seconds, median over trials
    double objective = 0.0;  // USD/h
    std::optional<double> deviation;  // (RRUC - MIP) / MIP when both ran
};

struct BenchOptions {
    std::vector<int> multipliers{1};
    bool run_rruc = true;
    bool run_oracle = false;
    double deviation = 0.01;  // replication perturbation
    std::uint64_t seed = 20240101;
    int trials = 5;
    int warmup = 1;
    std::size_t n_cap = 20;
    RoundingOptions rounding;
};

/// Replicates `base` for each multiplier and times each requested method
/// (median of `trials` runs after `warmup` discarded runs).
/// Throws InputError if the oracle is requested above n_cap.
std::vector<BenchRecord> bench_scaling(const Fleet& base, const BenchOptions& options);

/// Relative differences (a - b) / b of committed sum P_min and sum P_max.
/// Throws InputError if `b` commits nothing.
std::pair<double, double> capacity_delta(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                         const Fleet& fleet);
std::pair<double, double> capacity_delta(const CommitmentSolution& a, const CommitmentSolution& b,
                                         const Fleet& fleet);

/// Metadata of committed versus remaining units at one load level. Averages
/// are unweighted over units carrying the metadata; NaN when none do.
struct CompositionRecord {
    double load_step = 0.0;  // MW
    double committed_avg_first_step_price = 0.0;
    double remaining_avg_first_step_price = 0.0;
    double committed_avg_max_price = 0.0;
    double remaining_avg_max_price = 0.0;
    double committed_total_startup = 0.0;
    double remaining_total_startup = 0.0;
    double committed_p_min_total = 0.0;
    double committed_p_max_total = 0.0;
};

CompositionRecord composition(const Fleet& fleet, std::span<const std::uint8_t> u, double load);

struct SweepOptions {
    RoundingOptions rounding;
    double sigma_fraction = 0.02;  // sigma_D = sigma_fraction * load at every level
};

struct SweepResult {
    std::vector<CompositionRecord> records;
    std::vector<std::string> warnings;
};

/// Runs rruc at load_start, load_start + load_step, ... up to load_end and
/// records the committed-set composition. Stops at the first infeasible level
/// with a warning.
SweepResult load_sweep(const Fleet& fleet, double load_start, double load_step, double load_end,
                       const SweepOptions& options = {});

std::string bench_csv(const std::vector<BenchRecord>& records);
std::string composition_csv(const std::vector<CompositionRecord>& records);

}  // namespace rruc
