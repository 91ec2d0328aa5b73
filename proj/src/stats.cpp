#include "rruc/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "rruc/errors.hpp"
#include "rruc/oracle.hpp"
#include "rruc/text.hpp"

namespace rruc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

template <class Run>
std::pair<double, double> timed(int warmup, int trials, Run&& run) {
    double objective = 0.0;
    for (int i = 0; i < warmup; ++i) objective = run();
    std::vector<double> times;
    for (int i = 0; i < std::max(1, trials); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        objective = run();
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return {median(std::move(times)), objective};
}

struct Mean {
    double sum = 0.0;
    std::size_t count = 0;
    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    double value() const { return count ? sum / static_cast<double>(count) : kNaN; }
};

std::string csv_number(double v) { return std::isnan(v) ? std::string{} : format_double(v); }

}  // namespace

const char* to_string(Method m) { return m == Method::Rruc ? "rruc" : "oracle"; }

std::vector<BenchRecord> bench_scaling(const Fleet& base, const BenchOptions& options) {
    std::vector<BenchRecord> out;
    for (int multiplier : options.multipliers) {
        if (multiplier < 1) throw InputError("bench: multipliers must be >= 1");
        if (options.run_oracle && base.size() * static_cast<std::size_t>(multiplier) > options.n_cap)
            throw InputError("bench: oracle requested for " + std::to_string(base.size() * multiplier) +
                             " units, above n_cap " + std::to_string(options.n_cap));
    }
    for (int multiplier : options.multipliers) {
        const Fleet fleet = replicate_fleet(base, multiplier, options.deviation, options.seed);
        std::optional<BenchRecord> rruc_rec, oracle_rec;
        if (options.run_rruc) {
            auto [t, obj] = timed(options.warmup, options.trials,
                                  [&] { return relax_and_round(fleet, options.rounding).objective; });
            rruc_rec = BenchRecord{fleet.size(), Method::Rruc, t, obj, std::nullopt};
        }
        if (options.run_oracle) {
            OracleOptions oo;
            oo.n_cap = options.n_cap;
            oo.threads = options.rounding.threads;
            oo.reserve_scope = options.rounding.reserve_scope;
            auto [t, obj] = timed(options.warmup, options.trials, [&] { return exhaustive_uc(fleet, oo).objective; });
            oracle_rec = BenchRecord{fleet.size(), Method::Oracle, t, obj, std::nullopt};
        }
        if (rruc_rec && oracle_rec) {
            const double dev = (rruc_rec->objective - oracle_rec->objective) / oracle_rec->objective;
            rruc_rec->deviation = dev;
            oracle_rec->deviation = dev;
        }
        if (rruc_rec) out.push_back(*rruc_rec);
        if (oracle_rec) out.push_back(*oracle_rec);
    }
    return out;
}

std::pair<double, double> capacity_delta(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                         const Fleet& fleet) {
    if (a.size() != fleet.size() || b.size() != fleet.size())
        throw InputError("capacity_delta: commitments do not match the fleet");
    double a_min = 0.0, a_max = 0.0, b_min = 0.0, b_max = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& g = fleet.generators[i];
        if (a[i]) {
            a_min += g.p_min;
            a_max += g.p_max;
        }
        if (b[i]) {
            b_min += g.p_min;
            b_max += g.p_max;
        }
    }
    if (b_max == 0.0) throw InputError("capacity_delta: reference commitment is empty");
    if (b_min == 0.0) throw InputError("capacity_delta: reference commitment has zero total P_min");
    return {(a_min - b_min) / b_min, (a_max - b_max) / b_max};
}

std::pair<double, double> capacity_delta(const CommitmentSolution& a, const CommitmentSolution& b,
                                         const Fleet& fleet) {
    return capacity_delta(a.u, b.u, fleet);
}

CompositionRecord composition(const Fleet& fleet, std::span<const std::uint8_t> u, double load) {
    CompositionRecord r;
    r.load_step = load;
    Mean first_on, first_off, max_on, max_off;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& g = fleet.generators[i];
        if (u[i]) {
            first_on.add(g.first_step_price);
            max_on.add(g.max_step_price);
            r.committed_total_startup += g.startup_cost;
            r.committed_p_min_total += g.p_min;
            r.committed_p_max_total += g.p_max;
        } else {
            first_off.add(g.first_step_price);
            max_off.add(g.max_step_price);
            r.remaining_total_startup += g.startup_cost;
        }
    }
    r.committed_avg_first_step_price = first_on.value();
    r.remaining_avg_first_step_price = first_off.value();
    r.committed_avg_max_price = max_on.value();
    r.remaining_avg_max_price = max_off.value();
    return r;
}

SweepResult load_sweep(const Fleet& fleet, double load_start, double load_step, double load_end,
                       const SweepOptions& options) {
    if (!(load_step > 0.0)) throw InputError("load_sweep: load_step must be > 0");
    if (!(load_start >= 0.0) || load_end < load_start)
        throw InputError("load_sweep: need 0 <= load_start <= load_end");
    SweepResult out;
    const auto levels = static_cast<std::size_t>(std::floor((load_end - load_start) / load_step + 1e-9)) + 1;
    for (std::size_t i = 0; i < levels; ++i) {
        const double load = load_start + static_cast<double>(i) * load_step;
        Fleet at = fleet;
        at.demand = load;
        at.sigma_d = options.sigma_fraction * load;
        try {
            const auto s = relax_and_round(at, options.rounding);
            out.records.push_back(composition(at, s.u, load));
        } catch (const InfeasibleError& e) {
            out.warnings.push_back("load " + format_double(load) + " MW infeasible (" + e.what() +
                                   "); sweep truncated");
            break;
        }
    }
    return out;
}

std::string bench_csv(const std::vector<BenchRecord>& records) {
    std::string out = "n_units,method,wall_time,objective,deviation\n";
    for (const auto& r : records) {
        out += std::to_string(r.n_units) + ',' + to_string(r.method) + ',' + format_double(r.wall_time) + ',' +
               format_double(r.objective) + ',' + (r.deviation ? format_double(*r.deviation) : "") + '\n';
    }
    return out;
}

std::string composition_csv(const std::vector<CompositionRecord>& records) {
    std::string out =
        "load_step,committed_avg_first_step_price,remaining_avg_first_step_price,committed_avg_max_price,"
        "remaining_avg_max_price,committed_total_startup,remaining_total_startup,committed_p_min_total,"
        "committed_p_max_total\n";
    for (const auto& r : records) {
        out += csv_number(r.load_step) + ',' + csv_number(r.committed_avg_first_step_price) + ',' +
               csv_number(r.remaining_avg_first_step_price) + ',' + csv_number(r.committed_avg_max_price) + ',' +
               csv_number(r.remaining_avg_max_price) + ',' + csv_number(r.committed_total_startup) + ',' +
               csv_number(r.remaining_total_startup) + ',' + csv_number(r.committed_p_min_total) + ',' +
               csv_number(r.committed_p_max_total) + '\n';
    }
    return out;
}

}  // namespace rruc
