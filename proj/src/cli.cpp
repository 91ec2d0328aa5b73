#include "rruc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "rruc/audit.hpp"
#include "rruc/costfit.hpp"
#include "rruc/errors.hpp"
#include "rruc/fleet.hpp"
#include "rruc/oracle.hpp"
#include "rruc/rounding.hpp"
#include "rruc/stats.hpp"
#include "rruc/text.hpp"

namespace rruc {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 20240101;

struct SolverFlags {
    std::string fleet;
    std::string out;
    std::optional<double> demand;
    std::optional<double> sigma;
    std::size_t stride = 1;
    unsigned threads = 0;
    double tol = 1e-6;
    int max_iter = 200;
    std::string relaxation = "perspective";
    std::string reserve_scope = "fleet";
    bool trace = false;
    std::size_t n_cap = 20;
};

void add_fleet_flag(CLI::App* cmd, std::string& path) {
    cmd->add_option("--fleet", path, "Fleet file (.csv or .json); power in MW, costs in USD")
        ->required()
        ->check(CLI::ExistingFile);
}

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
    add_fleet_flag(cmd, f.fleet);
    cmd->add_option("--out", f.out, "Result JSON path")->required();
    cmd->add_option("--demand", f.demand, "Demand D (MW); overrides the fleet file")->check(CLI::NonNegativeNumber);
    cmd->add_option("--sigma", f.sigma,
                    "Demand standard deviation sigma_D (MW); default 0.02*D when --demand is given")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--stride", f.stride, "Evaluate every N-th cut point (plus the last)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", f.threads, "Worker threads for the dispatch sweep (0 = all cores)")
        ->capture_default_str();
    cmd->add_option("--tol", f.tol, "Relaxed solve tolerance on the scaled KKT residual")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", f.max_iter, "Relaxed solve step limit (dual search steps or Newton steps)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--relaxation", f.relaxation, "Relaxed problem form")
        ->capture_default_str()
        ->check(CLI::IsMember({"perspective", "bilinear"}));
    cmd->add_option("--reserve-scope", f.reserve_scope,
                    "Units the largest-unit contingency term ranges over (MW)")
        ->capture_default_str()
        ->check(CLI::IsMember({"fleet", "committed"}));
}

ReserveScope parse_scope(const std::string& s) {
    return s == "committed" ? ReserveScope::Committed : ReserveScope::Fleet;
}

RoundingOptions rounding_options(const SolverFlags& f) {
    RoundingOptions o;
    o.stride = f.stride;
    o.threads = f.threads;
    o.trace = f.trace;
    o.reserve_scope = parse_scope(f.reserve_scope);
    o.relaxed.tol = f.tol;
    o.relaxed.max_iter = f.max_iter;
    o.relaxed.relaxation = f.relaxation == "bilinear" ? Relaxation::Bilinear : Relaxation::Perspective;
    return o;
}

Fleet load_with_overrides(const SolverFlags& f) {
    Fleet fleet = load_fleet(f.fleet, format_from_path(f.fleet));
    if (f.demand) {
        fleet.demand = *f.demand;
        fleet.sigma_d = DemandPolicy{}.sigma_fraction * *f.demand;
    }
    if (f.sigma) fleet.sigma_d = *f.sigma;
    validate(fleet);
    return fleet;
}

Json solver_config(const std::string& command, const SolverFlags& f, const Fleet& fleet) {
    Json c;
    c["command"] = command;
    c["fleet"] = f.fleet;
    c["demand_mw"] = fleet.demand;
    c["sigma_d_mw"] = fleet.sigma_d;
    c["reserve_requirement_mw"] = reserve_requirement(fleet).value;
    c["reserve_scope"] = f.reserve_scope;
    c["stride"] = f.stride;
    c["threads"] = f.threads;
    c["tol"] = f.tol;
    c["max_iter"] = f.max_iter;
    c["relaxation"] = f.relaxation;
    c["trace"] = f.trace;
    if (command == "compare") c["n_cap"] = f.n_cap;
    return c;
}

Json ids_of(const Fleet& fleet, std::span<const std::uint8_t> u) {
    Json ids = Json::array();
    for (std::size_t i = 0; i < fleet.size(); ++i)
        if (u[i]) ids.push_back(fleet.generators[i].id);
    return ids;
}

Json capacity_totals(const Fleet& fleet, std::span<const std::uint8_t> u) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        if (u[i]) {
            lo += fleet.generators[i].p_min;
            hi += fleet.generators[i].p_max;
        }
    }
    Json j;
    j["committed_p_min_total_mw"] = lo;
    j["committed_p_max_total_mw"] = hi;
    return j;
}

Json solution_json(const Fleet& fleet, const CommitmentSolution& s) {
    Json j;
    j["u"] = s.u;
    j["p_mw"] = s.p;
    j["objective_usd_per_h"] = s.objective;
    j["k_star"] = s.k_star;
    j["m"] = s.m;
    j["order"] = s.order;
    j["relaxed_objective_usd_per_h"] = s.relaxed_objective;
    j["relaxed_converged"] = s.relaxed_converged;
    j["dispatch_solves"] = s.dispatch_solves;
    j["committed_ids"] = ids_of(fleet, s.u);
    j.update(capacity_totals(fleet, s.u));
    if (!s.trace.empty()) {
        Json t = Json::array();
        for (const auto& [k, obj] : s.trace) t.push_back({{"k", k}, {"objective_usd_per_h", obj}});
        j["trace"] = std::move(t);
    }
    return j;
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

fs::path sidecar(const fs::path& out, const char* suffix) {
    fs::path p = out;
    p += suffix;
    return p;
}

int cmd_solve(const SolverFlags& f, std::ostream& out) {
    const Fleet fleet = load_with_overrides(f);
    const auto opts = rounding_options(f);
    const auto s = relax_and_round(fleet, opts);
    const auto audit = audit_commitment(fleet, s, opts.reserve_scope);
    if (!audit.ok()) throw std::runtime_error("internal error: solution failed audit: " + audit.violations.front());

    Json doc;
    doc["config"] = solver_config("solve", f, fleet);
    doc["solution"] = solution_json(fleet, s);
    write_json(f.out, doc);
    write_json(sidecar(f.out, ".meta.json"), Json{{"wall_time_s", s.wall_time}});
    out << "committed " << s.k_star << " of " << fleet.size() << " units, objective "
        << format_double(s.objective) << " USD/h -> " << f.out << "\n";
    return kExitOk;
}

int cmd_compare(const SolverFlags& f, std::ostream& out) {
    const Fleet fleet = load_with_overrides(f);
    const auto opts = rounding_options(f);
    if (fleet.size() > f.n_cap)
        throw InputError("compare: fleet has " + std::to_string(fleet.size()) + " units, above --n-cap " +
                         std::to_string(f.n_cap));
    const auto s = relax_and_round(fleet, opts);
    OracleOptions oo;
    oo.n_cap = f.n_cap;
    oo.threads = f.threads;
    oo.reserve_scope = opts.reserve_scope;
    const auto o = exhaustive_uc(fleet, oo);
    const double deviation = (s.objective - o.objective) / o.objective;

    Json doc;
    doc["config"] = solver_config("compare", f, fleet);
    doc["rruc"] = solution_json(fleet, s);
    Json oj;
    oj["u"] = o.u;
    oj["p_mw"] = o.p;
    oj["objective_usd_per_h"] = o.objective;
    oj["evaluated"] = o.evaluated;
    oj["committed_ids"] = ids_of(fleet, o.u);
    oj.update(capacity_totals(fleet, o.u));
    doc["oracle"] = std::move(oj);
    doc["deviation"] = deviation;
    try {
        const auto [dmin, dmax] = capacity_delta(s.u, o.u, fleet);
        doc["capacity_delta"] = {{"p_min", dmin}, {"p_max", dmax}};
    } catch (const InputError&) {
        doc["capacity_delta"] = nullptr;
    }
    write_json(f.out, doc);
    write_json(sidecar(f.out, ".meta.json"),
               Json{{"rruc_wall_time_s", s.wall_time}, {"oracle_wall_time_s", o.wall_time}});
    out << "rruc " << format_double(s.objective) << " USD/h, oracle " << format_double(o.objective)
        << " USD/h, deviation " << format_double(deviation) << " -> " << f.out << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Relax-and-round unit commitment. Power in MW, costs in USD/h (startup in USD)."};
    app.require_subcommand(1);

    // fit
    std::string curves_path, fit_out;
    FitOptions fit_opts;
    auto* fit = app.add_subcommand("fit", "Fit quadratic costs to bid curves and write a fleet file");
    fit->add_option("--curves", curves_path, "Bid curves JSON array (MW, USD/MWh, USD/h, USD)")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--out", fit_out, "Fleet output (.csv or .json)")->required();
    fit->add_flag("--allow-nonmonotone", fit_opts.allow_nonmonotone, "Fit curves whose step prices decrease");
    fit->add_flag("--amortize-startup", fit_opts.amortize_startup,
                  "Add startup cost (USD, one period) to the fixed cost c (USD/h)");
    fit->add_option("--grid-points", fit_opts.grid_points, "Uniform samples over [eco_min, eco_max]")
        ->capture_default_str()
        ->check(CLI::Range(2, 100000));

    // solve / compare
    SolverFlags solve_flags;
    auto* solve = app.add_subcommand("solve", "Relax-and-round commitment of a fleet");
    add_solver_flags(solve, solve_flags);
    solve->add_flag("--trace", solve_flags.trace, "Record the objective (USD/h) of every cut point");

    SolverFlags compare_flags;
    auto* compare = app.add_subcommand("compare", "Run relax-and-round and the exhaustive oracle");
    add_solver_flags(compare, compare_flags);
    compare->add_option("--n-cap", compare_flags.n_cap, "Largest fleet the oracle will enumerate")
        ->capture_default_str()
        ->check(CLI::Range(1, 40));

    // bench
    std::string bench_fleet, bench_out, methods = "rruc";
    std::vector<int> multipliers{1};
    BenchOptions bench_opts;
    SolverFlags bench_flags;
    auto* bench = app.add_subcommand("bench", "Scaling benchmark over replicated fleets (CSV)");
    add_fleet_flag(bench, bench_fleet);
    bench->add_option("--out", bench_out, "CSV output")->required();
    bench->add_option("--multipliers", multipliers, "Comma-separated fleet multipliers")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--methods", methods, "Comma-separated subset of rruc,oracle")->capture_default_str();
    bench->add_option("--seed", bench_opts.seed, "Replication seed")->capture_default_str();
    bench->add_option("--deviation", bench_opts.deviation, "Replication perturbation fraction")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.999999));
    bench->add_option("--trials", bench_opts.trials, "Timed trials per point (median reported)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    bench->add_option("--warmup", bench_opts.warmup, "Untimed warmup runs")->capture_default_str();
    bench->add_option("--n-cap", bench_opts.n_cap, "Largest fleet the oracle will enumerate")->capture_default_str();
    bench->add_option("--threads", bench_flags.threads, "Worker threads (0 = all cores)")->capture_default_str();
    bench->add_option("--tol", bench_flags.tol, "Relaxed solve tolerance")->capture_default_str();

    // replicate
    std::string rep_fleet, rep_out;
    int rep_multiplier = 1;
    double rep_deviation = 0.01;
    std::uint64_t rep_seed = kDefaultSeed;
    auto* replicate = app.add_subcommand("replicate", "Replicate a fleet with seeded perturbations");
    add_fleet_flag(replicate, rep_fleet);
    replicate->add_option("--out", rep_out, "Fleet output (.csv or .json)")->required();
    replicate->add_option("--multiplier", rep_multiplier, "Number of copies")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    replicate->add_option("--deviation", rep_deviation, "Multiplicative perturbation half-width (fraction)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.999999));
    replicate->add_option("--seed", rep_seed, "RNG seed")->capture_default_str();

    // sweep-stats
    std::string sweep_fleet, sweep_out;
    double load_start = 0.0, load_step = 0.0, load_end = 0.0;
    SweepOptions sweep_opts;
    SolverFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep-stats", "Committed-set composition over a load sweep (CSV)");
    add_fleet_flag(sweep, sweep_fleet);
    sweep->add_option("--out", sweep_out, "CSV output")->required();
    sweep->add_option("--load-start", load_start, "First load level (MW)")->required();
    sweep->add_option("--load-step", load_step, "Load increment (MW)")->required()->check(CLI::PositiveNumber);
    sweep->add_option("--load-end", load_end, "Last load level (MW)")->required();
    sweep->add_option("--sigma-fraction", sweep_opts.sigma_fraction, "sigma_D as a fraction of load")
        ->capture_default_str();
    sweep->add_option("--stride", sweep_flags.stride, "Cut-point stride")->capture_default_str();
    sweep->add_option("--threads", sweep_flags.threads, "Worker threads (0 = all cores)")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*fit) {
            const auto curves = load_bid_curves(curves_path);
            Fleet fleet;
            Json fits = Json::array();
            for (const auto& c : curves) {
                auto gf = bid_curve_to_generator(c, fit_opts);
                for (const auto& w : gf.warnings) err << "warning: " << w << "\n";
                fits.push_back({{"id", c.id},
                                {"a", gf.fit.a},
                                {"b", gf.fit.b},
                                {"c", gf.fit.c},
                                {"r_squared", gf.fit.r_squared},
                                {"warnings", gf.warnings}});
                fleet.generators.push_back(std::move(gf.generator));
            }
            apply_default_demand(fleet);
            validate(fleet);
            save_fleet(fleet, fit_out, format_from_path(fit_out));
            Json cfg{{"command", "fit"},
                     {"curves", curves_path},
                     {"allow_nonmonotone", fit_opts.allow_nonmonotone},
                     {"amortize_startup", fit_opts.amortize_startup},
                     {"grid_points", fit_opts.grid_points}};
            write_json(sidecar(fit_out, ".config.json"), Json{{"config", cfg}, {"fits", fits}});
            out << "fitted " << fleet.size() << " units -> " << fit_out << "\n";
            return kExitOk;
        }
        if (*solve) return cmd_solve(solve_flags, out);
        if (*compare) return cmd_compare(compare_flags, out);
        if (*bench) {
            const Fleet base = load_fleet(bench_fleet, format_from_path(bench_fleet));
            bench_opts.multipliers = multipliers;
            bench_opts.run_rruc = methods.find("rruc") != std::string::npos;
            bench_opts.run_oracle = methods.find("oracle") != std::string::npos;
            for (const auto& m : split_csv_line(methods))
                if (m != "rruc" && m != "oracle") throw InputError("bench: unknown method '" + m + "'");
            bench_opts.rounding.threads = bench_flags.threads;
            bench_opts.rounding.relaxed.tol = bench_flags.tol;
            const auto records = bench_scaling(base, bench_opts);
            write_file(bench_out, bench_csv(records));
            Json cfg{{"command", "bench"},           {"fleet", bench_fleet},
                     {"multipliers", multipliers},   {"methods", methods},
                     {"seed", bench_opts.seed},      {"deviation", bench_opts.deviation},
                     {"trials", bench_opts.trials},  {"warmup", bench_opts.warmup},
                     {"n_cap", bench_opts.n_cap},    {"threads", bench_flags.threads},
                     {"tol", bench_flags.tol}};
            write_json(sidecar(bench_out, ".config.json"), Json{{"config", cfg}});
            out << records.size() << " bench records -> " << bench_out << "\n";
            return kExitOk;
        }
        if (*replicate) {
            const Fleet base = load_fleet(rep_fleet, format_from_path(rep_fleet));
            const Fleet copy = replicate_fleet(base, rep_multiplier, rep_deviation, rep_seed);
            save_fleet(copy, rep_out, format_from_path(rep_out));
            Json cfg{{"command", "replicate"},        {"fleet", rep_fleet},
                     {"multiplier", rep_multiplier},  {"deviation", rep_deviation},
                     {"seed", rep_seed},              {"demand_mw", copy.demand},
                     {"sigma_d_mw", copy.sigma_d}};
            write_json(sidecar(rep_out, ".config.json"), Json{{"config", cfg}});
            out << copy.size() << " units -> " << rep_out << "\n";
            return kExitOk;
        }
        if (*sweep) {
            const Fleet fleet = load_fleet(sweep_fleet, format_from_path(sweep_fleet));
            sweep_opts.rounding.stride = sweep_flags.stride;
            sweep_opts.rounding.threads = sweep_flags.threads;
            const auto result = load_sweep(fleet, load_start, load_step, load_end, sweep_opts);
            for (const auto& w : result.warnings) err << "warning: " << w << "\n";
            write_file(sweep_out, composition_csv(result.records));
            Json cfg{{"command", "sweep-stats"},     {"fleet", sweep_fleet},
                     {"load_start_mw", load_start},  {"load_step_mw", load_step},
                     {"load_end_mw", load_end},      {"sigma_fraction", sweep_opts.sigma_fraction},
                     {"stride", sweep_flags.stride}, {"threads", sweep_flags.threads}};
            write_json(sidecar(sweep_out, ".config.json"), Json{{"config", cfg}, {"warnings", result.warnings}});
            out << result.records.size() << " load levels -> " << sweep_out << "\n";
            return kExitOk;
        }
    } catch (const InfeasibleError& e) {
        err << "infeasible (" << e.constraint() << "): " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

}  // namespace rruc
