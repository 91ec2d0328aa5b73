#include "rruc/relaxed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "barrier.hpp"
#include "rruc/dispatch.hpp"
#include "rruc/errors.hpp"
#include "rruc/text.hpp"

namespace rruc {

namespace {

using detail::Sym2;
using detail::Term;
using detail::Vec2;

constexpr double kTinyY = 1e-6;

bool fixed_output(const Generator& g) { return g.p_max - g.p_min <= 1e-12 * g.p_max; }

// min over P in [p_min, p_max] of cost(P) - lambda P.
double shifted_min(const Generator& g, double lambda) {
    double p;
    if (g.a > 0.0) p = std::clamp((lambda - g.b) / (2.0 * g.a), g.p_min, g.p_max);
    else p = lambda > g.b ? g.p_max : g.p_min;
    return g.cost(p) - lambda * p;
}

// Minimizer of cost(P) - lambda P; linear units take the right limit at lambda == b.
double best_output(const Generator& g, double lambda) {
    if (g.a > 0.0) return std::clamp((lambda - g.b) / (2.0 * g.a), g.p_min, g.p_max);
    return lambda >= g.b ? g.p_max : g.p_min;
}

// Exact maximizer over mu >= 0 of the dual at fixed lambda. The dual is
// piecewise linear in mu with breakpoints phi_i / P_max,i; the optimum is the
// breakpoint where the capacity of units priced in first covers the reserve.
double best_mu(const Fleet& fleet, double reserve, double lambda) {
    double base = 0.0;
    std::vector<std::pair<double, double>> kinks;
    for (const auto& g : fleet.generators) {
        const double phi = shifted_min(g, lambda);
        if (phi <= 0.0) base += g.p_max;
        else kinks.emplace_back(phi / g.p_max, g.p_max);
    }
    if (base >= reserve) return 0.0;
    std::sort(kinks.begin(), kinks.end());
    double covered = base;
    for (const auto& [mu, cap] : kinks) {
        covered += cap;
        if (covered >= reserve) return mu;
    }
    return kinks.empty() ? 0.0 : kinks.back().first;
}

struct DualPoint {
    double lambda = 0.0;
    double mu = 0.0;
    double value = -std::numeric_limits<double>::infinity();
    int steps = 0;
    bool closed = false;
};

// Golden-section search on the concave G(lambda) = max_mu g(lambda, mu).
DualPoint maximize_dual(const Fleet& fleet, double reserve, int max_steps) {
    const auto eval = [&](double lambda) {
        DualPoint d;
        d.lambda = lambda;
        d.mu = best_mu(fleet, reserve, lambda);
        d.value = relaxed_dual_bound(fleet, lambda, d.mu);
        return d;
    };
    // Past this price every unit is worth running at P_max even without a
    // reserve credit, so G decreases with slope D - sum P_max < 0.
    double hi = 1.0;
    for (const auto& g : fleet.generators)
        hi = std::max(hi, g.marginal_cost(g.p_max) + g.cost(g.p_max) / g.p_max);
    hi *= 2.0;
    double lo = 0.0;
    constexpr double kGolden = 0.6180339887498949;
    double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
    DualPoint f1 = eval(x1), f2 = eval(x2);
    DualPoint best = eval(0.0);
    int steps = 0;
    while (steps < max_steps && hi - lo > 1e-14 * std::max(1.0, hi)) {
        if (f1.value < f2.value) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = eval(x1);
        }
        ++steps;
    }
    for (const DualPoint& d : {f1, f2, eval(0.5 * (lo + hi))})
        if (d.value > best.value) best = d;
    best.steps = steps;
    best.closed = hi - lo <= 1e-14 * std::max(1.0, hi);
    return best;
}

// Builds a primal point from multipliers. Units with clearly negative reduced
// cost run fully, clearly positive ones are off, and the tied ones get y from
// the reserve and demand rows by blending a lowest-energy and a
// highest-energy fill. The dispatch for those y is then solved exactly.
RelaxedSolution recover_primal(const Fleet& fleet, double reserve, double lambda, double mu, double delta,
                               bool stretch) {
    const std::size_t n = fleet.size();
    std::vector<double> lo(n), hi(n);
    std::vector<std::size_t> on, tie;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = fleet.generators[i];
        const double p = best_output(g, lambda);
        const double cost = g.cost(p);
        const double r = cost - lambda * p - mu * g.p_max;
        const double scale = std::max({1.0, std::abs(cost), lambda * p, mu * g.p_max});
        const bool margin = g.a == 0.0 && std::abs(lambda - g.b) <= delta * std::max(1.0, lambda);
        lo[i] = margin ? g.p_min : p;
        hi[i] = margin ? g.p_max : p;
        if (r < -delta * scale) on.push_back(i);
        else if (r <= delta * scale) tie.push_back(i);
    }

    double cap_on = 0.0, tie_cap = 0.0;
    for (std::size_t i : on) cap_on += fleet.generators[i].p_max;
    for (std::size_t i : tie) tie_cap += fleet.generators[i].p_max;

    struct Fill {
        std::vector<double> y;  // over `tie`
        double energy = 0.0;
    };
    const auto fill = [&](double rho, bool high) {
        const auto& level = high ? hi : lo;
        std::vector<std::size_t> idx(tie.size());
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t z) {
            const double rx = level[tie[x]] / fleet.generators[tie[x]].p_max;
            const double rz = level[tie[z]] / fleet.generators[tie[z]].p_max;
            if (rx != rz) return high ? rx > rz : rx < rz;
            return x < z;
        });
        Fill f;
        f.y.assign(tie.size(), 0.0);
        for (std::size_t i : on) f.energy += level[i];
        double remaining = rho;
        for (std::size_t j : idx) {
            if (remaining <= 0.0) break;
            const double pmax = fleet.generators[tie[j]].p_max;
            const double take = std::min(1.0, remaining / pmax);
            f.y[j] = take;
            remaining -= take * pmax;
            f.energy += take * level[tie[j]];
        }
        return f;
    };

    double rho = std::clamp(reserve - cap_on, 0.0, tie_cap);
    Fill low = fill(rho, false), high = fill(rho, true);
    const double demand = fleet.demand;
    if (stretch && demand > high.energy && rho < tie_cap) {
        // Serving demand needs more tied capacity than the reserve asks for.
        double a = rho, b = tie_cap;
        if (fill(b, true).energy >= demand) {
            for (int i = 0; i < 200 && b - a > 1e-15 * std::max(1.0, b); ++i) {
                const double mid = 0.5 * (a + b);
                (fill(mid, true).energy >= demand ? b : a) = mid;
            }
        }
        rho = b;
        low = fill(rho, false);
        high = fill(rho, true);
    }
    double theta = 0.0;
    if (demand > low.energy) {
        theta = high.energy > low.energy ? std::min(1.0, (demand - low.energy) / (high.energy - low.energy)) : 1.0;
    }

    RelaxedSolution s;
    s.y.assign(n, 0.0);
    s.p.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.p[i] = fleet.generators[i].p_min;
    for (std::size_t i : on) {
        s.y[i] = 1.0;
        s.p[i] = (1.0 - theta) * lo[i] + theta * hi[i];
    }
    for (std::size_t j = 0; j < tie.size(); ++j) {
        const std::size_t i = tie[j];
        const double y = std::clamp((1.0 - theta) * low.y[j] + theta * high.y[j], 0.0, 1.0);
        const double e = (1.0 - theta) * low.y[j] * lo[i] + theta * high.y[j] * hi[i];
        s.y[i] = y;
        if (y >= kTinyY) s.p[i] = e / y;
    }

    // Exact dispatch of the fractional fleet: unit i with weight y behaves as
    // a unit on [y P_min, y P_max] with cost y cost(q / y).
    std::vector<std::size_t> running;
    std::vector<Generator> scaled;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = s.y[i];
        if (y < kTinyY) continue;
        Generator g = fleet.generators[i];
        g.p_min *= y;
        g.p_max *= y;
        g.a /= y;
        g.c *= y;
        running.push_back(i);
        scaled.push_back(std::move(g));
    }
    double price = lambda;
    if (!scaled.empty()) {
        try {
            const auto d = dispatch(std::span<const Generator>(scaled), demand);
            for (std::size_t j = 0; j < running.size(); ++j) s.p[running[j]] = d.p[j] / s.y[running[j]];
            if (d.lambda) price = *d.lambda;
        } catch (const InfeasibleError&) {
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = fleet.generators[i];
        s.p[i] = std::clamp(s.p[i], g.p_min, g.p_max);
    }
    s.objective = relaxed_objective(fleet, s.y, s.p);
    s.lambda = price;
    s.mu = best_mu(fleet, reserve, price);
    if (relaxed_dual_bound(fleet, s.lambda, s.mu) < relaxed_dual_bound(fleet, lambda, mu)) {
        s.lambda = lambda;
        s.mu = mu;
    }
    return s;
}

enum class Mode { Perspective, Bilinear, FixedCommitment };

// Coordinates: x[0] = y, x[1] = q (perspective, fixed commitment) or P (bilinear).
class RelaxationModel final : public detail::SeparableModel {
public:
    RelaxationModel(const Fleet& fleet, Mode mode, double reserve, double eps)
        : fleet_(fleet), mode_(mode), reserve_(reserve), eps_(eps) {
        fixed_.reserve(fleet.size());
        for (const auto& g : fleet.generators) fixed_.push_back(fixed_output(g));
    }

    std::size_t units() const override { return fleet_.size(); }

    std::array<bool, 2> free_coords(std::size_t i) const override {
        if (mode_ == Mode::FixedCommitment) return {false, !fixed_[i]};
        return {true, !fixed_[i]};
    }

    Term objective(std::size_t i, const Vec2& x) const override {
        const auto& g = gen(i);
        const double y = x[0];
        Term t;
        if (fixed_[i]) {
            // q = y P with P = P_max.
            const double p = g.p_max;
            const double d = y + eps_;
            const double r = y * y / d;
            const double dr = (y * y + 2.0 * eps_ * y) / (d * d);
            const double ddr = 2.0 * eps_ * eps_ / (d * d * d);
            const double lin = g.b * p + g.c;
            if (mode_ == Mode::Perspective) {
                t.value = g.a * p * p * r + lin * y;
                t.grad = {g.a * p * p * dr + lin, 0.0};
                t.hess = {g.a * p * p * ddr, 0.0, 0.0};
                t.factored = true;
                t.root = {std::sqrt(t.hess.xx), 0.0};
            } else {
                t.value = y * g.cost(p);
                t.grad = {g.cost(p), 0.0};
                t.factored = true;
            }
            return t;
        }
        switch (mode_) {
            case Mode::Perspective: {
                const double q = x[1];
                const double d = y + eps_;
                t.value = g.a * q * q / d + g.b * q + g.c * y;
                t.grad = {-g.a * q * q / (d * d) + g.c, 2.0 * g.a * q / d + g.b};
                t.hess = {2.0 * g.a * q * q / (d * d * d), -2.0 * g.a * q / (d * d), 2.0 * g.a / d};
                t.factored = true;
                const double w = std::sqrt(2.0 * g.a / d);
                t.root = {-w * q / d, w};
                break;
            }
            case Mode::Bilinear: {
                const double p = x[1];
                t.value = y * g.cost(p);
                t.grad = {g.cost(p), y * g.marginal_cost(p)};
                t.hess = {0.0, g.marginal_cost(p), 2.0 * g.a * y};
                break;
            }
            case Mode::FixedCommitment: {
                const double q = x[1];
                t.value = g.cost(q);
                t.grad = {0.0, g.marginal_cost(q)};
                t.hess = {0.0, 0.0, 2.0 * g.a};
                t.factored = true;
                t.root = {0.0, std::sqrt(2.0 * g.a)};
                break;
            }
        }
        return t;
    }

    std::size_t local(std::size_t i, const Vec2& x, Term* out) const override {
        const auto& g = gen(i);
        const double y = x[0];
        if (fixed_[i]) {
            if (mode_ == Mode::FixedCommitment) return 0;
            out[0] = {y, {1.0, 0.0}, {}};
            out[1] = {1.0 - y, {-1.0, 0.0}, {}};
            return 2;
        }
        switch (mode_) {
            case Mode::Perspective:
                out[0] = {x[1] - y * g.p_min, {-g.p_min, 1.0}, {}};
                out[1] = {y * g.p_max - x[1], {g.p_max, -1.0}, {}};
                out[2] = {1.0 - y, {-1.0, 0.0}, {}};
                return 3;
            case Mode::Bilinear:
                out[0] = {x[1] - g.p_min, {0.0, 1.0}, {}};
                out[1] = {g.p_max - x[1], {0.0, -1.0}, {}};
                out[2] = {y, {1.0, 0.0}, {}};
                out[3] = {1.0 - y, {-1.0, 0.0}, {}};
                return 4;
            case Mode::FixedCommitment:
                out[0] = {x[1] - g.p_min, {0.0, 1.0}, {}};
                out[1] = {g.p_max - x[1], {0.0, -1.0}, {}};
                return 2;
        }
        return 0;
    }

    std::size_t couplings() const override { return mode_ == Mode::FixedCommitment ? 1 : 2; }

    Term coupling(std::size_t k, std::size_t i, const Vec2& x) const override {
        const auto& g = gen(i);
        const double y = x[0];
        if (k == 1) return {y * g.p_max, {g.p_max, 0.0}, {}};
        if (fixed_[i]) {
            if (mode_ == Mode::FixedCommitment) return {g.p_max, {0.0, 0.0}, {}};
            return {y * g.p_max, {g.p_max, 0.0}, {}};
        }
        switch (mode_) {
            case Mode::Bilinear:
                return {y * x[1], {x[1], y}, {0.0, 1.0, 0.0}};
            default:
                return {x[1], {0.0, 1.0}, {}};
        }
    }

    double coupling_rhs(std::size_t k) const override { return k == 0 ? fleet_.demand : reserve_; }

    // Initial point strictly inside every constraint.
    std::vector<Vec2> start() const {
        const std::size_t n = fleet_.size();
        double y0 = 1.0;
        if (mode_ != Mode::FixedCommitment) {
            const double cap = fleet_.total_p_max();
            const double margin = (cap - reserve_) / cap;
            y0 = 1.0 - std::min(0.5, 0.5 * margin);
        }
        double lo = 0.0, hi = 0.0;
        for (const auto& g : fleet_.generators) {
            lo += y0 * g.p_min;
            hi += y0 * g.p_max;
        }
        const double target = 0.5 * (std::max(fleet_.demand, lo) + hi);
        const double theta = hi > lo ? std::clamp((target - lo) / (hi - lo), 1e-6, 1.0 - 1e-6) : 0.5;
        std::vector<Vec2> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& g = gen(i);
            const double p = fixed_[i] ? g.p_max : g.p_min + theta * (g.p_max - g.p_min);
            x[i] = {y0, mode_ == Mode::Bilinear ? p : y0 * p};
        }
        return x;
    }

private:
    const Generator& gen(std::size_t i) const { return fleet_.generators[i]; }

    const Fleet& fleet_;
    Mode mode_;
    double reserve_;
    double eps_;
    std::vector<char> fixed_;
};

void check_options(const RelaxedOptions& options) {
    if (!(options.tol > 0.0)) throw InputError("relaxed solve: tol must be > 0");
    if (options.max_iter < 1) throw InputError("relaxed solve: max_iter must be >= 1");
    if (!(options.smoothing >= 0.0)) throw InputError("relaxed solve: smoothing must be >= 0");
}

// All y pinned to 1 because the reserve leaves no slack: the relaxation is
// plain economic dispatch of the whole fleet.
RelaxedSolution forced_full_commitment(const Fleet& fleet) {
    std::vector<std::size_t> all(fleet.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto d = dispatch(fleet, all, fleet.demand);
    RelaxedSolution s;
    s.y.assign(fleet.size(), 1.0);
    s.p = d.p;
    s.objective = d.objective;
    s.lambda = d.lambda.value_or(0.0);
    double mu = 0.0;
    for (const auto& g : fleet.generators) mu = std::max(mu, shifted_min(g, s.lambda) / g.p_max);
    s.mu = mu;
    s.lower_bound = relaxed_dual_bound(fleet, s.lambda, s.mu);
    s.kkt_residual = relaxed_kkt_residual(fleet, s);
    s.converged = true;
    return s;
}

RelaxedSolution to_solution(const Fleet& fleet, const RelaxationModel&, const detail::BarrierResult& r,
                            Mode mode, double eps) {
    RelaxedSolution s;
    const std::size_t n = fleet.size();
    s.y.resize(n);
    s.p.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = fleet.generators[i];
        const double y = std::clamp(r.x[i][0], 0.0, 1.0);
        double p;
        if (fixed_output(g)) p = g.p_max;
        else if (mode == Mode::Bilinear) p = r.x[i][1];
        else p = r.x[i][1] / std::max(y, eps);
        if (y < kTinyY && mode != Mode::FixedCommitment) p = g.p_min;
        s.y[i] = y;
        s.p[i] = std::clamp(p, g.p_min, g.p_max);
    }
    s.objective = relaxed_objective(fleet, s.y, s.p);
    s.lambda = r.coupling_multiplier[0];
    s.mu = mode == Mode::FixedCommitment ? 0.0 : r.coupling_multiplier[1];
    s.iterations = r.iterations;
    return s;
}

}  // namespace

double relaxed_objective(const Fleet& fleet, std::span<const double> y, std::span<const double> p) {
    double total = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) total += y[i] * fleet.generators[i].cost(p[i]);
    return total;
}

double relaxed_dual_bound(const Fleet& fleet, double lambda, double mu) {
    const double reserve = reserve_requirement(fleet).value;
    double value = lambda * fleet.demand + mu * reserve;
    for (const auto& g : fleet.generators) value += std::min(0.0, shifted_min(g, lambda) - mu * g.p_max);
    return value;
}

double relaxed_kkt_residual(const Fleet& fleet, const RelaxedSolution& s) {
    const double reserve = reserve_requirement(fleet).value;
    double served = 0.0, capacity = 0.0, bounds = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& g = fleet.generators[i];
        served += s.y[i] * s.p[i];
        capacity += s.y[i] * g.p_max;
        bounds = std::max({bounds, -s.y[i], s.y[i] - 1.0, (g.p_min - s.p[i]) / std::max(1.0, g.p_max),
                           (s.p[i] - g.p_max) / std::max(1.0, g.p_max)});
    }
    const double primal = relaxed_objective(fleet, s.y, s.p);
    const double dual = relaxed_dual_bound(fleet, std::max(0.0, s.lambda), std::max(0.0, s.mu));
    const double gap = std::abs(primal - dual) / std::max(1.0, std::abs(primal));
    const double infeasible = std::max({0.0, (fleet.demand - served) / std::max(1.0, fleet.demand),
                                        (reserve - capacity) / std::max(1.0, reserve), bounds});
    return std::max(gap, infeasible);
}

RelaxedSolution solve_relaxed(const Fleet& fleet, const RelaxedOptions& options) {
    check_options(options);
    if (fleet.empty()) throw InputError("relaxed solve: empty fleet");
    const double reserve = reserve_requirement(fleet).value;
    const double cap = fleet.total_p_max();
    if (cap < reserve - 1e-12 * std::max(1.0, reserve)) {
        throw InfeasibleError("reserve", "reserve constraint infeasible: total capacity " + format_double(cap) +
                                             " MW < requirement D + 3 sigma_D + max P_max = " +
                                             format_double(reserve) + " MW");
    }
    if (cap - reserve <= 1e-9 * std::max(1.0, reserve)) return forced_full_commitment(fleet);

    if (options.relaxation == Relaxation::Perspective) {
        const DualPoint d = maximize_dual(fleet, reserve, options.max_iter);
        RelaxedSolution best;
        bool have = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            const double delta = std::pow(10.0, -12.0 + 2.0 * (attempt / 2));
            RelaxedSolution s = recover_primal(fleet, reserve, d.lambda, d.mu, delta, attempt % 2 == 1);
            s.kkt_residual = relaxed_kkt_residual(fleet, s);
            if (!have || s.kkt_residual < best.kkt_residual) {
                best = std::move(s);
                have = true;
            }
            if (best.kkt_residual <= 1e-3 * options.tol) break;
        }
        best.lower_bound = relaxed_dual_bound(fleet, best.lambda, best.mu);
        best.iterations = d.steps;
        best.converged = d.closed && best.kkt_residual <= options.tol;
        return best;
    }

    const Mode mode = Mode::Bilinear;
    RelaxationModel model(fleet, mode, reserve, options.smoothing);
    detail::BarrierOptions bopt;
    bopt.gap_tol = 0.05 * options.tol;
    bopt.max_iterations = options.max_iter;
    const auto r = detail::minimize(model, model.start(), bopt);

    RelaxedSolution s = to_solution(fleet, model, r, mode, std::max(options.smoothing, 1e-300));
    s.lower_bound = relaxed_dual_bound(fleet, s.lambda, s.mu);
    if (mode == Mode::Perspective) {
        s.kkt_residual = relaxed_kkt_residual(fleet, s);
    } else {
        // Local solve: the dual gap need not close, report barrier optimality.
        s.kkt_residual = std::max(r.stationarity, static_cast<double>(r.constraint_count) /
                                                      (r.t * std::max(1.0, std::abs(r.objective))));
    }
    s.converged = r.converged && s.kkt_residual <= options.tol;
    return s;
}

RelaxedSolution solve_fixed_commitment(const Fleet& fleet, const RelaxedOptions& options) {
    check_options(options);
    if (fleet.empty()) throw InputError("fixed-commitment solve: empty fleet");
    const double cap = fleet.total_p_max();
    if (cap < fleet.demand - 1e-12 * std::max(1.0, fleet.demand))
        throw InfeasibleError("demand", "fixed-commitment solve: capacity below demand");

    RelaxedSolution s;
    if (cap - fleet.demand <= 1e-12 * std::max(1.0, fleet.demand)) {
        s.y.assign(fleet.size(), 1.0);
        for (const auto& g : fleet.generators) s.p.push_back(g.p_max);
        s.objective = relaxed_objective(fleet, s.y, s.p);
        s.converged = true;
        return s;
    }
    RelaxationModel model(fleet, Mode::FixedCommitment, 0.0, 0.0);
    detail::BarrierOptions bopt;
    bopt.gap_tol = 0.05 * options.tol;
    bopt.max_iterations = options.max_iter;
    const auto r = detail::minimize(model, model.start(), bopt);
    s = to_solution(fleet, model, r, Mode::FixedCommitment, 1.0);

    // Dispatch duality gap: lambda D + sum min_P (cost - lambda P).
    double dual = s.lambda * fleet.demand;
    for (const auto& g : fleet.generators) dual += shifted_min(g, s.lambda);
    s.lower_bound = dual;
    s.kkt_residual = std::abs(s.objective - dual) / std::max(1.0, std::abs(s.objective));
    s.converged = r.converged && s.kkt_residual <= options.tol;
    return s;
}

}  // namespace rruc
