#include "barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rruc::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Assembly {
    std::vector<Sym2> block;
    std::vector<double> det;
    std::vector<Vec2> grad;
    std::vector<std::array<Vec2, kMaxCoupling>> u;  // coupling gradient / slack
    double f = 0.0;
    double grad_f_inf = 0.0;
};

Vec2 solve2(const Sym2& m, double det, const Vec2& r) {
    return {(m.yy * r[0] - m.xy * r[1]) / det, (m.xx * r[1] - m.xy * r[0]) / det};
}

void mask(Sym2& h, Vec2& g, const std::array<bool, 2>& free) {
    if (!free[0]) {
        h.xx = 1.0;
        h.xy = 0.0;
        g[0] = 0.0;
    }
    if (!free[1]) {
        h.yy = 1.0;
        h.xy = 0.0;
        g[1] = 0.0;
    }
}

// Shifts the diagonal until the block is safely positive definite.
void make_positive_definite(Sym2& h) {
    const double tr = h.xx + h.yy;
    const double det = h.xx * h.yy - h.xy * h.xy;
    const double half = 0.5 * tr;
    const double lmin = half - std::sqrt(std::max(0.0, half * half - det));
    const double floor = 1e-12 * (std::abs(h.xx) + std::abs(h.yy) + 1e-300);
    if (lmin < floor) {
        const double shift = floor - lmin;
        h.xx += shift;
        h.yy += shift;
    }
}

// Barrier function t f(x) - sum log(slacks); +inf outside the domain.
double barrier_value(const SeparableModel& model, const std::vector<Vec2>& x, double t, double& scale) {
    const std::size_t n = model.units();
    const std::size_t kc = model.couplings();
    double f = 0.0, logs = 0.0;
    std::array<double, kMaxCoupling> sums{};
    Term local[kMaxLocal];
    scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        f += model.objective(i, x[i]).value;
        const std::size_t nl = model.local(i, x[i], local);
        for (std::size_t j = 0; j < nl; ++j) {
            if (!(local[j].value > 0.0)) return kInf;
            const double l = std::log(local[j].value);
            logs -= l;
            scale += std::abs(l);
        }
        for (std::size_t k = 0; k < kc; ++k) sums[k] += model.coupling(k, i, x[i]).value;
    }
    for (std::size_t k = 0; k < kc; ++k) {
        const double s = sums[k] - model.coupling_rhs(k);
        if (!(s > 0.0)) return kInf;
        logs -= std::log(s);
        scale += std::abs(std::log(s));
    }
    scale += std::abs(t * f);
    return t * f + logs;
}

bool assemble(const SeparableModel& model, const std::vector<Vec2>& x, double t, Assembly& a,
              std::array<double, kMaxCoupling>& slack) {
    const std::size_t n = model.units();
    const std::size_t kc = model.couplings();
    a.block.assign(n, {});
    a.det.assign(n, 0.0);
    a.grad.assign(n, {});
    a.u.assign(n, {});
    a.f = 0.0;
    a.grad_f_inf = 0.0;

    std::vector<std::array<Term, kMaxCoupling>> coupling(n);
    std::array<double, kMaxCoupling> sums{};
    Term local[kMaxLocal];
    Vec2 factors[kMaxLocal + 1];
    for (std::size_t i = 0; i < n; ++i) {
        const Term o = model.objective(i, x[i]);
        const auto free = model.free_coords(i);
        a.f += o.value;
        for (int c = 0; c < 2; ++c)
            if (free[c]) a.grad_f_inf = std::max(a.grad_f_inf, std::abs(o.grad[c]));
        Sym2 h{t * o.hess.xx, t * o.hess.xy, t * o.hess.yy};
        Vec2 g{t * o.grad[0], t * o.grad[1]};
        bool factored = o.factored;
        std::size_t nf = 0;
        if (o.factored) {
            const double st = std::sqrt(t);
            factors[nf++] = {st * o.root[0], st * o.root[1]};
        }
        const std::size_t nl = model.local(i, x[i], local);
        for (std::size_t j = 0; j < nl; ++j) {
            const Term& s = local[j];
            if (!(s.value > 0.0)) return false;
            const double inv = 1.0 / s.value;
            if (s.hess.xx != 0.0 || s.hess.xy != 0.0 || s.hess.yy != 0.0) factored = false;
            else factors[nf++] = {s.grad[0] * inv, s.grad[1] * inv};
            const double inv2 = inv * inv;
            h.xx += s.grad[0] * s.grad[0] * inv2 - s.hess.xx * inv;
            h.xy += s.grad[0] * s.grad[1] * inv2 - s.hess.xy * inv;
            h.yy += s.grad[1] * s.grad[1] * inv2 - s.hess.yy * inv;
            g[0] -= s.grad[0] * inv;
            g[1] -= s.grad[1] * inv;
        }
        for (std::size_t k = 0; k < kc; ++k) {
            coupling[i][k] = model.coupling(k, i, x[i]);
            sums[k] += coupling[i][k].value;
        }
        a.block[i] = h;
        a.grad[i] = g;
        if (factored) {
            // Cauchy-Binet: det(sum v v^T) = sum over pairs of cross(v_j, v_k)^2.
            double det = 0.0;
            for (std::size_t j = 0; j < nf; ++j)
                for (std::size_t k = j + 1; k < nf; ++k) {
                    const double c = factors[j][0] * factors[k][1] - factors[j][1] * factors[k][0];
                    det += c * c;
                }
            a.det[i] = det;
        } else {
            a.det[i] = -1.0;
        }
    }
    for (std::size_t k = 0; k < kc; ++k) {
        slack[k] = sums[k] - model.coupling_rhs(k);
        if (!(slack[k] > 0.0)) return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& h = a.block[i];
        auto& g = a.grad[i];
        for (std::size_t k = 0; k < kc; ++k) {
            const Term& c = coupling[i][k];
            const double inv = 1.0 / slack[k];
            if (c.hess.xx != 0.0 || c.hess.xy != 0.0 || c.hess.yy != 0.0) a.det[i] = -1.0;
            h.xx -= c.hess.xx * inv;
            h.xy -= c.hess.xy * inv;
            h.yy -= c.hess.yy * inv;
            g[0] -= c.grad[0] * inv;
            g[1] -= c.grad[1] * inv;
            a.u[i][k] = {c.grad[0] * inv, c.grad[1] * inv};
        }
        const auto free = model.free_coords(i);
        mask(h, g, free);
        for (std::size_t k = 0; k < kc; ++k) {
            if (!free[0]) a.u[i][k][0] = 0.0;
            if (!free[1]) a.u[i][k][1] = 0.0;
        }
        const bool masked = !free[0] || !free[1];
        double& det = a.det[i];
        const double floor = 1e-24 * (h.xx * h.xx + h.yy * h.yy);
        if (masked || det < 0.0 || !(det > floor)) {
            make_positive_definite(h);
            det = h.xx * h.yy - h.xy * h.xy;
        }
    }
    return true;
}

// Newton direction for (blockdiag(B) + U U^T) d = -g.
std::vector<Vec2> woodbury_solve(const Assembly& a, std::size_t kc, const std::vector<Vec2>& rhs_vec) {
    const std::size_t n = a.block.size();
    std::vector<Vec2> z(n);
    std::vector<std::array<Vec2, kMaxCoupling>> w(n);
    double m[kMaxCoupling][kMaxCoupling] = {};
    double rhs[kMaxCoupling] = {};
    for (std::size_t k = 0; k < kc; ++k) m[k][k] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = solve2(a.block[i], a.det[i], rhs_vec[i]);
        for (std::size_t k = 0; k < kc; ++k) {
            w[i][k] = solve2(a.block[i], a.det[i], a.u[i][k]);
            rhs[k] += a.u[i][k][0] * z[i][0] + a.u[i][k][1] * z[i][1];
        }
        for (std::size_t k = 0; k < kc; ++k)
            for (std::size_t l = 0; l < kc; ++l)
                m[k][l] += a.u[i][k][0] * w[i][l][0] + a.u[i][k][1] * w[i][l][1];
    }
    double coef[kMaxCoupling] = {};
    if (kc == 1) {
        coef[0] = rhs[0] / m[0][0];
    } else if (kc == 2) {
        const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        coef[0] = (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det;
        coef[1] = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    }
    std::vector<Vec2> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 v = z[i];
        for (std::size_t k = 0; k < kc; ++k) {
            v[0] -= w[i][k][0] * coef[k];
            v[1] -= w[i][k][1] * coef[k];
        }
        d[i] = v;
    }
    return d;
}

// r = rhs - (B + U U^T) d
std::vector<Vec2> residual(const Assembly& a, std::size_t kc, const std::vector<Vec2>& rhs,
                           const std::vector<Vec2>& d) {
    const std::size_t n = a.block.size();
    std::array<double, kMaxCoupling> ud{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < kc; ++k) ud[k] += a.u[i][k][0] * d[i][0] + a.u[i][k][1] * d[i][1];
    std::vector<Vec2> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Sym2& h = a.block[i];
        Vec2 v{rhs[i][0] - (h.xx * d[i][0] + h.xy * d[i][1]), rhs[i][1] - (h.xy * d[i][0] + h.yy * d[i][1])};
        for (std::size_t k = 0; k < kc; ++k) {
            v[0] -= a.u[i][k][0] * ud[k];
            v[1] -= a.u[i][k][1] * ud[k];
        }
        r[i] = v;
    }
    return r;
}

std::vector<Vec2> newton_direction(const Assembly& a, std::size_t kc) {
    const std::size_t n = a.block.size();
    std::vector<Vec2> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = {-a.grad[i][0], -a.grad[i][1]};
    auto d = woodbury_solve(a, kc, rhs);
    for (int pass = 0; pass < 3; ++pass) {
        const auto r = residual(a, kc, rhs, d);
        const auto c = woodbury_solve(a, kc, r);
        for (std::size_t i = 0; i < n; ++i) {
            d[i][0] += c[i][0];
            d[i][1] += c[i][1];
        }
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += a.grad[i][0] * d[i][0] + a.grad[i][1] * d[i][1];
    if (!(slope < 0.0)) {
        // Block-diagonal fallback; always a descent direction.
        for (std::size_t i = 0; i < n; ++i) d[i] = solve2(a.block[i], a.det[i], rhs[i]);
    }
    return d;
}

}  // namespace

BarrierResult minimize(const SeparableModel& model, std::vector<Vec2> x, const BarrierOptions& options) {
    const std::size_t n = model.units();
    const std::size_t kc = model.couplings();

    BarrierResult result;
    Term scratch[kMaxLocal];
    std::size_t m = kc;
    for (std::size_t i = 0; i < n; ++i) m += model.local(i, x[i], scratch);
    result.constraint_count = m;

    Assembly a;
    std::array<double, kMaxCoupling> slack{};
    double f0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) f0 += model.objective(i, x[i]).value;
    double t = static_cast<double>(std::max<std::size_t>(m, 1)) / std::max(1.0, std::abs(f0));

    int iterations = 0;
    bool converged = false;
    bool have_assembly = false;
    while (iterations < options.max_iterations) {
        // Centering.
        while (iterations < options.max_iterations) {
            have_assembly = assemble(model, x, t, a, slack);
            if (!have_assembly) break;
            const auto d = newton_direction(a, kc);
            double slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) slope += a.grad[i][0] * d[i][0] + a.grad[i][1] * d[i][1];
            const double decrement = -slope;
            if (!(decrement > 0.0) || 0.5 * decrement <= options.centering_tol) break;

            ++iterations;
            double scale = 0.0;
            const double base = barrier_value(model, x, t, scale);
            const double roundoff = 1e-13 * scale;
            std::vector<Vec2> trial(n);
            double step = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
                for (std::size_t i = 0; i < n; ++i) trial[i] = {x[i][0] + step * d[i][0], x[i][1] + step * d[i][1]};
                double s2 = 0.0;
                const double value = barrier_value(model, trial, t, s2);
                if (value <= base + 0.01 * step * slope + roundoff) {
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
            x.swap(trial);
        }
        if (!have_assembly) break;
        if (static_cast<double>(m) / t <= options.gap_tol * std::max(1.0, std::abs(a.f))) {
            converged = true;
            break;
        }
        t *= options.t_growth;
    }

    if (assemble(model, x, t, a, slack)) {
        double ginf = 0.0;
        for (const auto& g : a.grad) ginf = std::max({ginf, std::abs(g[0]), std::abs(g[1])});
        result.stationarity = ginf / (t * std::max(1.0, a.grad_f_inf));
        for (std::size_t k = 0; k < kc; ++k) result.coupling_multiplier[k] = 1.0 / (t * slack[k]);
    } else {
        converged = false;
    }
    result.x = std::move(x);
    result.objective = a.f;
    result.t = t;
    result.iterations = iterations;
    result.converged = converged;
    return result;
}

}  // namespace rruc::detail
