#pragma once

// Log-barrier Newton method for problems that are separable over units with
// two variables each, coupled only through at most two additive constraints:
//
//   min  sum_i f_i(x_i)
//   s.t. s_ij(x_i) > 0             (local constraints, per unit)
//        sum_i g_ki(x_i) - rhs_k > 0  (coupling constraints, k < 2)
//
// The barrier Hessian is block diagonal (2x2 per unit) plus one rank-one term
// per coupling constraint, so each Newton step is O(n) via Woodbury.

#include <array>
#include <cstddef>
#include <vector>

namespace rruc::detail {

using Vec2 = std::array<double, 2>;

/// Symmetric 2x2 stored as (xx, xy, yy).
struct Sym2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;
};

struct Term {
    double value = 0.0;
    Vec2 grad{};
    Sym2 hess{};
    // When set, hess == root * root^T exactly; lets the solver form 2x2
    // determinants without cancellation.
    bool factored = false;
    Vec2 root{};
};

constexpr std::size_t kMaxLocal = 4;
constexpr std::size_t kMaxCoupling = 2;

class SeparableModel {
public:
    virtual ~SeparableModel() = default;

    virtual std::size_t units() const = 0;
    /// Which of the two coordinates of unit i the solver may move.
    virtual std::array<bool, 2> free_coords(std::size_t i) const = 0;
    virtual Term objective(std::size_t i, const Vec2& x) const = 0;
    /// Writes the local constraint slacks of unit i into `out`, returns count.
    virtual std::size_t local(std::size_t i, const Vec2& x, Term* out) const = 0;

    virtual std::size_t couplings() const = 0;
    virtual Term coupling(std::size_t k, std::size_t i, const Vec2& x) const = 0;
    virtual double coupling_rhs(std::size_t k) const = 0;
};

struct BarrierOptions {
    double gap_tol = 1e-7;     // stop when (constraints / t) <= gap_tol * max(1, |f|)
    int max_iterations = 200;  // total Newton steps
    double t_growth = 20.0;
    double centering_tol = 1e-9;  // Newton decrement^2 / 2
};

struct BarrierResult {
    std::vector<Vec2> x;
    double objective = 0.0;
    double t = 0.0;
    std::array<double, kMaxCoupling> coupling_multiplier{};  // 1 / (t * slack)
    std::size_t constraint_count = 0;
    int iterations = 0;
    bool converged = false;
    double stationarity = 0.0;  // ||grad of barrier function|| / t, scaled
};

/// `x0` must be strictly feasible.
BarrierResult minimize(const SeparableModel& model, std::vector<Vec2> x0, const BarrierOptions& options);

}  // namespace rruc::detail
