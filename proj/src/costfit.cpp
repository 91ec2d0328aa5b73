#include "rruc/costfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>
#include <json.hpp>

#include "rruc/errors.hpp"
#include "rruc/text.hpp"

namespace rruc {

namespace {

// Basis terms selectable for a constrained refit.
enum Term : unsigned { kQuad = 1u, kLin = 2u, kConst = 4u };

struct Coeffs {
    double a = 0.0, b = 0.0, c = 0.0;
};

// Least squares restricted to the terms in `mask`. P is scaled by its largest
// magnitude so the normal columns stay comparable.
Coeffs least_squares(const std::vector<CostSample>& samples, unsigned mask) {
    double scale = 0.0;
    for (const auto& s : samples) scale = std::max(scale, std::abs(s.p));
    if (scale == 0.0) scale = 1.0;

    std::vector<unsigned> terms;
    for (unsigned t : {kQuad, kLin, kConst})
        if (mask & t) terms.push_back(t);

    Eigen::MatrixXd A(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(terms.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const double x = samples[r].p / scale;
        for (std::size_t k = 0; k < terms.size(); ++k) {
            A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
                terms[k] == kQuad ? x * x : terms[k] == kLin ? x : 1.0;
        }
        y(static_cast<Eigen::Index>(r)) = samples[r].cost;
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(y);

    Coeffs out;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const double v = sol(static_cast<Eigen::Index>(k));
        if (terms[k] == kQuad) out.a = v / (scale * scale);
        else if (terms[k] == kLin) out.b = v / scale;
        else out.c = v;
    }
    return out;
}

double r_squared(const std::vector<CostSample>& samples, const Coeffs& q) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s.cost;
    mean /= static_cast<double>(samples.size());
    double ss_res = 0.0, ss_tot = 0.0, peak = 0.0;
    for (const auto& s : samples) {
        const double model = (q.a * s.p + q.b) * s.p + q.c;
        ss_res += (s.cost - model) * (s.cost - model);
        ss_tot += (s.cost - mean) * (s.cost - mean);
        peak = std::max(peak, std::abs(s.cost));
    }
    const double noise = 1e-24 * static_cast<double>(samples.size()) * std::max(1.0, peak * peak);
    if (ss_tot <= noise) return ss_res <= noise ? 1.0 : 0.0;
    return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

}  // namespace

void validate(const BidCurve& curve, bool allow_nonmonotone) {
    const std::string who = "bid curve '" + curve.id + "': ";
    if (curve.id.empty()) throw InputError("bid curve with empty id");
    if (curve.steps.empty()) throw InputError(who + "no steps");
    if (!(curve.eco_max > 0.0)) throw InputError(who + "eco_max must be > 0");
    if (!(curve.eco_min >= 0.0 && curve.eco_min <= curve.eco_max))
        throw InputError(who + "eco_min must lie in [0, eco_max]");
    if (!std::isfinite(curve.no_load_cost) || !std::isfinite(curve.startup_cost))
        throw InputError(who + "costs must be finite");
    double prev = 0.0;
    for (std::size_t i = 0; i < curve.steps.size(); ++i) {
        const auto& s = curve.steps[i];
        if (!std::isfinite(s.mw) || !std::isfinite(s.price)) throw InputError(who + "non-finite step");
        if (!(s.mw > prev)) throw InputError(who + "breakpoints must be positive and strictly increasing");
        if (!allow_nonmonotone && i > 0 && s.price < curve.steps[i - 1].price)
            throw InputError(who + "step prices decrease at step " + std::to_string(i) +
                             " (use allow-nonmonotone to fit anyway)");
        prev = s.mw;
    }
    if (curve.steps.back().mw != curve.eco_max) throw InputError(who + "last breakpoint must equal eco_max");
}

double total_cost_at(const BidCurve& curve, double p, bool amortize_startup) {
    double cost = curve.no_load_cost + (amortize_startup ? curve.startup_cost : 0.0);
    double lo = 0.0;
    for (const auto& s : curve.steps) {
        if (p <= lo) break;
        cost += s.price * (std::min(p, s.mw) - lo);
        lo = s.mw;
    }
    return cost;
}

std::vector<CostSample> integrate_bid_curve(const BidCurve& curve, double grid, const FitOptions& options) {
    validate(curve, options.allow_nonmonotone);
    if (!(grid > 0.0)) throw InputError("integrate: grid spacing must be > 0");

    std::vector<double> points;
    const double span = curve.eco_max - curve.eco_min;
    const auto count = static_cast<std::size_t>(std::floor(span / grid + 1e-9));
    for (std::size_t i = 0; i <= count; ++i) points.push_back(curve.eco_min + static_cast<double>(i) * grid);
    points.push_back(curve.eco_max);
    for (const auto& s : curve.steps)
        if (s.mw >= curve.eco_min) points.push_back(s.mw);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end(),
                             [&](double x, double y) { return std::abs(x - y) <= 1e-12 * curve.eco_max; }),
                 points.end());

    std::vector<CostSample> out;
    out.reserve(points.size());
    for (double p : points) {
        p = std::min(p, curve.eco_max);
        out.push_back({p, total_cost_at(curve, p, options.amortize_startup)});
    }
    return out;
}

QuadraticFit fit_quadratic(const std::vector<CostSample>& samples) {
    if (samples.size() < 3) throw InputError("fit_quadratic: need at least 3 samples");
    double lo = samples.front().p, hi = samples.front().p, peak = 0.0;
    for (const auto& s : samples) {
        lo = std::min(lo, s.p);
        hi = std::max(hi, s.p);
        peak = std::max(peak, std::abs(s.cost));
    }
    if (!(hi > lo)) throw InputError("fit_quadratic: rank-deficient samples (all P equal)");

    std::size_t distinct = 0;
    {
        std::vector<double> ps;
        for (const auto& s : samples) ps.push_back(s.p);
        std::sort(ps.begin(), ps.end());
        distinct = static_cast<std::size_t>(std::unique(ps.begin(), ps.end()) - ps.begin());
    }

    Coeffs q;
    bool linear = distinct < 3;
    if (!linear) {
        q = least_squares(samples, kQuad | kLin | kConst);
        const double pmax = std::max(std::abs(lo), std::abs(hi));
        // Curvature that contributes less than roundoff over the sample range is noise.
        linear = q.a * pmax * pmax <= 1e-12 * std::max(1.0, peak);
    }
    if (linear) q = least_squares(samples, kLin | kConst);
    return {q.a, q.b, q.c, r_squared(samples, q)};
}

GeneratorFit bid_curve_to_generator(const BidCurve& curve, const FitOptions& options) {
    validate(curve, options.allow_nonmonotone);
    const int grid_points = std::max(2, options.grid_points);
    const double span = curve.eco_max - curve.eco_min;
    std::vector<CostSample> samples;
    if (span > 0.0) {
        samples = integrate_bid_curve(curve, span / (grid_points - 1), options);
    } else {
        samples = integrate_bid_curve(curve, curve.eco_max, options);
    }

    GeneratorFit out;
    out.fit = fit_quadratic(samples);
    if (out.fit.b < 0.0) {
        out.warnings.push_back("unit '" + curve.id + "': fitted b=" + format_double(out.fit.b) +
                               " < 0, clamped to 0 and refit");
        const Coeffs q = least_squares(samples, out.fit.a > 0.0 ? (kQuad | kConst) : kConst);
        out.fit = {std::max(0.0, q.a), 0.0, q.c, 0.0};
        out.fit.r_squared = r_squared(samples, {out.fit.a, out.fit.b, out.fit.c});
    }

    auto& g = out.generator;
    g.id = curve.id;
    g.p_min = curve.eco_min;
    g.p_max = curve.eco_max;
    g.a = out.fit.a;
    g.b = out.fit.b;
    g.c = out.fit.c;
    g.startup_cost = curve.startup_cost;
    g.first_step_price = curve.steps.front().price;
    double top = curve.steps.front().price;
    for (const auto& s : curve.steps) top = std::max(top, s.price);
    g.max_step_price = top;
    validate(g);
    return out;
}

std::vector<BidCurve> parse_bid_curves(const std::string& json_text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("bid curves JSON: ") + e.what());
    }
    if (!doc.is_array()) throw InputError("bid curves JSON: expected an array");

    std::vector<BidCurve> curves;
    std::size_t index = 0;
    for (const auto& item : doc) {
        const std::string ctx = "curve #" + std::to_string(index++);
        auto num = [&](const json& obj, const char* key, bool required) -> double {
            auto it = obj.find(key);
            if (it == obj.end() || it->is_null()) {
                if (required) throw InputError("bid curves JSON: " + ctx + " missing '" + key + "'");
                return 0.0;
            }
            if (!it->is_number()) throw InputError("bid curves JSON: " + ctx + " '" + key + "' is not a number");
            return it->get<double>();
        };
        if (!item.is_object()) throw InputError("bid curves JSON: " + ctx + " is not an object");
        BidCurve c;
        if (!item.contains("id") || !item["id"].is_string())
            throw InputError("bid curves JSON: " + ctx + " missing string 'id'");
        c.id = item["id"].get<std::string>();
        c.no_load_cost = num(item, "no_load_cost_usd_per_h", true);
        c.startup_cost = num(item, "startup_usd", false);
        c.eco_min = num(item, "eco_min_mw", true);
        c.eco_max = num(item, "eco_max_mw", true);
        if (!item.contains("steps") || !item["steps"].is_array())
            throw InputError("bid curves JSON: " + ctx + " missing 'steps' array");
        for (const auto& s : item["steps"]) {
            if (!s.is_object()) throw InputError("bid curves JSON: " + ctx + " step is not an object");
            c.steps.push_back({num(s, "mw", true), num(s, "price_usd_per_mwh", true)});
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

std::vector<BidCurve> load_bid_curves(const std::filesystem::path& path) {
    try {
        return parse_bid_curves(read_file(path));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

}  // namespace rruc
