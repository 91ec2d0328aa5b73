#include <doctest.h>

#include <cmath>

#include "rruc/costfit.hpp"
#include "rruc/errors.hpp"
#include "rruc/random.hpp"

using namespace rruc;

namespace {

BidCurve one_step(double price, double no_load, double eco_min, double eco_max) {
    BidCurve c;
    c.id = "flat";
    c.no_load_cost = no_load;
    c.eco_min = eco_min;
    c.eco_max = eco_max;
    c.steps = {{eco_max, price}};
    return c;
}

BidCurve random_curve(Rng& rng, bool monotone = true) {
    BidCurve c;
    c.id = "r";
    c.no_load_cost = uniform(rng, 0.0, 1500.0);
    c.startup_cost = uniform(rng, 0.0, 5000.0);
    const int steps = 1 + static_cast<int>(uniform_int(rng, 0, 9));
    double mw = 0.0, price = uniform(rng, 10.0, 80.0);
    for (int i = 0; i < steps; ++i) {
        mw += uniform(rng, 1.0, 40.0);
        price += monotone ? uniform(rng, 0.0, 30.0) : uniform(rng, -30.0, 30.0);
        c.steps.push_back({mw, std::max(0.0, price)});
    }
    c.eco_max = mw;
    c.eco_min = uniform(rng, 0.0, 0.5) * mw;
    return c;
}

// Marginal price at q, read straight off the steps.
double step_price(const BidCurve& c, double q) {
    for (const auto& s : c.steps)
        if (q < s.mw) return s.price;
    return c.steps.back().price;
}

// Composite trapezoid rule on the step marginal price.
double trapezoid_cost(const BidCurve& c, double p, int n) {
    double sum = 0.0;
    const double h = p / n;
    for (int i = 0; i < n; ++i) {
        const double x0 = i * h, x1 = (i + 1) * h;
        sum += 0.5 * h * (step_price(c, x0) + step_price(c, std::nextafter(x1, 0.0)));
    }
    return c.no_load_cost + sum;
}

}  // namespace

TEST_CASE("integral: constant price") {
    const auto c = one_step(20.0, 50.0, 0.0, 100.0);
    CHECK(total_cost_at(c, 50.0) == doctest::Approx(1050.0).epsilon(1e-15));
    CHECK(total_cost_at(c, 0.0) == 50.0);
}

TEST_CASE("integral: two steps") {
    BidCurve c;
    c.id = "two";
    c.no_load_cost = 7.0;
    c.eco_max = 100.0;
    c.steps = {{50.0, 10.0}, {100.0, 30.0}};
    CHECK(total_cost_at(c, 75.0) == doctest::Approx(7.0 + 10.0 * 50.0 + 30.0 * 25.0).epsilon(1e-15));
    CHECK(total_cost_at(c, 50.0) == doctest::Approx(507.0));
    CHECK(total_cost_at(c, 100.0) == doctest::Approx(7.0 + 500.0 + 1500.0));
}

TEST_CASE("integral: startup only under amortization") {
    auto c = one_step(20.0, 50.0, 0.0, 100.0);
    c.startup_cost = 300.0;
    CHECK(total_cost_at(c, 10.0) == doctest::Approx(250.0));
    CHECK(total_cost_at(c, 10.0, true) == doctest::Approx(550.0));
}

TEST_CASE("integral matches a trapezoid oracle at random P") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto c = random_curve(rng);
        const double p = uniform(rng, 0.0, c.eco_max);
        const double exact = total_cost_at(c, p);
        const double approx = trapezoid_cost(c, p, 20000);
        // Each step jump costs at most h * jump / 2 in the trapezoid rule.
        CHECK(std::abs(exact - approx) <= 1e-3 * std::max(1.0, exact));
    }
}

TEST_CASE("samples: grid plus breakpoints, sorted and convex") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = random_curve(rng);
        const auto s = integrate_bid_curve(c, (c.eco_max - c.eco_min) / 19.0);
        REQUIRE(s.size() >= 2);
        CHECK(s.front().p == doctest::Approx(c.eco_min));
        CHECK(s.back().p == doctest::Approx(c.eco_max));
        for (std::size_t i = 1; i < s.size(); ++i) {
            CHECK(s[i].p > s[i - 1].p);
            CHECK(s[i].cost >= s[i - 1].cost);
        }
        // Slopes between consecutive samples never decrease.
        for (std::size_t i = 2; i < s.size(); ++i) {
            const double d1 = (s[i - 1].cost - s[i - 2].cost) / (s[i - 1].p - s[i - 2].p);
            const double d2 = (s[i].cost - s[i - 1].cost) / (s[i].p - s[i - 1].p);
            CHECK(d2 - d1 >= -1e-9 * std::max(1.0, std::abs(d1)));
        }
        for (const auto& step : c.steps) {
            if (step.mw < c.eco_min) continue;
            bool found = false;
            for (const auto& x : s) found = found || std::abs(x.p - step.mw) <= 1e-9 * c.eco_max;
            CHECK(found);
        }
    }
}

TEST_CASE("validation of curves") {
    auto c = one_step(20.0, 50.0, 0.0, 100.0);
    CHECK_NOTHROW(validate(c));
    auto empty = c;
    empty.steps.clear();
    CHECK_THROWS_AS(validate(empty), InputError);
    auto unsorted = c;
    unsorted.steps = {{60.0, 10.0}, {40.0, 12.0}, {100.0, 20.0}};
    CHECK_THROWS_AS(validate(unsorted), InputError);
    auto last = c;
    last.steps = {{90.0, 10.0}};
    CHECK_THROWS_AS(validate(last), InputError);
    auto dip = c;
    dip.steps = {{50.0, 30.0}, {100.0, 10.0}};
    CHECK_THROWS_AS(validate(dip), InputError);
    CHECK_NOTHROW(validate(dip, true));
    CHECK_THROWS_AS(integrate_bid_curve(c, 0.0), InputError);
}

TEST_CASE("fit: exact quadratic recovery") {
    std::vector<CostSample> s;
    for (int i = 0; i <= 20; ++i) {
        const double p = 10.0 + 4.5 * i;
        s.push_back({p, 0.02 * p * p + 5.0 * p + 300.0});
    }
    const auto q = fit_quadratic(s);
    CHECK(std::abs(q.a - 0.02) <= 1e-9 * 0.02);
    CHECK(std::abs(q.b - 5.0) <= 1e-9 * 5.0);
    CHECK(std::abs(q.c - 300.0) <= 1e-9 * 300.0);
    CHECK(q.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit: random exact quadratics") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = uniform(rng, 1e-4, 0.5), b = uniform(rng, 1.0, 150.0), c = uniform(rng, 0.0, 2000.0);
        const double lo = uniform(rng, 0.0, 50.0), hi = lo + uniform(rng, 5.0, 300.0);
        std::vector<CostSample> s;
        for (int i = 0; i < 25; ++i) {
            const double p = lo + (hi - lo) * i / 24.0;
            s.push_back({p, (a * p + b) * p + c});
        }
        const auto q = fit_quadratic(s);
        CHECK(std::abs(q.a - a) <= 1e-9 * a);
        CHECK(std::abs(q.b - b) <= 1e-9 * b);
        CHECK(std::abs(q.c - c) <= 1e-9 * std::max(1.0, c));
    }
}

TEST_CASE("fit: linear cost gives a = 0 exactly") {
    std::vector<CostSample> s;
    for (int i = 0; i <= 10; ++i) s.push_back({10.0 * i, 40.0 * (10.0 * i) + 120.0});
    const auto q = fit_quadratic(s);
    CHECK(q.a == 0.0);
    CHECK(q.b == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(q.c == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("fit: concave data is clamped to a line") {
    std::vector<CostSample> s;
    for (int i = 0; i <= 10; ++i) {
        const double p = 10.0 * i;
        s.push_back({p, -0.05 * p * p + 30.0 * p + 100.0});
    }
    const auto q = fit_quadratic(s);
    CHECK(q.a == 0.0);
    CHECK(q.r_squared <= 1.0);
    CHECK(q.r_squared >= 0.0);
}

TEST_CASE("fit: degenerate inputs") {
    CHECK_THROWS_AS(fit_quadratic({{1, 2}, {2, 3}}), InputError);
    CHECK_THROWS_AS(fit_quadratic({{5, 2}, {5, 3}, {5, 4}}), InputError);
}

TEST_CASE("generator from a constant-price curve") {
    auto c = one_step(42.0, 310.0, 20.0, 90.0);
    c.startup_cost = 1000.0;
    const auto r = bid_curve_to_generator(c);
    CHECK(r.generator.a == 0.0);
    CHECK(r.generator.b == doctest::Approx(42.0).epsilon(1e-12));
    CHECK(r.generator.c == doctest::Approx(310.0).epsilon(1e-12));
    CHECK(r.generator.p_min == 20.0);
    CHECK(r.generator.p_max == 90.0);
    CHECK(r.generator.startup_cost == 1000.0);
    CHECK(*r.generator.first_step_price == 42.0);
    CHECK(*r.generator.max_step_price == 42.0);
    CHECK(r.warnings.empty());

    FitOptions amortized;
    amortized.amortize_startup = true;
    CHECK(bid_curve_to_generator(c, amortized).generator.c == doctest::Approx(1310.0));
}

TEST_CASE("generator carries peaker metadata") {
    BidCurve c;
    c.id = "peaker";
    c.no_load_cost = 0.0;
    c.startup_cost = 227.0;
    c.eco_min = 7.0;
    c.eco_max = 20.0;
    c.steps = {{10.0, 768.0}, {15.0, 800.0}, {20.0, 850.0}};
    const auto g = bid_curve_to_generator(c).generator;
    CHECK(g.p_min == 7.0);
    CHECK(g.p_max == 20.0);
    CHECK(*g.first_step_price == 768.0);
    CHECK(*g.max_step_price == 850.0);
    CHECK(g.startup_cost == 227.0);
    CHECK(g.a >= 0.0);
    CHECK(g.b >= 0.0);
}

TEST_CASE("fits of monotone step curves are good and valid") {
    Rng rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = random_curve(rng);
        const auto r = bid_curve_to_generator(c);
        CHECK(r.generator.a >= 0.0);
        CHECK(r.generator.b >= 0.0);
        CHECK(r.fit.r_squared <= 1.0);
        CHECK(r.fit.r_squared >= 0.0);
    }
}

TEST_CASE("negative linear coefficient is clamped with a warning") {
    BidCurve c;
    c.id = "steep";
    c.no_load_cost = 0.0;
    c.eco_min = 90.0;
    c.eco_max = 100.0;
    // Very cheap start then a huge jump: the fitted line through the window has
    // a steep slope and negative intercept, the quadratic wants b < 0.
    c.steps = {{95.0, 1.0}, {100.0, 1000.0}};
    const auto r = bid_curve_to_generator(c);
    CHECK(r.generator.b >= 0.0);
    CHECK(r.generator.a >= 0.0);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("curve JSON parsing") {
    const auto curves = parse_bid_curves(R"([{"id": "u1", "no_load_cost_usd_per_h": 100, "startup_usd": 50,
        "eco_min_mw": 10, "eco_max_mw": 60, "steps": [{"mw": 30, "price_usd_per_mwh": 20},
        {"mw": 60, "price_usd_per_mwh": 25}]}])");
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].id == "u1");
    CHECK(curves[0].steps.size() == 2);
    CHECK(curves[0].steps[1].price == 25.0);
    CHECK_THROWS_AS(parse_bid_curves("{}"), InputError);
    CHECK_THROWS_AS(parse_bid_curves(R"([{"id": "x"}])"), InputError);
}
