// Oracle tests for the Burgers profiles.  Expected values are produced by
// independent means: a bisection root-finder for the cubic, central finite
// differences for every derivative order, and hand-derived closed forms.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "shockss/profile.h"

using namespace shockss;

namespace {

// =============================================================================
// Independent oracles
// =============================================================================

// Bisection solve of W + W^3 = -y1 (no Cardano involved).
double root_by_bisection(double y1)
{
    double lo = -1.0, hi = 1.0;
    auto f = [y1](double w) { return w + w * w * w + y1; };  // increasing in w
    while (f(lo) > 0.0) lo *= 2.0;
    while (f(hi) < 0.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) >= 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Central finite difference of a callable, order 1..4, Richardson-free
// (plain stencils; tolerances account for the truncation error).
template <typename F>
double fd(F f, double x, int order, double h)
{
    switch (order) {
        case 1: return (f(x + h) - f(x - h)) / (2 * h);
        case 2: return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
        case 3:
            return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) /
                   (2 * h * h * h);
        default:
            return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) +
                    f(x - 2 * h)) /
                   (h * h * h * h);
    }
}

}  // namespace

// =============================================================================
// w1d
// =============================================================================

TEST_CASE("w1d matches frozen values and the defining cubic")
{
    CHECK(w1d(0.0) == 0.0);
    CHECK(w1d(-2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w1d(-10.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(w1d(2.0) == doctest::Approx(-1.0).epsilon(1e-14));

    // Residual of the cubic over 14 decades, relative to the dominant term.
    for (double y = 1e-12; y < 1e12; y *= 10.0) {
        for (double s : {y, -y}) {
            const double W = w1d(s);
            const double scale = std::fabs(s) + std::fabs(W) + W * W * std::fabs(W);
            CHECK(std::fabs(W + W * W * W + s) / scale <= 1e-12);
        }
    }
}

TEST_CASE("w1d agrees with a bisection oracle and is odd and decreasing")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(-100.0, 100.0);
    double prev_y = -101.0, prev_w = w1d(-101.0);
    std::vector<double> samples;
    for (int i = 0; i < 200; ++i) samples.push_back(uni(rng));
    for (double y : samples) {
        CHECK(w1d(y) == doctest::Approx(root_by_bisection(y)).epsilon(1e-12));
        CHECK(w1d(-y) == doctest::Approx(-w1d(y)).epsilon(1e-14));
    }
    for (double y = -50.0; y <= 50.0; y += 0.5) {
        CHECK(y > prev_y);
        const double w = w1d(y);
        CHECK(w < prev_w);
        prev_y = y;
        prev_w = w;
    }
}

TEST_CASE("w1d rejects non-finite input")
{
    CHECK_THROWS_AS(w1d(std::nan("")), std::domain_error);
    CHECK_THROWS_AS(w1d(INFINITY), std::domain_error);
}

// =============================================================================
// w1d_deriv
// =============================================================================

TEST_CASE("w1d_deriv frozen values")
{
    CHECK(w1d_deriv(0.0, 1) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(w1d_deriv(-2.0, 1) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(w1d_deriv(0.0, 2) == doctest::Approx(0.0));
    CHECK(w1d_deriv(0.0, 3) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(w1d_deriv(0.0, 4) == doctest::Approx(0.0));
    CHECK_THROWS_AS(w1d_deriv(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(w1d_deriv(1.0, 5), std::invalid_argument);
}

TEST_CASE("w1d_deriv orders 1..4 match finite differences of w1d")
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uni(-100.0, 100.0);
    auto f = [](double x) { return w1d(x); };
    for (int i = 0; i < 100; ++i) {
        const double x = uni(rng);
        CHECK(w1d_deriv(x, 1) == doctest::Approx(fd(f, x, 1, 1e-5)).epsilon(1e-6));
        CHECK(w1d_deriv(x, 2) ==
              doctest::Approx(fd(f, x, 2, 1e-4)).epsilon(1e-5).scale(1.0));
        CHECK(w1d_deriv(x, 3) ==
              doctest::Approx(fd(f, x, 3, 1e-3)).epsilon(1e-4).scale(1.0));
        CHECK(w1d_deriv(x, 4) ==
              doctest::Approx(fd(f, x, 4, 5e-3)).epsilon(1e-3).scale(1.0));
    }
}

TEST_CASE("w1d_deriv large-argument asymptotics")
{
    // W'(r) = -1/3 r^(-2/3) - 1/9 r^(-4/3) + O(r^(-8/3))
    for (double r : {1e2, 1e3, 1e4}) {
        const double asym = -std::pow(r, -2.0 / 3.0) / 3.0 - std::pow(r, -4.0 / 3.0) / 9.0;
        CHECK(std::fabs(w1d_deriv(r, 1) - asym) <= 2.0 * std::pow(r, -8.0 / 3.0));
    }
}

// =============================================================================
// bar_w
// =============================================================================

TEST_CASE("bar_w frozen values")
{
    const auto origin = bar_w({0, 0, 0}, 2);
    CHECK(origin.value == 0.0);
    CHECK(origin.grad[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(origin.grad[1] == 0.0);
    CHECK(origin.grad[2] == 0.0);
    for (double h : origin.hess) CHECK(std::fabs(h) <= 1e-10);

    CHECK(bar_w_value({-10, 0, 0}) == doctest::Approx(2.0).epsilon(1e-14));
    // bracket = sqrt(2), argument -2, W1d(-2) = 1
    CHECK(bar_w_value({-2.0 * std::pow(2.0, 1.5), 1, 0}) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("bar_w derivatives match finite differences")
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uni(-8.0, 8.0);
    for (int trial = 0; trial < 60; ++trial) {
        const std::array<double, 3> y = {uni(rng), uni(rng), uni(rng)};
        const auto p = bar_w(y, 3);
        for (int d = 0; d < 3; ++d) {
            auto along = [&](double t) {
                auto q = y;
                q[d] = t;
                return bar_w_value(q);
            };
            CHECK(p.grad[d] ==
                  doctest::Approx(fd(along, y[d], 1, 1e-5)).epsilon(1e-6).scale(1.0));
        }
        // Hessian: differentiate the analytic gradient once.
        const int hi[6] = {0, 0, 0, 1, 1, 2};
        const int hj[6] = {0, 1, 2, 1, 2, 2};
        for (int k = 0; k < 6; ++k) {
            auto along = [&](double t) {
                auto q = y;
                q[hj[k]] = t;
                return bar_w(q, 1).grad[hi[k]];
            };
            CHECK(p.hess[k] ==
                  doctest::Approx(fd(along, y[hj[k]], 1, 1e-5)).epsilon(1e-5).scale(1.0));
        }
        // Third derivatives with one index 1: differentiate the Hessian.
        const int ti[6] = {0, 0, 0, 1, 1, 2};
        const int tj[6] = {0, 1, 2, 1, 2, 2};
        for (int k = 0; k < 6; ++k) {
            auto along = [&](double t) {
                auto q = y;
                q[tj[k]] = t;
                const auto hh = bar_w(q, 2).hess;
                return (ti[k] == 0) ? hh[0] : hh[ti[k] == 1 ? 1 : 2];
            };
            // d(1,ti,tj): vary tj of hess entry (1,ti)
            CHECK(p.third[k] ==
                  doctest::Approx(fd(along, y[tj[k]], 1, 1e-5)).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("bar_w slope is strictly negative along y1")
{
    for (double y1 = -40.0; y1 <= 40.0; y1 += 0.37) {
        for (double yc = 0.0; yc <= 6.0; yc += 1.5) {
            CHECK(bar_w_grad({y1, yc, 0.4 * yc})[0] < 0.0);
        }
    }
}

// =============================================================================
// burgers_residual / genericity
// =============================================================================

TEST_CASE("stationary residual vanishes to roundoff")
{
    CHECK(burgers_residual({{0, 0, 0}}) == 0.0);
    CHECK(burgers_residual({{-2, 0, 0}}) <= 1e-12);

    std::vector<std::array<double, 3>> grid;
    for (int i = 0; i < 21; ++i)
        for (int j = 0; j < 21; ++j)
            for (int k = 0; k < 21; ++k)
                grid.push_back({-10.0 + i, -10.0 + j, -10.0 + k});
    CHECK(burgers_residual(grid) <= 1e-9);
}

TEST_CASE("genericity data")
{
    const auto g = genericity_data();
    CHECK(g.a111 == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(g.a122 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g.a133 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g.hess_d1w[1] == doctest::Approx(0.0));  // mixed 112
    CHECK(g.hess_d1w[4] == doctest::Approx(0.0));  // mixed 123
    CHECK(g.positive_definite);
}
