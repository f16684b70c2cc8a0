// Oracle tests for grids, finite-difference stencils, origin jets, weight
// functions, support checks, and snapshot IO.  Classical uniform-grid stencil
// coefficients and monomial exactness serve as the differentiation oracles.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "shockss/fields.h"
#include "shockss/profile.h"

using namespace shockss;

namespace {

std::vector<double> sample(const Grid& g, double (*fn)(double, double, double))
{
    std::vector<double> f(g.size());
    for (int i1 = 0; i1 < g.n[0]; ++i1)
        for (int i2 = 0; i2 < g.n[1]; ++i2)
            for (int i3 = 0; i3 < g.n[2]; ++i3)
                f[g.idx(i1, i2, i3)] =
                    fn(g.coord[0][i1], g.coord[1][i2], g.coord[2][i3]);
    return f;
}

}  // namespace

// =============================================================================
// Stencil weights
// =============================================================================

TEST_CASE("fd_weights reproduces classical uniform coefficients")
{
    const double h = 0.25;
    const std::vector<double> x = {-2 * h, -h, 0, h, 2 * h};
    const auto w1 = fd_weights(x, 0.0, 1);
    const double c1[5] = {1.0 / (12 * h), -8.0 / (12 * h), 0.0, 8.0 / (12 * h),
                          -1.0 / (12 * h)};
    for (int i = 0; i < 5; ++i) CHECK(w1[i] == doctest::Approx(c1[i]).epsilon(1e-13));

    const auto w2 = fd_weights(x, 0.0, 2);
    const double c2[5] = {-1.0 / (12 * h * h), 16.0 / (12 * h * h),
                          -30.0 / (12 * h * h), 16.0 / (12 * h * h),
                          -1.0 / (12 * h * h)};
    for (int i = 0; i < 5; ++i) CHECK(w2[i] == doctest::Approx(c2[i]).epsilon(1e-13));

    CHECK_THROWS_AS(fd_weights(x, 0.0, 5), std::invalid_argument);
}

TEST_CASE("fd_weights is exact on monomials for arbitrary node layouts")
{
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> uni(0.02, 1.0);
    std::vector<double> x(7);
    double acc = -2.0;
    for (auto& v : x) {
        acc += uni(rng);
        v = acc;
    }
    const double z = 0.5 * (x[2] + x[3]);
    for (int m = 0; m <= 3; ++m) {
        const auto w = fd_weights(x, z, m);
        for (int deg = 0; deg <= 6; ++deg) {
            double got = 0.0;
            for (int i = 0; i < 7; ++i) got += w[i] * std::pow(x[i], deg);
            // exact m-th derivative of t^deg at z
            double want = 0.0;
            if (deg >= m) {
                want = 1.0;
                for (int k = 0; k < m; ++k) want *= deg - k;
                want *= std::pow(z, deg - m);
            }
            CHECK(got == doctest::Approx(want).epsilon(1e-9).scale(1.0));
        }
    }
}

// =============================================================================
// Grid construction
// =============================================================================

TEST_CASE("make_grid node layout")
{
    const Grid g = make_grid({9, 1, 1}, {4.0, 0, 0}, 0.0);
    CHECK(g.coord[0][4] == 0.0);
    CHECK(g.coord[0].front() == doctest::Approx(-4.0));
    CHECK(g.coord[0].back() == doctest::Approx(4.0));
    CHECK(g.coord[1].size() == 1);

    const Grid gs = make_grid({65, 1, 1}, {40.0, 0, 0}, 2.5);
    CHECK(gs.coord[0][32] == 0.0);
    CHECK(gs.coord[0].front() == doctest::Approx(-40.0).epsilon(1e-13));
    CHECK(gs.coord[0].back() == doctest::Approx(40.0).epsilon(1e-13));
    for (std::size_t i = 1; i < gs.coord[0].size(); ++i) {
        CHECK(gs.coord[0][i] > gs.coord[0][i - 1]);
    }
    // stretching concentrates nodes at the center
    const double inner = gs.coord[0][33] - gs.coord[0][32];
    const double outer = gs.coord[0][64] - gs.coord[0][63];
    CHECK(inner < outer / 4.0);
    CHECK(gs.spacing_at_origin(1) == doctest::Approx(inner));

    CHECK_THROWS_AS(make_grid({8, 1, 1}, {1, 0, 0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid({5, 1, 1}, {1, 0, 0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid({9, 1, 1}, {0, 0, 0}, 0.0), std::invalid_argument);
}

// =============================================================================
// Differentiation
// =============================================================================

TEST_CASE("derivative: exactness and accuracy")
{
    const Grid g = make_grid({1601, 1, 1}, {40.0, 0, 0}, 0.0);  // h = 0.05
    const auto lin = sample(g, [](double y1, double, double) { return y1; });
    const auto sine = sample(g, [](double y1, double, double) { return std::sin(y1); });
    for (int i : {0, 1, 2, 800, 1599, 1600}) {
        CHECK(derivative(lin, g, 1, i, 0, 0) == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(derivative(sine, g, 1, i, 0, 0) ==
              doctest::Approx(std::cos(g.coord[0][i])).epsilon(1e-6).scale(1.0));
    }
    // transverse axes are degenerate
    CHECK(derivative(sine, g, 2, 800, 0, 0) == 0.0);
    CHECK_THROWS_AS(derivative(sine, g, 4, 0, 0, 0), std::invalid_argument);

    // polynomial exactness: degree 4 on uniform, degree 3 on stretched
    const auto quart = sample(g, [](double y1, double, double) {
        return 1.0 + y1 - 0.5 * y1 * y1 + 0.125 * y1 * y1 * y1 +
               0.0625 * y1 * y1 * y1 * y1;
    });
    for (int i : {0, 3, 700, 1600}) {
        const double y = g.coord[0][i];
        const double want = 1.0 - y + 0.375 * y * y + 0.25 * y * y * y;
        CHECK(derivative(quart, g, 1, i, 0, 0) ==
              doctest::Approx(want).epsilon(1e-9).scale(1.0));
    }
    const Grid gs = make_grid({97, 1, 1}, {40.0, 0, 0}, 2.5);
    const auto cub = sample(
        g, [](double y1, double, double) { return y1 * y1 * y1 - 2.0 * y1; });
    const auto cubs = sample(
        gs, [](double y1, double, double) { return y1 * y1 * y1 - 2.0 * y1; });
    for (int i : {0, 1, 48, 95, 96}) {
        const double y = gs.coord[0][i];
        CHECK(derivative(cubs, gs, 1, i, 0, 0) ==
              doctest::Approx(3.0 * y * y - 2.0).epsilon(1e-9).scale(1.0));
    }

    // profile slope at the origin (h = 0.01; truncation ~ 12 h^4)
    const Grid gf = make_grid({801, 1, 1}, {4.0, 0, 0}, 0.0);
    const auto wbar = sample(gf, [](double y1, double, double) { return w1d(y1); });
    CHECK(derivative(wbar, gf, 1, 400, 0, 0) ==
          doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("deriv_axis agrees with pointwise derivative in 3D")
{
    const Grid g = make_grid({17, 9, 9}, {2.0, 1.0, 1.0}, 0.0);
    const auto f = sample(g, [](double a, double b, double c) {
        return std::sin(a) * std::cos(b) + c * c * a;
    });
    std::vector<double> d;
    for (int axis = 1; axis <= 3; ++axis) {
        deriv_axis(f, g, axis, d);
        for (int i1 : {0, 5, 16}) {
            for (int i2 : {0, 4, 8}) {
                for (int i3 : {0, 2, 8}) {
                    CHECK(d[g.idx(i1, i2, i3)] ==
                          doctest::Approx(derivative(f, g, axis, i1, i2, i3))
                              .epsilon(1e-13)
                              .scale(1.0));
                }
            }
        }
    }
}

// =============================================================================
// Origin jets
// =============================================================================

TEST_CASE("origin_jet on polynomials and the stationary profile")
{
    const Grid g = make_grid({15, 15, 15}, {0.35, 0.35, 0.35}, 0.0);  // h = 0.05

    const auto cst = sample(g, [](double, double, double) { return 3.5; });
    const auto jc = origin_jet(cst, g);
    CHECK(jc.val == 3.5);
    for (double v : jc.d1) CHECK(v == doctest::Approx(0.0).scale(1.0));
    for (double v : jc.d2) CHECK(v == doctest::Approx(0.0).scale(1.0));
    for (double v : jc.d3) CHECK(v == doctest::Approx(0.0).scale(1.0));

    const auto xy = sample(g, [](double a, double b, double) { return a * b; });
    CHECK(origin_jet(xy, g).d2[1] == doctest::Approx(1.0).epsilon(1e-11));

    const auto poly = sample(g, [](double a, double b, double c) {
        return a * b * b - 2.0 * b * b * c + 0.5 * a * b * c;
    });
    const auto jp = origin_jet(poly, g);
    CHECK(jp.d3[3] == doctest::Approx(2.0).epsilon(1e-10));   // 122
    CHECK(jp.d3[7] == doctest::Approx(-4.0).epsilon(1e-10));  // 223
    CHECK(jp.d3[4] == doctest::Approx(0.5).epsilon(1e-10));   // 123
    CHECK(jp.d3[0] == doctest::Approx(0.0).scale(1.0));       // 111

    // stationary profile at h = 0.05: third-derivative truncation is ~3.5e3 h^4
    const auto wb = sample(
        g, [](double a, double b, double c) { return bar_w_value({a, b, c}); });
    const auto jw = origin_jet(wb, g);
    CHECK(jw.d1[0] == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(std::fabs(jw.d3[0] - 6.0) <= 0.03);  // 111
    CHECK(std::fabs(jw.d3[3] - 2.0) <= 0.03);  // 122
    CHECK(std::fabs(jw.d3[5] - 2.0) <= 0.03);  // 133

    // same at h = 0.01: 4th-order convergence brings the error under 1e-4
    const Grid gfine = make_grid({15, 15, 15}, {0.07, 0.07, 0.07}, 0.0);
    const auto wbf = sample(
        gfine, [](double a, double b, double c) { return bar_w_value({a, b, c}); });
    const auto jf = origin_jet(wbf, gfine);
    CHECK(jf.d1[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::fabs(jf.d3[0] - 6.0) <= 1e-4);  // 111
    CHECK(std::fabs(jf.d3[3] - 2.0) <= 1e-4);  // 122
    CHECK(std::fabs(jf.d3[5] - 2.0) <= 1e-4);  // 133
    for (int k : {1, 2, 4}) CHECK(std::fabs(jf.d3[k]) <= 1e-4);

    // insufficient stencil
    Grid broken = make_grid({9, 1, 1}, {1.0, 0, 0}, 0.0);
    broken.n[0] = 5;
    broken.coord[0].resize(5);
    CHECK_THROWS_AS(origin_jet(std::vector<double>(5, 0.0), broken),
                    std::runtime_error);
}

TEST_CASE("origin_jet handles degenerate transverse axes")
{
    const Grid g = make_grid({15, 1, 1}, {0.07, 0, 0}, 0.0);
    const auto wb =
        sample(g, [](double a, double, double) { return bar_w_value({a, 0, 0}); });
    const auto j = origin_jet(wb, g);
    CHECK(j.d1[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(j.d1[1] == 0.0);
    CHECK(j.d2[3] == 0.0);
    CHECK(std::fabs(j.d3[0] - 6.0) <= 1e-4);
}

// =============================================================================
// Weights and support
// =============================================================================

TEST_CASE("weight functions")
{
    const auto w = weights({1, 1, 0}, 2.0);
    CHECK(w.eta == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(w.eta_tilde == doctest::Approx(4.0).epsilon(1e-15));

    const auto w0 = weights({0, 0, 0}, 2.0);
    CHECK(w0.eta == 1.0);
    CHECK(w0.psi == doctest::Approx(1.0 + std::exp(-6.0)).epsilon(1e-15));

    std::mt19937 rng(29);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const Vec3 y = {uni(rng), uni(rng), uni(rng)};
        const double s = std::fabs(uni(rng));
        const auto v = weights(y, s);
        CHECK(v.eta >= 1.0);
        CHECK(v.psi > 0.0);
        CHECK(v.eta * v.psi ==
              doctest::Approx(1.0 + std::exp(-3.0 * s) * v.eta * v.eta)
                  .epsilon(1e-12));
    }

    // corner bounds on the support sets
    const double eps = 0.04;
    for (double s : {-std::log(eps), -std::log(eps) + 1.0, -std::log(eps) + 4.0}) {
        const double y1 = 2.0 * std::sqrt(eps) * std::exp(1.5 * s);
        const double yc = 2.0 * std::pow(eps, 1.0 / 6.0) * std::exp(0.5 * s);
        const double corner =
            weights({y1, yc / std::sqrt(2.0), yc / std::sqrt(2.0)}, s).eta;
        CHECK(corner <= 69.0 * eps * std::exp(3.0 * s));
    }
    const double s0 = -std::log(eps);
    const double c0 = weights({1.0 / eps, std::pow(eps, -1.0 / 3.0), 0.0}, s0).eta;
    CHECK(c0 <= 40.0 * eps * std::exp(3.0 * s0));
}

TEST_CASE("support_check flags far spikes only")
{
    const Grid g = make_grid({65, 9, 9}, {60.0, 6.0, 6.0}, 0.0);
    auto f = make_fields(g, make_params(1.4), 0.04, 20.0);
    f.s = -std::log(0.04);
    // initial support: |y1| <= 1/eps = 25, |y_check| <= eps^{-1/3} ~ 2.92
    for (int i1 = 0; i1 < g.n[0]; ++i1)
        for (int i2 = 0; i2 < g.n[1]; ++i2)
            for (int i3 = 0; i3 < g.n[2]; ++i3) {
                const Vec3 y = {g.coord[0][i1], g.coord[1][i2], g.coord[2][i3]};
                if (std::fabs(y[0]) <= 25.0 && std::hypot(y[1], y[2]) <= 2.92)
                    f.W[g.idx(i1, i2, i3)] = 1.0;
            }
    CHECK(support_check(f, 1e-12).ok);

    f.Z[g.idx(0, 0, 0)] = 0.5;  // corner of the box, far outside X(s)
    const auto rep = support_check(f, 1e-12);
    CHECK_FALSE(rep.ok);
    CHECK(rep.field == "Z");
    CHECK(rep.worst_y[0] == doctest::Approx(-60.0));
    CHECK(rep.worst_value == 0.5);
}

// =============================================================================
// Snapshot IO
// =============================================================================

TEST_CASE("snapshot round trip and corruption detection")
{
    namespace fs = std::filesystem;
    const std::string base = (fs::temp_directory_path() / "shockss_snap").string();

    const Grid g = make_grid({9, 7, 7}, {2.0, 1.0, 1.0}, 2.5);
    auto f = make_fields(g, make_params(2.0), 0.04, 9.0);
    f.s = 3.25;
    f.mod.kappa = 9.1;
    f.mod.tau = 1.5e-4;
    f.mod.xi = {1e-3, -2e-3, 0.0};
    f.mod.n_check = {0.01, -0.02};
    f.mod.phi = {0.1, 0.0, -0.05};
    f.mod.rates.kappa_dot = -0.2;
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto* arr : {&f.W, &f.Z, &f.A2, &f.A3, &f.K})
        for (auto& v : *arr) v = uni(rng);

    write_snapshot(base, f);
    const auto r = read_snapshot(base);
    CHECK(r.s == f.s);
    CHECK(r.epsilon == f.epsilon);
    CHECK(r.kappa0 == f.kappa0);
    CHECK(r.params.gamma == f.params.gamma);
    CHECK(r.mod.kappa == f.mod.kappa);
    CHECK(r.mod.tau == f.mod.tau);
    CHECK(r.mod.phi == f.mod.phi);
    CHECK(r.mod.rates.kappa_dot == f.mod.rates.kappa_dot);
    CHECK(r.grid.n == f.grid.n);
    CHECK(r.grid.coord[0] == f.grid.coord[0]);
    CHECK(r.W == f.W);
    CHECK(r.Z == f.Z);
    CHECK(r.A2 == f.A2);
    CHECK(r.A3 == f.A3);
    CHECK(r.K == f.K);

    // truncate the binary -> corrupt-snapshot error
    fs::resize_file(base + ".bin", 5 * g.size() * sizeof(double) - 8);
    CHECK_THROWS_WITH_AS(read_snapshot(base), doctest::Contains("corrupt"),
                         std::runtime_error);
    fs::remove(base + ".json");
    CHECK_THROWS_AS(read_snapshot(base), std::runtime_error);
    fs::remove(base + ".bin");
}
