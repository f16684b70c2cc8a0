#include "shockss/profile.h"

#include <cmath>
#include <stdexcept>

namespace shockss {

double w1d(double y1)
{
    if (!std::isfinite(y1)) {
        throw std::domain_error("w1d: non-finite argument");
    }
    if (y1 == 0.0) {
        return 0.0;
    }
    // Solve W + W^3 = -a for a = |y1| > 0, then restore the sign by oddness.
    // Cardano: W = cbrt(-a/2 + D) + cbrt(-a/2 - D), D = sqrt(a^2/4 + 1/27).
    // The radicands multiply to -1/27, so with big = a/2 + D (no subtraction,
    // hence no cancellation) the root is  1/(3 cbrt(big)) - cbrt(big).
    const double a = std::fabs(y1);
    const double D = std::sqrt(0.25 * a * a + 1.0 / 27.0);
    const double big = 0.5 * a + D;
    const double c = std::cbrt(big);
    double w = 1.0 / (3.0 * c) - c;  // root for +a (negative)
    // The difference above loses relative accuracy when a is small (both terms
    // approach 1/sqrt(3)); one Newton step on W + W^3 + a restores it.
    w -= (w + w * w * w + a) / (1.0 + 3.0 * w * w);
    return (y1 > 0.0) ? w : -w;
}

double w1d_deriv(double y1, int order)
{
    if (order < 1 || order > 4) {
        throw std::invalid_argument("w1d_deriv: order must be in 1..4");
    }
    const double W = w1d(y1);
    const double d1 = -1.0 / (1.0 + 3.0 * W * W);
    if (order == 1) return d1;
    const double d1_2 = d1 * d1;
    const double d1_3 = d1_2 * d1;
    if (order == 2) return 6.0 * W * d1_3;
    const double W2 = W * W;
    if (order == 3) return 6.0 * d1_2 * d1_2 + 108.0 * W2 * d1_2 * d1_3;
    return 360.0 * W * d1_3 * d1_3 + 3240.0 * W2 * W * d1_3 * d1_3 * d1;
}

ProfilePoint bar_w(const std::array<double, 3>& y, int order)
{
    if (order < 0 || order > 3) {
        throw std::invalid_argument("bar_w: order must be in 0..3");
    }
    ProfilePoint p;
    p.y = y;

    const double b2 = 1.0 + y[1] * y[1] + y[2] * y[2];  // B^2
    const double B = std::sqrt(b2);
    const double xi = y[0] / (b2 * B);  // y1 * B^-3
    const double w = w1d(xi);
    p.value = B * w;
    if (order == 0) return p;

    const double w1 = w1d_deriv(xi, 1);
    // d1 = B^-2 w',  dnu = y_nu B^-1 (w - 3 xi w')
    const double Bm1 = 1.0 / B;
    const double Bm2 = Bm1 * Bm1;
    const double tang = w - 3.0 * xi * w1;
    p.grad = {Bm2 * w1, y[1] * Bm1 * tang, y[2] * Bm1 * tang};
    if (order == 1) return p;

    const double w2 = w1d_deriv(xi, 2);
    const double Bm3 = Bm2 * Bm1;
    const double Bm4 = Bm2 * Bm2;
    const double Bm5 = Bm4 * Bm1;
    // d11 = B^-5 w'',  d1nu = -y_nu B^-4 (2w' + 3 xi w''),
    // dnugam = (delta B^-1 - y_nu y_gam B^-3)(w - 3 xi w')
    //          + 3 xi y_nu y_gam B^-3 (2w' + 3 xi w'')
    const double mix = 2.0 * w1 + 3.0 * xi * w2;
    auto dtang = [&](int nu, int ga) {
        const double del = (nu == ga) ? 1.0 : 0.0;
        const double yy = y[nu] * y[ga];
        return (del * Bm1 - yy * Bm3) * tang + 3.0 * xi * yy * Bm3 * mix;
    };
    p.hess = {Bm5 * w2,
              -y[1] * Bm4 * mix,
              -y[2] * Bm4 * mix,
              dtang(1, 1),
              dtang(1, 2),
              dtang(2, 2)};
    if (order == 2) return p;

    const double w3 = w1d_deriv(xi, 3);
    const double Bm6 = Bm3 * Bm3;
    const double Bm7 = Bm6 * Bm1;
    const double Bm8 = Bm4 * Bm4;
    // d111 = B^-8 w''',  d11nu = -y_nu B^-7 (5w'' + 3 xi w'''),
    // d1nugam = (-delta B^-4 + 4 y_nu y_gam B^-6)(2w' + 3 xi w'')
    //           + 3 xi y_nu y_gam B^-6 (5w'' + 3 xi w''')
    const double mix3 = 5.0 * w2 + 3.0 * xi * w3;
    auto d1tang = [&](int nu, int ga) {
        const double del = (nu == ga) ? 1.0 : 0.0;
        const double yy = y[nu] * y[ga];
        return (-del * Bm4 + 4.0 * yy * Bm6) * mix + 3.0 * xi * yy * Bm6 * mix3;
    };
    p.third = {Bm8 * w3,
               -y[1] * Bm7 * mix3,
               -y[2] * Bm7 * mix3,
               d1tang(1, 1),
               d1tang(1, 2),
               d1tang(2, 2)};
    return p;
}

double bar_w_value(const std::array<double, 3>& y)
{
    const double b2 = 1.0 + y[1] * y[1] + y[2] * y[2];
    const double B = std::sqrt(b2);
    return B * w1d(y[0] / (b2 * B));
}

std::array<double, 3> bar_w_grad(const std::array<double, 3>& y)
{
    return bar_w(y, 1).grad;
}

double burgers_residual(const std::vector<std::array<double, 3>>& pts)
{
    double worst = 0.0;
    for (const auto& y : pts) {
        const ProfilePoint p = bar_w(y, 1);
        const double r = -0.5 * p.value + (1.5 * y[0] + p.value) * p.grad[0] +
                         0.5 * y[1] * p.grad[1] + 0.5 * y[2] * p.grad[2];
        worst = std::max(worst, std::fabs(r));
    }
    return worst;
}

GenericityData genericity_data()
{
    const ProfilePoint p = bar_w({0.0, 0.0, 0.0}, 3);
    GenericityData g;
    g.a111 = p.third[0];
    g.a122 = p.third[3];
    g.a133 = p.third[5];
    // Hessian of d1 Wbar at 0 is exactly the one-index-1 third-derivative block.
    g.hess_d1w = {p.third[0], p.third[1], p.third[2],
                  p.third[3], p.third[4], p.third[5]};
    // Sylvester's criterion on the symmetric 3x3.
    const auto& h = g.hess_d1w;
    const double m1 = h[0];
    const double m2 = h[0] * h[3] - h[1] * h[1];
    const double m3 = h[0] * (h[3] * h[5] - h[4] * h[4]) -
                      h[1] * (h[1] * h[5] - h[4] * h[2]) +
                      h[2] * (h[1] * h[4] - h[3] * h[2]);
    g.positive_definite = (m1 > 0.0) && (m2 > 0.0) && (m3 > 0.0);
    return g;
}

}  // namespace shockss
