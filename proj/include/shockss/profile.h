// Exact evaluation of the stable self-similar Burgers profiles.
//
// W1d(y1) is the unique real root of  W + W^3 = -y1  (odd, strictly
// decreasing).  The 3D profile is
//
//     Wbar(y) = B * W1d(y1 / B^3),   B(y2,y3) = (1 + y2^2 + y3^2)^(1/2),
//
// a stationary solution of the self-similar Burgers equation
//
//     -1/2 Wbar + (3/2 y1 + Wbar) d1 Wbar + 1/2 y2 d2 Wbar + 1/2 y3 d3 Wbar = 0.
//
// All derivatives are analytic (implicit differentiation + chain rule),
// accurate to machine precision; no numerical differentiation is used here.

#pragma once

#include <array>
#include <vector>

namespace shockss {

// W1d evaluated by the closed Cardano form.  The branch for large |y1| is
// rearranged so no catastrophic cancellation occurs (the small cube-root
// radicand is produced by rationalization, not subtraction).
double w1d(double y1);

// d^order W1d / dy1^order for order in {1,2,3,4}, via the implicit-derivative
// recurrences W' = -1/(1+3W^2), W'' = 6 W W'^3, ...
double w1d_deriv(double y1, int order);

// Pointwise data of Wbar: value, gradient, Hessian, and the third-derivative
// entries that carry at least one y1-index (all that downstream code needs).
struct ProfilePoint {
    std::array<double, 3> y{};
    double value = 0;
    std::array<double, 3> grad{};       // d1, d2, d3
    std::array<double, 6> hess{};       // 11, 12, 13, 22, 23, 33
    std::array<double, 6> third{};      // 111, 112, 113, 122, 123, 133
};

// Evaluate Wbar and its derivatives up to `order` (0..3); entries above the
// requested order are left zero.
ProfilePoint bar_w(const std::array<double, 3>& y, int order);

// Convenience accessors used throughout the solver.
double bar_w_value(const std::array<double, 3>& y);
std::array<double, 3> bar_w_grad(const std::array<double, 3>& y);

// Max over sample points of the stationary-Burgers residual
//     |-1/2 Wbar + (3/2 y1 + Wbar) d1 Wbar + y2/2 d2 Wbar + y3/2 d3 Wbar|
// computed with the analytic derivatives.
double burgers_residual(const std::vector<std::array<double, 3>>& pts);

// Third derivatives of Wbar at the origin and the positive-definiteness of
// the Hessian of d1 Wbar there (the genericity of the blowup profile).
struct GenericityData {
    double a111 = 0;                 // d111 Wbar(0)
    double a122 = 0;                 // d122 Wbar(0)
    double a133 = 0;                 // d133 Wbar(0)
    std::array<double, 6> hess_d1w{};  // Hessian of d1 Wbar at 0 (11,12,13,22,23,33)
    bool positive_definite = false;
};

GenericityData genericity_data();

}  // namespace shockss
