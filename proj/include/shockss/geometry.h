// Fluid constants, modulation state, and the coordinate/variable transforms
// between the physical, front-adapted, and self-similar frames.
//
// Conventions:
//   alpha = (gamma-1)/2,  beta1 = 1/(1+alpha),  beta2 = (1-alpha)/(1+alpha),
//   beta3 = alpha/(1+alpha),  beta4 = beta3/(1+2 alpha).
//   Internal time is the rescaled t = (1+alpha)/2 * t_phys.
//   Self-similar frame: s = -log(tau - t), y1 = x1 e^{3s/2}, y_check = x_check e^{s/2}.
//   Riemann variables along the front basis: w = u.N + sigma, z = u.N - sigma,
//   a_nu = u.T^nu; the self-similar unknowns are W = e^{s/2}(w - kappa), Z = z,
//   A_nu = a_nu, K = k.
#pragma once

#include <array>

namespace shockss {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct FluidParams {
    double gamma = 0.0;
    double alpha = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double beta4 = 0.0;
};

// Time derivatives of the ten modulation variables.
struct ModulationRates {
    double kappa_dot = 0.0;
    double tau_dot = 0.0;
    Vec3 xi_dot = {0, 0, 0};
    Vec2 n_dot = {0, 0};
    std::array<double, 3> phi_dot = {0, 0, 0};  // (22, 23, 33)
};

// The ten modulation variables.  phi is the symmetric 2x2 front-curvature
// matrix stored as (phi22, phi23, phi33); symmetry is structural.
struct ModulationState {
    double kappa = 0.0;
    double tau = 0.0;
    Vec3 xi = {0, 0, 0};
    Vec2 n_check = {0, 0};
    std::array<double, 3> phi = {0, 0, 0};
    ModulationRates rates;
};

// Orthonormal frame attached to the quadratic front graph x1 = f(x2,x3).
struct FrontBasis {
    double f = 0.0;
    Vec2 f_grad = {0, 0};
    Vec3 N = {1, 0, 0};
    Vec3 T2 = {0, 1, 0};
    Vec3 T3 = {0, 0, 1};
    double J = 1.0;
};

// ---- small linear algebra helpers -------------------------------------------

inline double dot(const Vec3& a, const Vec3& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}

inline Vec3 mat_vec(const Mat3& m, const Vec3& v)
{
    Vec3 r;
    for (int i = 0; i < 3; ++i)
        r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    return r;
}

inline Vec3 mat_t_vec(const Mat3& m, const Vec3& v)  // transpose(m) * v
{
    Vec3 r;
    for (int i = 0; i < 3; ++i)
        r[i] = m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2];
    return r;
}

// ---- fluid constants ---------------------------------------------------------

// gamma > 1 required.
FluidParams make_params(double gamma);

// Smallest admissible initial wave amplitude, 3/(1 - max(beta1, beta2)).
double min_kappa0(const FluidParams& params);

// Internal time t = (1+alpha)/2 * t_phys and its inverse.
double to_internal_time(double t_phys, const FluidParams& params);
double to_physical_time(double t, const FluidParams& params);

// ---- rotation and front geometry ----------------------------------------------

// Rotation taking e1 to n = (sqrt(1-|n_check|^2), n2, n3).  Requires |n_check|<1.
// R = Id + Rt + Rt^2/(1+n1) with Rt skew (first row (0,-n2,-n3)); the rational
// factor is the 0/0-free form of (1 - e1.n)/|e1 x n|^2.
Mat3 rotation(const Vec2& n_check);

// Normal/tangent frame of the graph x1 = f(x_check) = 1/2 phi_{nu gamma} x_nu x_gamma.
FrontBasis front_basis(const std::array<double, 3>& phi, const Vec2& x_check);

// Derivatives of the basis vectors with respect to the graph slopes
// (p,q) = (f_{,2}, f_{,3}).  Chain rule with dp/dx_mu = phi_{2 mu},
// dq/dx_mu = phi_{3 mu} gives spatial derivatives; with (pdot, qdot) =
// phidot . x_check it gives the time derivatives at fixed x_check.
struct BasisJacobian {
    std::array<Vec3, 2> dN;   // d/dp, d/dq of N
    std::array<Vec3, 2> dT2;  //            of T^2
    std::array<Vec3, 2> dT3;  //            of T^3
};
BasisJacobian basis_jacobian(const std::array<double, 3>& phi, const Vec2& x_check);

// Spin Qdot = d(R^T)/dt R of the front frame for tilt n_check moving at n_dot.
// Skew-symmetric and exactly linear in n_dot.
Mat3 frame_spin(const Vec2& n_check, const Vec2& n_dot);

// Inverse of the top-row block of frame_spin: the n_dot that produces the
// given (Qdot_{12}, Qdot_{13}).  Equivalent to solving
// (Id + n n^T/(n1(1+n1))) n_dot = qrow.
Vec2 tilt_rate_from_spin(const Vec2& n_check, const Vec2& qrow);

// ---- coordinate transforms -----------------------------------------------------

// Physical -> front-adapted: x_tilde = R^T (x_phys - xi), then x1 -= f(x_check).
Vec3 to_front_adapted(const Vec3& x_phys, const ModulationState& state);
Vec3 from_front_adapted(const Vec3& x, const ModulationState& state);

// Front-adapted (x, t) -> self-similar (y, s); requires tau > t.
struct SelfSimilarPoint {
    Vec3 y;
    double s;
};
SelfSimilarPoint to_self_similar(const Vec3& x, double t, double tau);
Vec3 from_self_similar(const Vec3& y, double s);      // x only
double time_of_scale(double s, double tau);           // t = tau - e^{-s}

// ---- variable transforms --------------------------------------------------------

struct RiemannVars {
    double w = 0.0;
    double z = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
};

// (u, sigma) -> (w, z, a2, a3) along the given basis; requires sigma > 0.
RiemannVars riemann_decompose(const Vec3& u, double sigma, const FrontBasis& basis);

// Inverse; rejects w <= z (vacuum).
void riemann_reconstruct(const RiemannVars& rv, const FrontBasis& basis, Vec3& u,
                         double& sigma);

struct SelfSimilarUnknowns {
    double W = 0.0;
    double Z = 0.0;
    double A2 = 0.0;
    double A3 = 0.0;
    double K = 0.0;
};

// (w,z,a,k) at scale s with amplitude kappa -> (W,Z,A,K): W = e^{s/2}(w - kappa).
SelfSimilarUnknowns self_similar_unknowns(const RiemannVars& rv, double k,
                                          double kappa, double s);

// U.N = (kappa + e^{-s/2} W + Z)/2 and sound speed S = (kappa + e^{-s/2} W - Z)/2.
double u_dot_n(double W, double Z, double kappa, double s);
double sound_speed(double W, double Z, double kappa, double s);

}  // namespace shockss
