#include "shockss/geometry.h"

#include <cmath>
#include <stdexcept>

namespace shockss {

FluidParams make_params(double gamma)
{
    if (!(gamma > 1.0)) {
        throw std::domain_error("make_params: gamma must exceed 1");
    }
    FluidParams p;
    p.gamma = gamma;
    p.alpha = 0.5 * (gamma - 1.0);
    p.beta1 = 1.0 / (1.0 + p.alpha);
    p.beta2 = (1.0 - p.alpha) / (1.0 + p.alpha);
    p.beta3 = p.alpha / (1.0 + p.alpha);
    p.beta4 = p.beta3 / (1.0 + 2.0 * p.alpha);
    return p;
}

double min_kappa0(const FluidParams& params)
{
    return 3.0 / (1.0 - std::fmax(params.beta1, params.beta2));
}

double to_internal_time(double t_phys, const FluidParams& params)
{
    return 0.5 * (1.0 + params.alpha) * t_phys;
}

double to_physical_time(double t, const FluidParams& params)
{
    return 2.0 * t / (1.0 + params.alpha);
}

Mat3 rotation(const Vec2& n_check)
{
    const double n2 = n_check[0], n3 = n_check[1];
    const double nn = n2 * n2 + n3 * n3;
    if (!(nn < 1.0)) {
        throw std::domain_error("rotation: |n_check| must be below 1");
    }
    const double n1 = std::sqrt(1.0 - nn);
    const double q = 1.0 / (1.0 + n1);
    // Rt = [[0,-n2,-n3],[n2,0,0],[n3,0,0]];  R = Id + Rt + q Rt^2.
    return {{{1.0 - q * nn, -n2, -n3},
             {n2, 1.0 - q * n2 * n2, -q * n2 * n3},
             {n3, -q * n2 * n3, 1.0 - q * n3 * n3}}};
}

FrontBasis front_basis(const std::array<double, 3>& phi, const Vec2& x_check)
{
    const double x2 = x_check[0], x3 = x_check[1];
    FrontBasis b;
    b.f = 0.5 * (phi[0] * x2 * x2 + 2.0 * phi[1] * x2 * x3 + phi[2] * x3 * x3);
    const double f2 = phi[0] * x2 + phi[1] * x3;
    const double f3 = phi[1] * x2 + phi[2] * x3;
    b.f_grad = {f2, f3};
    const double J = std::sqrt(1.0 + f2 * f2 + f3 * f3);
    const double r = 1.0 / (J * (J + 1.0));
    b.J = J;
    b.N = {1.0 / J, -f2 / J, -f3 / J};
    b.T2 = {f2 / J, 1.0 - f2 * f2 * r, -f2 * f3 * r};
    b.T3 = {f3 / J, -f2 * f3 * r, 1.0 - f3 * f3 * r};
    return b;
}

BasisJacobian basis_jacobian(const std::array<double, 3>& phi, const Vec2& x_check)
{
    const double p = phi[0] * x_check[0] + phi[1] * x_check[1];
    const double q = phi[1] * x_check[0] + phi[2] * x_check[1];
    const double J = std::sqrt(1.0 + p * p + q * q);
    const double J3 = J * J * J;
    const double D = J * (J + 1.0), D2 = D * D;
    const double Dp = (2.0 * J + 1.0) * p / J;  // dD/dp
    const double Dq = (2.0 * J + 1.0) * q / J;
    BasisJacobian jac;
    jac.dN[0] = {-p / J3, -(1.0 + q * q) / J3, p * q / J3};
    jac.dN[1] = {-q / J3, p * q / J3, -(1.0 + p * p) / J3};
    jac.dT2[0] = {(1.0 + q * q) / J3, -p * (2.0 * D - p * Dp) / D2,
                  -q * (D - p * Dp) / D2};
    jac.dT2[1] = {-p * q / J3, p * p * Dq / D2, -p * (D - q * Dq) / D2};
    jac.dT3[0] = {-p * q / J3, -q * (D - p * Dp) / D2, q * q * Dp / D2};
    jac.dT3[1] = {(1.0 + p * p) / J3, -p * (D - q * Dq) / D2,
                  -q * (2.0 * D - q * Dq) / D2};
    return jac;
}

namespace {

Mat3 mat_mul(const Mat3& a, const Mat3& b)
{
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

}  // namespace

Mat3 frame_spin(const Vec2& n_check, const Vec2& n_dot)
{
    const double n2 = n_check[0], n3 = n_check[1];
    const double nn = n2 * n2 + n3 * n3;
    if (!(nn < 1.0)) {
        throw std::domain_error("frame_spin: |n_check| must be below 1");
    }
    const double n1 = std::sqrt(1.0 - nn);
    const double q = 1.0 / (1.0 + n1);
    const double d2 = n_dot[0], d3 = n_dot[1];
    const double n1_dot = -(n2 * d2 + n3 * d3) / n1;
    const double q_dot = -n1_dot * q * q;
    const Mat3 Rt = {{{0, -n2, -n3}, {n2, 0, 0}, {n3, 0, 0}}};
    const Mat3 Rtd = {{{0, -d2, -d3}, {d2, 0, 0}, {d3, 0, 0}}};
    const Mat3 RtdRt = mat_mul(Rtd, Rt), RtRtd = mat_mul(Rt, Rtd);
    const Mat3 Rt2 = mat_mul(Rt, Rt);
    Mat3 Rdot;  // d/dt of R = Id + Rt + q Rt^2
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            Rdot[i][j] =
                Rtd[i][j] + q * (RtdRt[i][j] + RtRtd[i][j]) + q_dot * Rt2[i][j];
    const Mat3 R = rotation(n_check);
    Mat3 spin{};  // Rdot^T R
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) spin[i][j] += Rdot[k][i] * R[k][j];
    return spin;
}

Vec2 tilt_rate_from_spin(const Vec2& n_check, const Vec2& qrow)
{
    // frame_spin is linear in n_dot, so read off the 2x2 map column by column
    // and solve it exactly.
    const Mat3 c2 = frame_spin(n_check, {1.0, 0.0});
    const Mat3 c3 = frame_spin(n_check, {0.0, 1.0});
    const double a = c2[0][1], b = c3[0][1];
    const double c = c2[0][2], d = c3[0][2];
    const double det = a * d - b * c;
    if (std::abs(det) < 1e-14) {
        throw std::domain_error("tilt_rate_from_spin: singular tilt map");
    }
    return {(d * qrow[0] - b * qrow[1]) / det,
            (-c * qrow[0] + a * qrow[1]) / det};
}

Vec3 to_front_adapted(const Vec3& x_phys, const ModulationState& state)
{
    const Mat3 R = rotation(state.n_check);
    const Vec3 shifted = {x_phys[0] - state.xi[0], x_phys[1] - state.xi[1],
                          x_phys[2] - state.xi[2]};
    Vec3 xt = mat_t_vec(R, shifted);
    const FrontBasis b = front_basis(state.phi, {xt[1], xt[2]});
    xt[0] -= b.f;
    return xt;
}

Vec3 from_front_adapted(const Vec3& x, const ModulationState& state)
{
    const FrontBasis b = front_basis(state.phi, {x[1], x[2]});
    const Vec3 xt = {x[0] + b.f, x[1], x[2]};
    const Mat3 R = rotation(state.n_check);
    Vec3 xp = mat_vec(R, xt);
    for (int i = 0; i < 3; ++i) xp[i] += state.xi[i];
    return xp;
}

SelfSimilarPoint to_self_similar(const Vec3& x, double t, double tau)
{
    if (!(tau > t)) {
        throw std::domain_error("to_self_similar: blowup reached (tau <= t)");
    }
    const double s = -std::log(tau - t);
    const double e_half = std::exp(0.5 * s);
    return {{x[0] * e_half * e_half * e_half, x[1] * e_half, x[2] * e_half}, s};
}

Vec3 from_self_similar(const Vec3& y, double s)
{
    const double e_mhalf = std::exp(-0.5 * s);
    return {y[0] * e_mhalf * e_mhalf * e_mhalf, y[1] * e_mhalf, y[2] * e_mhalf};
}

double time_of_scale(double s, double tau)
{
    return tau - std::exp(-s);
}

RiemannVars riemann_decompose(const Vec3& u, double sigma, const FrontBasis& basis)
{
    if (!(sigma > 0.0)) {
        throw std::domain_error("riemann_decompose: vacuum (sigma <= 0)");
    }
    const double un = dot(u, basis.N);
    return {un + sigma, un - sigma, dot(u, basis.T2), dot(u, basis.T3)};
}

void riemann_reconstruct(const RiemannVars& rv, const FrontBasis& basis, Vec3& u,
                         double& sigma)
{
    sigma = 0.5 * (rv.w - rv.z);
    if (!(sigma > 0.0)) {
        throw std::domain_error("riemann_reconstruct: vacuum (w <= z)");
    }
    const double un = 0.5 * (rv.w + rv.z);
    for (int i = 0; i < 3; ++i) {
        u[i] = un * basis.N[i] + rv.a2 * basis.T2[i] + rv.a3 * basis.T3[i];
    }
}

SelfSimilarUnknowns self_similar_unknowns(const RiemannVars& rv, double k,
                                          double kappa, double s)
{
    return {std::exp(0.5 * s) * (rv.w - kappa), rv.z, rv.a2, rv.a3, k};
}

double u_dot_n(double W, double Z, double kappa, double s)
{
    return 0.5 * (kappa + std::exp(-0.5 * s) * W + Z);
}

double sound_speed(double W, double Z, double kappa, double s)
{
    return 0.5 * (kappa + std::exp(-0.5 * s) * W - Z);
}

}  // namespace shockss
