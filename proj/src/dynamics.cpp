// Right-hand-side assembly, modulation closure, RK4 stepper, and blowup
// detection for the self-similar system declared in shockss/dynamics.h.
//
// Layout: one Consts pack per assembly (rate- and s-dependent scalars), one
// ColGeom pack per transverse column (everything that depends on x_check
// only), and two pointwise kernels shared by every consumer: assemble_rhs,
// transport_fields, constraint_residual, and the local Taylor-grid evaluation
// inside modulation_rates.  Sharing the kernels is what makes the closure and
// the assembled tendency agree to rounding.
#include "shockss/dynamics.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "shockss/parallel.h"

namespace shockss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scalars fixed for one assembly: fluid constants, exponential factors of s,
// and the modulation state with its current rates folded into matrices.
struct Consts {
    double b1, b2, b3, b4;
    double kappa, bt, kdot;
    double s, es, es2, ems, ems2, e3ms2;
    std::array<double, 3> phi, phid;
    Mat3 R, Qd;
    Vec3 Rt_xid;  // (R^T xi_dot)_i = R_{ji} xi_dot_j
};

Consts make_consts(const FluidParams& P, const ModulationState& mod, double s)
{
    Consts c;
    c.b1 = P.beta1;
    c.b2 = P.beta2;
    c.b3 = P.beta3;
    c.b4 = P.beta4;
    c.kappa = mod.kappa;
    c.bt = 1.0 / (1.0 - mod.rates.tau_dot);
    c.kdot = mod.rates.kappa_dot;
    c.s = s;
    c.es = std::exp(s);
    c.es2 = std::exp(0.5 * s);
    c.ems = std::exp(-s);
    c.ems2 = std::exp(-0.5 * s);
    c.e3ms2 = c.ems * c.ems2;
    c.phi = mod.phi;
    c.phid = mod.rates.phi_dot;
    c.R = rotation(mod.n_check);
    c.Qd = frame_spin(mod.n_check, mod.rates.n_dot);
    c.Rt_xid = mat_t_vec(c.R, mod.rates.xi_dot);
    return c;
}

// Per-column geometry: the front basis at x_check = e^{-s/2} y_check, its
// x_check derivatives (chain rule through the slopes p, q), and its time
// derivatives at fixed x_check (chain rule through pdot = phidot . x_check).
struct ColGeom {
    FrontBasis b;
    std::array<Vec3, 2> Nd, T2d, T3d;  // d/dx_2, d/dx_3 of each basis vector
    Vec3 Ndot, T2dot, T3dot;
    double fdot = 0.0;  // d/dt of f(x_check) at fixed x_check
    double divN = 0.0, divT2 = 0.0, divT3 = 0.0;  // N_{mu,mu}, T^nu_{mu,mu}
};

ColGeom make_col(const Consts& c, double y2, double y3)
{
    const double x2 = c.ems2 * y2, x3 = c.ems2 * y3;
    ColGeom g;
    g.b = front_basis(c.phi, {x2, x3});
    const BasisJacobian jac = basis_jacobian(c.phi, {x2, x3});
    const double pdot = c.phid[0] * x2 + c.phid[1] * x3;
    const double qdot = c.phid[1] * x2 + c.phid[2] * x3;
    for (int m = 0; m < 2; ++m) {
        const double pm = m == 0 ? c.phi[0] : c.phi[1];  // dp/dx_{m+2}
        const double qm = m == 0 ? c.phi[1] : c.phi[2];  // dq/dx_{m+2}
        for (int i = 0; i < 3; ++i) {
            g.Nd[m][i] = jac.dN[0][i] * pm + jac.dN[1][i] * qm;
            g.T2d[m][i] = jac.dT2[0][i] * pm + jac.dT2[1][i] * qm;
            g.T3d[m][i] = jac.dT3[0][i] * pm + jac.dT3[1][i] * qm;
        }
    }
    for (int i = 0; i < 3; ++i) {
        g.Ndot[i] = jac.dN[0][i] * pdot + jac.dN[1][i] * qdot;
        g.T2dot[i] = jac.dT2[0][i] * pdot + jac.dT2[1][i] * qdot;
        g.T3dot[i] = jac.dT3[0][i] * pdot + jac.dT3[1][i] * qdot;
    }
    g.fdot = 0.5 * (c.phid[0] * x2 * x2 + 2.0 * c.phid[1] * x2 * x3 +
                    c.phid[2] * x3 * x3);
    g.divN = g.Nd[0][1] + g.Nd[1][2];
    g.divT2 = g.T2d[0][1] + g.T2d[1][2];
    g.divT3 = g.T3d[0][1] + g.T3d[1][2];
    return g;
}

struct PointTransport {
    double GW, GZ, GU;
    double gW, gZ, gU;
    std::array<double, 2> hW, hZ, hU;
    Vec3 V;
};

PointTransport point_transport(const Consts& c, const ColGeom& g, double y1,
                               double y2, double y3, double W, double Z,
                               double A2, double A3)
{
    PointTransport p;
    const double drift1 = c.e3ms2 * y1 + g.b.f;  // e^{-3s/2} y1 + f(x_check)
    for (int i = 0; i < 3; ++i) {
        p.V[i] = c.Qd[i][0] * drift1 +
                 c.ems2 * (c.Qd[i][1] * y2 + c.Qd[i][2] * y3) - c.Rt_xid[i];
    }
    const double VN = dot(p.V, g.b.N);
    const double J = g.b.J;
    p.GW = c.bt * c.es2 * (J * (c.kappa + c.b2 * Z + 2.0 * c.b1 * VN) - g.fdot);
    p.GZ = c.bt * c.es2 * (J * (c.b2 * c.kappa + Z + 2.0 * c.b1 * VN) - g.fdot);
    p.GU = c.bt * c.es2 * (J * c.b1 * (c.kappa + Z + 2.0 * VN) - g.fdot);
    p.gW = c.bt * J * W + p.GW;
    p.gZ = c.b2 * c.bt * J * W + p.GZ;
    p.gU = c.b1 * c.bt * J * W + p.GU;
    for (int m = 0; m < 2; ++m) {
        const double Nm = g.b.N[m + 1];
        const double ATm = A2 * g.b.T2[m + 1] + A3 * g.b.T3[m + 1];
        const double Vm = p.V[m + 1];
        p.hW[m] = c.bt * (c.ems * Nm * W +
                          c.ems2 * (2.0 * c.b1 * Vm + Nm * c.kappa +
                                    c.b2 * Nm * Z + 2.0 * c.b1 * ATm));
        p.hZ[m] = c.bt * (c.b2 * c.ems * Nm * W +
                          c.ems2 * (2.0 * c.b1 * Vm + c.b2 * Nm * c.kappa +
                                    Nm * Z + 2.0 * c.b1 * ATm));
        p.hU[m] = c.bt * (c.b1 * c.ems * Nm * W +
                          c.ems2 * (2.0 * c.b1 * Vm + c.b1 * Nm * (c.kappa + Z) +
                                    2.0 * c.b1 * ATm));
    }
    return p;
}

struct PointForcing {
    double FW, FZ, FA2, FA3;
};

// dA[nu][mu] = d_{y_mu} A_nu, dS[mu] = d_{y_mu} S, dKc[mu] = d_{y_mu} K for
// mu in {2,3}; dK1 = d_{y_1} K.  All forcing-side derivatives are central.
PointForcing point_forcing(const Consts& c, const ColGeom& g, const Vec3& V,
                           double W, double Z, double A2, double A3,
                           const double dA[2][2], const double dS[2],
                           double dK1, const double dKc[2])
{
    const Vec3& N = g.b.N;
    const Vec3& T2 = g.b.T2;
    const Vec3& T3 = g.b.T3;
    const double sig = 0.5 * (c.kappa + c.ems2 * W - Z);
    const double un = 0.5 * (c.kappa + c.ems2 * W + Z);
    const Vec3 AT = {A2 * T2[0] + A3 * T3[0], A2 * T2[1] + A3 * T3[1],
                     A2 * T2[2] + A3 * T3[2]};
    const Vec3 UNAT = {un * N[0] + AT[0], un * N[1] + AT[1], un * N[2] + AT[2]};
    const double pre[2] = {V[1] + UNAT[1], V[2] + UNAT[2]};

    // T^nu_mu d_mu A_nu and the geometric families of the W/Z forcings
    const double tda = T2[1] * dA[0][0] + T2[2] * dA[0][1] + T3[1] * dA[1][0] +
                       T3[2] * dA[1][1];
    const double at_ndot = dot(AT, g.Ndot);
    const double q_w = dot(N, mat_vec(c.Qd, AT));
    const double v_w = pre[0] * dot(AT, g.Nd[0]) + pre[1] * dot(AT, g.Nd[1]);
    const double sdiv = A2 * g.divT2 + A3 * g.divT3 + un * g.divN;
    const double kgrad_n = N[1] * dKc[0] + N[2] * dKc[1];

    PointForcing f;
    f.FW = -2.0 * c.b3 * c.bt * sig * tda +
           2.0 * c.b1 * c.bt * c.ems2 * (at_ndot + q_w + v_w) -
           2.0 * c.b3 * c.bt * c.ems2 * sig * sdiv +
           c.b4 * c.bt * sig * sig * (g.b.J * c.es * dK1 + kgrad_n);
    f.FZ = 2.0 * c.b3 * c.bt * c.ems2 * sig * tda +
           2.0 * c.b1 * c.bt * c.ems * (at_ndot + q_w + v_w) +
           2.0 * c.b3 * c.bt * c.ems * sig * sdiv +
           c.b4 * c.bt * sig * sig * (g.b.J * c.es2 * dK1 + c.ems2 * kgrad_n);

    const Vec3 QdUNAT = mat_vec(c.Qd, UNAT);
    const Vec3* Ts[2] = {&T2, &T3};
    const Vec3* Tdots[2] = {&g.T2dot, &g.T3dot};
    const std::array<Vec3, 2>* Tds[2] = {&g.T2d, &g.T3d};
    double fa[2];
    for (int n = 0; n < 2; ++n) {
        const Vec3& T = *Ts[n];
        const double tri = pre[0] * dot(UNAT, (*Tds[n])[0]) +
                           pre[1] * dot(UNAT, (*Tds[n])[1]);
        fa[n] = -2.0 * c.b3 * c.bt * c.ems2 * sig * (T[1] * dS[0] + T[2] * dS[1]) +
                2.0 * c.b1 * c.bt * c.ems *
                    (dot(UNAT, *Tdots[n]) + dot(T, QdUNAT) + tri) +
                c.b4 * c.bt * c.ems2 * sig * sig * (T[1] * dKc[0] + T[2] * dKc[1]);
    }
    f.FA2 = fa[0];
    f.FA3 = fa[1];
    return f;
}

// Minimum adjacent spacing per node and axis, for the CFL bound.
std::array<std::vector<double>, 3> axis_gaps(const Grid& gr)
{
    std::array<std::vector<double>, 3> gap;
    for (int a = 0; a < 3; ++a) {
        const int m = gr.n[a];
        gap[a].assign(static_cast<std::size_t>(m), kInf);
        for (int i = 0; i < m; ++i) {
            double g = kInf;
            if (i > 0) g = std::min(g, gr.coord[a][i] - gr.coord[a][i - 1]);
            if (i + 1 < m) g = std::min(g, gr.coord[a][i + 1] - gr.coord[a][i]);
            gap[a][static_cast<std::size_t>(i)] = g;
        }
    }
    return gap;
}

struct NodeOut {
    double dW, dZ, dA2, dA3, dK;
    double sig;  // sound speed S at the node
    double cfl;  // min over axes of spacing / |velocity|
};

NodeOut node_tendency(const SelfSimilarFields& f, const Consts& c,
                      const ColGeom& g,
                      const std::array<std::vector<double>, 3>& gap, int i1,
                      int i2, int i3)
{
    const Grid& gr = f.grid;
    const std::size_t id = gr.idx(i1, i2, i3);
    const double y1 = gr.coord[0][i1];
    const double y2 = gr.coord[1][i2];
    const double y3 = gr.coord[2][i3];
    const double W = f.W[id], Z = f.Z[id], A2 = f.A2[id], A3 = f.A3[id];

    const PointTransport tr = point_transport(c, g, y1, y2, y3, W, Z, A2, A3);

    const double dW2 = derivative(f.W, gr, 2, i1, i2, i3);
    const double dW3 = derivative(f.W, gr, 3, i1, i2, i3);
    const double dZ2 = derivative(f.Z, gr, 2, i1, i2, i3);
    const double dZ3 = derivative(f.Z, gr, 3, i1, i2, i3);
    const double dA[2][2] = {
        {derivative(f.A2, gr, 2, i1, i2, i3), derivative(f.A2, gr, 3, i1, i2, i3)},
        {derivative(f.A3, gr, 2, i1, i2, i3), derivative(f.A3, gr, 3, i1, i2, i3)}};
    const double dK1 = derivative(f.K, gr, 1, i1, i2, i3);
    const double dKc[2] = {derivative(f.K, gr, 2, i1, i2, i3),
                           derivative(f.K, gr, 3, i1, i2, i3)};
    const double dS[2] = {0.5 * (c.ems2 * dW2 - dZ2), 0.5 * (c.ems2 * dW3 - dZ3)};

    const PointForcing fo =
        point_forcing(c, g, tr.V, W, Z, A2, A3, dA, dS, dK1, dKc);

    const double vW[3] = {tr.gW + 1.5 * y1, tr.hW[0] + 0.5 * y2,
                          tr.hW[1] + 0.5 * y3};
    const double vZ[3] = {tr.gZ + 1.5 * y1, tr.hZ[0] + 0.5 * y2,
                          tr.hZ[1] + 0.5 * y3};
    const double vU[3] = {tr.gU + 1.5 * y1, tr.hU[0] + 0.5 * y2,
                          tr.hU[1] + 0.5 * y3};

    double advW = 0.0, advZ = 0.0, advA2 = 0.0, advA3 = 0.0, advK = 0.0;
    double cfl = kInf;
    for (int a = 0; a < 3; ++a) {
        if (gr.n[a] == 1) continue;
        const int ax = a + 1;
        advW += vW[a] * transport_derivative(f.W, gr, ax, i1, i2, i3, vW[a]);
        advZ += vZ[a] * transport_derivative(f.Z, gr, ax, i1, i2, i3, vZ[a]);
        advA2 += vU[a] * transport_derivative(f.A2, gr, ax, i1, i2, i3, vU[a]);
        advA3 += vU[a] * transport_derivative(f.A3, gr, ax, i1, i2, i3, vU[a]);
        advK += vU[a] *
                transport_derivative(f.K, gr, ax, i1, i2, i3, vU[a], true);
        const int i = a == 0 ? i1 : a == 1 ? i2 : i3;
        const double vmax = std::max(
            {std::abs(vW[a]), std::abs(vZ[a]), std::abs(vU[a]), 1e-300});
        cfl = std::min(cfl, gap[a][static_cast<std::size_t>(i)] / vmax);
    }

    NodeOut out;
    out.dW = 0.5 * W - advW + fo.FW - c.ems2 * c.bt * c.kdot;
    out.dZ = -advZ + fo.FZ;
    out.dA2 = -advA2 + fo.FA2;
    out.dA3 = -advA3 + fo.FA3;
    out.dK = -advK;
    out.sig = 0.5 * (c.kappa + c.ems2 * W - Z);
    out.cfl = cfl;
    return out;
}

ModulationRates scale_rates(const ModulationRates& r, double w)
{
    ModulationRates out;
    out.kappa_dot = w * r.kappa_dot;
    out.tau_dot = w * r.tau_dot;
    for (int i = 0; i < 3; ++i) out.xi_dot[i] = w * r.xi_dot[i];
    for (int i = 0; i < 2; ++i) out.n_dot[i] = w * r.n_dot[i];
    for (int i = 0; i < 3; ++i) out.phi_dot[i] = w * r.phi_dot[i];
    return out;
}

void add_rates(ModulationRates& a, const ModulationRates& b, double w)
{
    a.kappa_dot += w * b.kappa_dot;
    a.tau_dot += w * b.tau_dot;
    for (int i = 0; i < 3; ++i) a.xi_dot[i] += w * b.xi_dot[i];
    for (int i = 0; i < 2; ++i) a.n_dot[i] += w * b.n_dot[i];
    for (int i = 0; i < 3; ++i) a.phi_dot[i] += w * b.phi_dot[i];
}

void assemble_into(const SelfSimilarFields& f, Tendency& out)
{
    const Grid& gr = f.grid;
    const std::size_t sz = gr.size();
    const Consts c = make_consts(f.params, f.mod, f.s);
    out.dW.resize(sz);
    out.dZ.resize(sz);
    out.dA2.resize(sz);
    out.dA3.resize(sz);
    out.dK.resize(sz);

    const std::array<std::vector<double>, 3> gap = axis_gaps(gr);
    const int n1 = gr.n[0], n2 = gr.n[1], n3 = gr.n[2];
    std::vector<ColGeom> cols(static_cast<std::size_t>(n2) * n3);
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i3 = 0; i3 < n3; ++i3)
            cols[static_cast<std::size_t>(i2) * n3 + i3] =
                make_col(c, gr.coord[1][i2], gr.coord[2][i3]);

    struct SlabStat {
        double cfl = kInf;
        double min_sig = kInf;
        bool vacuum = false;
        std::array<int, 3> at = {0, 0, 0};
    };
    std::vector<SlabStat> stat(static_cast<std::size_t>(n1));
    parallel_for(n1, [&](int i1) {
        SlabStat st;
        for (int i2 = 0; i2 < n2; ++i2) {
            for (int i3 = 0; i3 < n3; ++i3) {
                const NodeOut nd = node_tendency(
                    f, c, cols[static_cast<std::size_t>(i2) * n3 + i3], gap, i1,
                    i2, i3);
                const std::size_t id = gr.idx(i1, i2, i3);
                out.dW[id] = nd.dW;
                out.dZ[id] = nd.dZ;
                out.dA2[id] = nd.dA2;
                out.dA3[id] = nd.dA3;
                out.dK[id] = nd.dK;
                st.cfl = std::min(st.cfl, nd.cfl);
                const Vec3 y = {gr.coord[0][i1], gr.coord[1][i2],
                                gr.coord[2][i3]};
                if (in_support_region(y, f.s, f.epsilon) &&
                    nd.sig < st.min_sig) {
                    st.min_sig = nd.sig;
                    if (nd.sig <= 0.0 && !st.vacuum) {
                        st.vacuum = true;
                        st.at = {i1, i2, i3};
                    }
                }
            }
        }
        stat[static_cast<std::size_t>(i1)] = st;
    });

    double cfl = kInf, min_sig = kInf;
    for (const SlabStat& st : stat) {
        cfl = std::min(cfl, st.cfl);
        min_sig = std::min(min_sig, st.min_sig);
        if (st.vacuum) {
            throw std::runtime_error(
                "assemble_rhs: vacuum (S <= 0) inside the support region at "
                "node (" +
                std::to_string(st.at[0]) + "," + std::to_string(st.at[1]) +
                "," + std::to_string(st.at[2]) + ")");
        }
    }
    out.rates_s = scale_rates(f.mod.rates, c.bt * c.ems);
    out.dt_ds = c.bt * c.ems;
    out.cfl_limit = cfl;
    out.min_sound = min_sig;
}

// Degree-3 Taylor polynomial of a jet (multinomial weights on the distinct
// index combinations the jet stores).
double taylor_eval(const OriginJet& j, double y1, double y2, double y3)
{
    double v = j.val + j.d1[0] * y1 + j.d1[1] * y2 + j.d1[2] * y3;
    v += 0.5 * (j.d2[0] * y1 * y1 + j.d2[3] * y2 * y2 + j.d2[5] * y3 * y3) +
         j.d2[1] * y1 * y2 + j.d2[2] * y1 * y3 + j.d2[4] * y2 * y3;
    v += (j.d3[0] * y1 * y1 * y1 + j.d3[6] * y2 * y2 * y2 +
          j.d3[9] * y3 * y3 * y3) /
             6.0 +
         0.5 * (j.d3[1] * y1 * y1 * y2 + j.d3[2] * y1 * y1 * y3 +
                j.d3[3] * y1 * y2 * y2 + j.d3[5] * y1 * y3 * y3 +
                j.d3[7] * y2 * y2 * y3 + j.d3[8] * y2 * y3 * y3) +
         j.d3[4] * y1 * y2 * y3;
    return v;
}

void jet_scale(OriginJet& j, double w)
{
    j.val *= w;
    for (double& x : j.d1) x *= w;
    for (double& x : j.d2) x *= w;
    for (double& x : j.d3) x *= w;
}

// Determinant of the active block of H (row/column 0 always active).
double det_active_block(const Mat3& H, bool act2, bool act3)
{
    if (act2 && act3) {
        return H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[2][1]) -
               H[0][1] * (H[1][0] * H[2][2] - H[1][2] * H[2][0]) +
               H[0][2] * (H[1][0] * H[2][1] - H[1][1] * H[2][0]);
    }
    if (act2) return H[0][0] * H[1][1] - H[0][1] * H[1][0];
    if (act3) return H[0][0] * H[2][2] - H[0][2] * H[2][0];
    return H[0][0];
}

// Solve H v = b on the active rows/columns; inactive components return 0.
Vec3 solve_active(const Mat3& H, const Vec3& b, bool act2, bool act3)
{
    int map[3], m = 0;
    map[m++] = 0;
    if (act2) map[m++] = 1;
    if (act3) map[m++] = 2;
    double A[3][4];
    for (int r = 0; r < m; ++r) {
        for (int cc = 0; cc < m; ++cc) A[r][cc] = H[map[r]][map[cc]];
        A[r][m] = b[map[r]];
    }
    for (int k = 0; k < m; ++k) {  // Gaussian elimination, partial pivoting
        int p = k;
        for (int r = k + 1; r < m; ++r)
            if (std::abs(A[r][k]) > std::abs(A[p][k])) p = r;
        if (p != k)
            for (int cc = k; cc <= m; ++cc) std::swap(A[k][cc], A[p][cc]);
        for (int r = k + 1; r < m; ++r) {
            const double fac = A[r][k] / A[k][k];
            for (int cc = k; cc <= m; ++cc) A[r][cc] -= fac * A[k][cc];
        }
    }
    Vec3 v = {0, 0, 0};
    for (int k = m - 1; k >= 0; --k) {
        double x = A[k][m];
        for (int cc = k + 1; cc < m; ++cc) x -= A[k][cc] * v[map[cc]];
        v[map[k]] = x / A[k][k];
    }
    return v;
}

}  // namespace

double transport_derivative(const std::vector<double>& q, const Grid& grid,
                            int axis, int i1, int i2, int i3, double vel,
                            bool pure_upwind)
{
    const int a = axis - 1;
    const int m = grid.n[a];
    if (m == 1 || vel == 0.0) return 0.0;
    const int i = a == 0 ? i1 : a == 1 ? i2 : i3;
    const std::size_t st =
        a == 0 ? static_cast<std::size_t>(grid.n[1]) * grid.n[2]
               : a == 1 ? static_cast<std::size_t>(grid.n[2]) : 1;
    const int iu = vel > 0.0 ? i - 1 : i + 1;  // upwind neighbor
    if (iu < 0 || iu >= m) return 0.0;         // inflow wall: no upwind data
    const std::size_t id = grid.idx(i1, i2, i3);
    const std::size_t idu = vel > 0.0 ? id - st : id + st;
    const double* yv = grid.coord[a].data();
    const double up1 = (q[id] - q[idu]) / (yv[i] - yv[iu]);
    if (pure_upwind) return up1;
    if (i - 1 < 0 || i + 1 >= m) return up1;  // wall-adjacent: stay upwind
    const double sm = (q[id] - q[id - st]) / (yv[i] - yv[i - 1]);
    const double sp = (q[id + st] - q[id]) / (yv[i + 1] - yv[i]);
    if (sm * sp <= 0.0) return up1;  // extremum: monotone upwind only
    // Smoothness weight on the adjacent-slope mismatch: exactly central for
    // r <= 1/4 (smooth), exactly upwind for r >= 1/2 (kinked).
    const double r = std::abs(sp - sm) / (std::abs(sp) + std::abs(sm));
    if (r >= 0.5) return up1;
    const double central = derivative(q, grid, axis, i1, i2, i3);
    if (r <= 0.25) return central;
    const double theta = (0.5 - r) * 4.0;
    return theta * central + (1.0 - theta) * up1;
}

TransportFields transport_fields(const SelfSimilarFields& f)
{
    const Grid& gr = f.grid;
    const std::size_t sz = gr.size();
    const Consts c = make_consts(f.params, f.mod, f.s);
    TransportFields tf;
    for (auto* arr : {&tf.gW, &tf.gZ, &tf.gU, &tf.hW2, &tf.hW3, &tf.hZ2,
                      &tf.hZ3, &tf.hU2, &tf.hU3, &tf.V1, &tf.V2, &tf.V3}) {
        arr->resize(sz);
    }
    const int n2 = gr.n[1], n3 = gr.n[2];
    parallel_for(gr.n[0], [&](int i1) {
        const double y1 = gr.coord[0][i1];
        for (int i2 = 0; i2 < n2; ++i2) {
            for (int i3 = 0; i3 < n3; ++i3) {
                const double y2 = gr.coord[1][i2], y3 = gr.coord[2][i3];
                const ColGeom g = make_col(c, y2, y3);
                const std::size_t id = gr.idx(i1, i2, i3);
                const PointTransport tr = point_transport(
                    c, g, y1, y2, y3, f.W[id], f.Z[id], f.A2[id], f.A3[id]);
                tf.gW[id] = tr.gW;
                tf.gZ[id] = tr.gZ;
                tf.gU[id] = tr.gU;
                tf.hW2[id] = tr.hW[0];
                tf.hW3[id] = tr.hW[1];
                tf.hZ2[id] = tr.hZ[0];
                tf.hZ3[id] = tr.hZ[1];
                tf.hU2[id] = tr.hU[0];
                tf.hU3[id] = tr.hU[1];
                tf.V1[id] = tr.V[0];
                tf.V2[id] = tr.V[1];
                tf.V3[id] = tr.V[2];
            }
        }
    });
    return tf;
}

void assemble_rhs(const SelfSimilarFields& f, Tendency& out)
{
    assemble_into(f, out);
}

Tendency assemble_rhs(const SelfSimilarFields& f)
{
    Tendency out;
    assemble_into(f, out);
    return out;
}

OriginJets origin_jets(const SelfSimilarFields& f)
{
    OriginJets j;
    j.W = origin_jet(f.W, f.grid);
    j.Z = origin_jet(f.Z, f.grid);
    j.A2 = origin_jet(f.A2, f.grid);
    j.A3 = origin_jet(f.A3, f.grid);
    j.K = origin_jet(f.K, f.grid);
    for (int a = 0; a < 3; ++a) j.active[a] = f.grid.n[a] > 1;
    return j;
}

ModulationRates modulation_rates(const OriginJets& jets,
                                 const ModulationState& state, double s,
                                 const FluidParams& P, ModulationDetail* detail)
{
    if (!jets.active[0]) {
        throw std::invalid_argument("modulation_rates: axis 1 carries no data");
    }
    Mat3 H;
    H[0][0] = jets.W.d3[0];
    H[0][1] = H[1][0] = jets.W.d3[1];
    H[0][2] = H[2][0] = jets.W.d3[2];
    H[1][1] = jets.W.d3[3];
    H[1][2] = H[2][1] = jets.W.d3[4];
    H[2][2] = jets.W.d3[5];
    const bool act2 = jets.active[1], act3 = jets.active[2];
    const double det = det_active_block(H, act2, act3);
    if (std::abs(det) < 1e-3) {
        throw std::runtime_error(
            "modulation_rates: degenerate constraint system (|det H0| = " +
            std::to_string(std::abs(det)) + ")");
    }

    // Degree-3 Taylor fields of the jets on a small uniform grid around the
    // origin.  All kernel inputs are polynomials there, every stencil is
    // exact for them, and the origin jets of the kernel outputs G_W and F_W
    // are recovered to rounding (the only non-polynomial content, the basis
    // square roots and degree > 6 products, sits far below 1e-12).
    constexpr double h_loc = 0.1;
    const Grid loc = make_grid({7, 7, 7}, {3 * h_loc, 3 * h_loc, 3 * h_loc}, 0.0);
    const std::size_t lsz = loc.size();
    std::vector<double> Wl(lsz), Zl(lsz), A2l(lsz), A3l(lsz), Kl(lsz);
    for (int i1 = 0; i1 < 7; ++i1) {
        for (int i2 = 0; i2 < 7; ++i2) {
            for (int i3 = 0; i3 < 7; ++i3) {
                const std::size_t id = loc.idx(i1, i2, i3);
                const double y1 = loc.coord[0][i1];
                const double y2 = loc.coord[1][i2];
                const double y3 = loc.coord[2][i3];
                Wl[id] = taylor_eval(jets.W, y1, y2, y3);
                Zl[id] = taylor_eval(jets.Z, y1, y2, y3);
                A2l[id] = taylor_eval(jets.A2, y1, y2, y3);
                A3l[id] = taylor_eval(jets.A3, y1, y2, y3);
                Kl[id] = taylor_eval(jets.K, y1, y2, y3);
            }
        }
    }
    // Forcing-side derivative fields (fixed across closure passes).
    std::vector<double> dW2(lsz), dW3(lsz), dZ2(lsz), dZ3(lsz), dA22(lsz),
        dA23(lsz), dA32(lsz), dA33(lsz), dK1(lsz), dK2(lsz), dK3(lsz);
    for (int i1 = 0; i1 < 7; ++i1) {
        for (int i2 = 0; i2 < 7; ++i2) {
            for (int i3 = 0; i3 < 7; ++i3) {
                const std::size_t id = loc.idx(i1, i2, i3);
                dW2[id] = derivative(Wl, loc, 2, i1, i2, i3);
                dW3[id] = derivative(Wl, loc, 3, i1, i2, i3);
                dZ2[id] = derivative(Zl, loc, 2, i1, i2, i3);
                dZ3[id] = derivative(Zl, loc, 3, i1, i2, i3);
                dA22[id] = derivative(A2l, loc, 2, i1, i2, i3);
                dA23[id] = derivative(A2l, loc, 3, i1, i2, i3);
                dA32[id] = derivative(A3l, loc, 2, i1, i2, i3);
                dA33[id] = derivative(A3l, loc, 3, i1, i2, i3);
                dK1[id] = derivative(Kl, loc, 1, i1, i2, i3);
                dK2[id] = derivative(Kl, loc, 2, i1, i2, i3);
                dK3[id] = derivative(Kl, loc, 3, i1, i2, i3);
            }
        }
    }

    const double z0 = jets.Z.val;
    const double w1[3] = {jets.W.d3[3], jets.W.d3[4], jets.W.d3[5]};
    const double wm2[3] = {jets.W.d3[6], jets.W.d3[7], jets.W.d3[8]};
    const double wm3[3] = {jets.W.d3[7], jets.W.d3[8], jets.W.d3[9]};

    std::vector<double> FWl(lsz), GWl(lsz);
    ModulationState st = state;
    ModulationRates cur = state.rates;  // warm start from the stored rates
    Vec3 v = {0, 0, 0};
    double bt_used = 1.0;
    int passes = 0;
    bool converged = false;
    for (int pass = 1; pass <= 40 && !converged; ++pass) {
        passes = pass;
        st.rates = cur;
        const Consts c = make_consts(P, st, s);
        for (int i2 = 0; i2 < 7; ++i2) {
            for (int i3 = 0; i3 < 7; ++i3) {
                const double y2 = loc.coord[1][i2], y3 = loc.coord[2][i3];
                const ColGeom g = make_col(c, y2, y3);
                for (int i1 = 0; i1 < 7; ++i1) {
                    const std::size_t id = loc.idx(i1, i2, i3);
                    const double y1 = loc.coord[0][i1];
                    const PointTransport tr = point_transport(
                        c, g, y1, y2, y3, Wl[id], Zl[id], A2l[id], A3l[id]);
                    GWl[id] = tr.GW;
                    const double dA[2][2] = {{dA22[id], dA23[id]},
                                             {dA32[id], dA33[id]}};
                    const double dS[2] = {0.5 * (c.ems2 * dW2[id] - dZ2[id]),
                                          0.5 * (c.ems2 * dW3[id] - dZ3[id])};
                    const double dKc[2] = {dK2[id], dK3[id]};
                    FWl[id] = point_forcing(c, g, tr.V, Wl[id], Zl[id], A2l[id],
                                            A3l[id], dA, dS, dK1[id], dKc)
                                  .FW;
                }
            }
        }
        OriginJet JF = origin_jet(FWl, loc);
        OriginJet JG = origin_jet(GWl, loc);
        jet_scale(JF, 1.0 / c.bt);  // kernels scale linearly with beta_tau
        jet_scale(JG, 1.0 / c.bt);

        ModulationRates nxt;
        nxt.tau_dot = JF.d1[0] + JG.d1[0];
        const double bt = 1.0 / (1.0 - nxt.tau_dot);
        if (!(bt > 0.5 && bt < 2.0)) {
            throw std::runtime_error(
                "modulation_rates: beta_tau = " + std::to_string(bt) +
                " outside (1/2, 2) (modulation instability)");
        }
        bt_used = bt;

        const Vec3 bvec = {JF.d2[0] + JG.d2[0], JF.d2[1] + JG.d2[1],
                           JF.d2[2] + JG.d2[2]};
        v = solve_active(H, bvec, act2, act3);  // (G_W0, h_W0) / beta_tau

        // Spin top row by a Newton update (the d_nu G dependence on
        // Qdot_{1 nu} has exact coefficient 2 beta1), then the tilt rate.
        double q12 = 0.0, q13 = 0.0;
        if (act2) q12 = c.Qd[0][1] - (JF.d1[1] + JG.d1[1]) / (2.0 * P.beta1);
        if (act3) q13 = c.Qd[0][2] - (JF.d1[2] + JG.d1[2]) / (2.0 * P.beta1);
        nxt.n_dot = tilt_rate_from_spin(state.n_check, {q12, q13});
        const Mat3 Qn = frame_spin(state.n_check, nxt.n_dot);

        const double c1 =
            (state.kappa + P.beta2 * z0 - c.ems2 * v[0]) / (2.0 * P.beta1);
        const double c2v = jets.A2.val - c.es2 * v[1] / (2.0 * P.beta1);
        const double c3v = jets.A3.val - c.es2 * v[2] / (2.0 * P.beta1);
        for (int j = 0; j < 3; ++j) {
            nxt.xi_dot[j] = c.R[j][0] * c1 + c.R[j][1] * c2v + c.R[j][2] * c3v;
        }

        nxt.kappa_dot = c.es2 * (JF.val + v[0]);

        // phi_dot over the pairs (2,2), (2,3), (3,3); the curvature identity
        // N_{1,gamma nu}(0) = -J_{,gamma nu}(0) collapses the two G terms to
        // (phi phi)_{gamma nu} (kappa + beta2 Z0).
        const bool act[2] = {act2, act3};
        for (int k = 0; k < 3; ++k) {
            const int ga = k == 2 ? 1 : 0;
            const int nu = k == 0 ? 0 : 1;
            if (!act[ga] || !act[nu]) {
                nxt.phi_dot[k] = 0.0;
                continue;
            }
            const auto phiM = [&](int aa, int bb) { return state.phi[aa + bb]; };
            double qterm = 0.0;
            for (int z = 0; z < 2; ++z) {
                qterm += Qn[z + 1][ga + 1] * phiM(z, nu) +
                         Qn[z + 1][nu + 1] * phiM(z, ga);
            }
            const double low =
                (phiM(0, ga) * phiM(0, nu) + phiM(1, ga) * phiM(1, nu)) *
                (state.kappa + P.beta2 * z0);
            nxt.phi_dot[k] =
                -c.es2 * (v[0] * w1[k] + v[1] * wm2[k] + v[2] * wm3[k] -
                          JF.d2[3 + k]) +
                P.beta2 * c.es * jets.Z.d2[3 + k] - 2.0 * P.beta1 * qterm + low;
        }

        double err = 0.0;
        const auto upd = [&err](double a, double b) {
            err = std::max(err, std::abs(a - b) / (1.0 + std::abs(a)));
        };
        upd(nxt.kappa_dot, cur.kappa_dot);
        upd(nxt.tau_dot, cur.tau_dot);
        for (int i = 0; i < 3; ++i) upd(nxt.xi_dot[i], cur.xi_dot[i]);
        for (int i = 0; i < 2; ++i) upd(nxt.n_dot[i], cur.n_dot[i]);
        for (int i = 0; i < 3; ++i) upd(nxt.phi_dot[i], cur.phi_dot[i]);
        cur = nxt;
        converged = err <= 1e-13;
    }
    if (!converged) {
        throw std::runtime_error(
            "modulation_rates: closure iteration did not converge");
    }
    if (detail) {
        detail->H0 = H;
        detail->det_active = det;
        detail->GW0 = bt_used * v[0];
        detail->hW0 = {bt_used * v[1], bt_used * v[2]};
        detail->passes = passes;
    }
    return cur;
}

ModulationRates modulation_rates(const SelfSimilarFields& f,
                                 ModulationDetail* detail)
{
    return modulation_rates(origin_jets(f), f.mod, f.s, f.params, detail);
}

double constraint_residual(const SelfSimilarFields& f)
{
    // origin_jet only reads the central 7 nodes per axis, so the tendency is
    // evaluated on that window alone.
    const Grid& gr = f.grid;
    const Consts c = make_consts(f.params, f.mod, f.s);
    const std::array<std::vector<double>, 3> gap = axis_gaps(gr);
    static thread_local std::vector<double> dW;
    dW.assign(gr.size(), 0.0);
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
        if (gr.n[a] == 1) {
            lo[a] = hi[a] = 0;
        } else {
            const int ci = (gr.n[a] - 1) / 2;
            lo[a] = ci - 3;
            hi[a] = ci + 3;
        }
    }
    for (int i2 = lo[1]; i2 <= hi[1]; ++i2) {
        for (int i3 = lo[2]; i3 <= hi[2]; ++i3) {
            const ColGeom g = make_col(c, gr.coord[1][i2], gr.coord[2][i3]);
            for (int i1 = lo[0]; i1 <= hi[0]; ++i1) {
                dW[gr.idx(i1, i2, i3)] =
                    node_tendency(f, c, g, gap, i1, i2, i3).dW;
            }
        }
    }
    const OriginJet j = origin_jet(dW, gr);
    double r = std::abs(j.val);
    for (double x : j.d1) r = std::max(r, std::abs(x));
    for (double x : j.d2) r = std::max(r, std::abs(x));
    return r;
}

namespace {

// out = base + c * k for the PDE fields and modulation ODE variables;
// the independent variable advances by s_offset.
void apply_stage(SelfSimilarFields& out, const SelfSimilarFields& base,
                 double cds, const Tendency& k, double s_offset)
{
    const std::size_t sz = base.grid.size();
    constexpr int chunks = 64;
    parallel_for(chunks, [&](int ch) {
        const std::size_t lo = sz * static_cast<std::size_t>(ch) / chunks;
        const std::size_t hi = sz * static_cast<std::size_t>(ch + 1) / chunks;
        for (std::size_t i = lo; i < hi; ++i) {
            out.W[i] = base.W[i] + cds * k.dW[i];
            out.Z[i] = base.Z[i] + cds * k.dZ[i];
            out.A2[i] = base.A2[i] + cds * k.dA2[i];
            out.A3[i] = base.A3[i] + cds * k.dA3[i];
            out.K[i] = base.K[i] + cds * k.dK[i];
        }
    });
    out.s = base.s + s_offset;
    out.t = base.t + cds * k.dt_ds;
    out.mod.kappa = base.mod.kappa + cds * k.rates_s.kappa_dot;
    out.mod.tau = base.mod.tau + cds * k.rates_s.tau_dot;
    for (int i = 0; i < 3; ++i) {
        out.mod.xi[i] = base.mod.xi[i] + cds * k.rates_s.xi_dot[i];
    }
    for (int i = 0; i < 2; ++i) {
        out.mod.n_check[i] = base.mod.n_check[i] + cds * k.rates_s.n_dot[i];
    }
    for (int i = 0; i < 3; ++i) {
        out.mod.phi[i] = base.mod.phi[i] + cds * k.rates_s.phi_dot[i];
    }
}

void accumulate(Tendency& acc, const Tendency& k, double w)
{
    const std::size_t sz = acc.dW.size();
    constexpr int chunks = 64;
    parallel_for(chunks, [&](int ch) {
        const std::size_t lo = sz * static_cast<std::size_t>(ch) / chunks;
        const std::size_t hi = sz * static_cast<std::size_t>(ch + 1) / chunks;
        for (std::size_t i = lo; i < hi; ++i) {
            acc.dW[i] += w * k.dW[i];
            acc.dZ[i] += w * k.dZ[i];
            acc.dA2[i] += w * k.dA2[i];
            acc.dA3[i] += w * k.dA3[i];
            acc.dK[i] += w * k.dK[i];
        }
    });
    add_rates(acc.rates_s, k.rates_s, w);
    acc.dt_ds += w * k.dt_ds;
}

}  // namespace

StepReport step(SelfSimilarFields& f, double ds, double cfl)
{
    if (!(ds > 0.0)) throw std::invalid_argument("step: ds must be positive");
    f.mod.rates = modulation_rates(f);
    Tendency acc = assemble_rhs(f);  // k1, reused as the accumulator
    StepReport rep;
    rep.cfl_limit = cfl * acc.cfl_limit;
    while (ds > rep.cfl_limit && rep.halvings < 8) {
        ds *= 0.5;
        ++rep.halvings;
    }
    if (ds > rep.cfl_limit) {
        throw std::runtime_error(
            "step: ds still exceeds the CFL bound after 8 halvings");
    }
    rep.ds = ds;

    SelfSimilarFields tmp = f;
    Tendency k;
    apply_stage(tmp, f, 0.5 * ds, acc, 0.5 * ds);
    tmp.mod.rates = modulation_rates(tmp);
    assemble_rhs(tmp, k);  // k2
    accumulate(acc, k, 2.0);
    apply_stage(tmp, f, 0.5 * ds, k, 0.5 * ds);
    tmp.mod.rates = modulation_rates(tmp);
    assemble_rhs(tmp, k);  // k3
    accumulate(acc, k, 2.0);
    apply_stage(tmp, f, ds, k, ds);
    tmp.mod.rates = modulation_rates(tmp);
    assemble_rhs(tmp, k);  // k4
    accumulate(acc, k, 1.0);
    apply_stage(f, f, ds / 6.0, acc, ds);
    f.mod.rates = modulation_rates(f);
    return rep;
}

BlowupEstimate detect_blowup(const std::vector<ModulationSample>& history,
                             double epsilon)
{
    BlowupEstimate est;
    if (history.empty()) return est;
    // The remaining time g = tau - t decreases toward 0 at the blowup.
    for (std::size_t k = 0; k < history.size(); ++k) {
        const double g = history[k].tau - history[k].t;
        if (g > 0.0) continue;
        est.determined = true;
        if (k == 0 || g == 0.0) {
            est.T_star = history[k].t;
            est.xi_star = history[k].xi;
            return est;
        }
        const ModulationSample& a = history[k - 1];
        const ModulationSample& b = history[k];
        const double ga = a.tau - a.t;
        const double frac = ga / (ga - g);
        est.T_star = a.t + frac * (b.t - a.t);
        for (int i = 0; i < 3; ++i) {
            est.xi_star[i] = a.xi[i] + frac * (b.xi[i] - a.xi[i]);
        }
        return est;
    }
    const ModulationSample& e = history.back();
    const double g = e.tau - e.t;
    if (g > 0.5 * epsilon) return est;  // not determined yet
    // Constant-tau_dot extrapolation of the tail: g shrinks at rate
    // 1 - tau_dot, so T_* = t_end + g beta_tau (exact for constant tau_dot).
    const double bt = 1.0 / (1.0 - e.tau_dot);
    est.determined = true;
    est.T_star = e.t + g * bt;
    for (int i = 0; i < 3; ++i) {
        est.xi_star[i] = e.xi[i] + e.xi_dot[i] * (est.T_star - e.t);
    }
    return est;
}

}  // namespace shockss
