// Right-hand-side assembly for the self-similar evolution, the ten-parameter
// modulation closure, the coupled RK4 stepper, and blowup-time detection.
//
// Evolution system (unknowns W, Z, A2, A3, K on the self-similar grid):
//   (d_s - 1/2) W + (g_W + 3/2 y1) d1W + (h_W^mu + 1/2 y_mu) d_mu W
//                                        = F_W - e^{-s/2} beta_tau kappa_dot,
//   d_s Z    + (g_Z + 3/2 y1) d1Z    + (h_Z^mu + 1/2 y_mu) d_mu Z    = F_Z,
//   d_s A_nu + (g_U + 3/2 y1) d1A_nu + (h_U^mu + 1/2 y_mu) d_mu A_nu = F_Anu,
//   d_s K    + (g_U + 3/2 y1) d1K    + (h_U^mu + 1/2 y_mu) d_mu K    = 0,
// with beta_tau = 1/(1 - tau_dot).  The y1 transports are
//   g_W = beta_tau J W + G_W,   g_Z = beta2 beta_tau J W + G_Z,
//   g_U = beta1 beta_tau J W + G_U,
//   G_W = beta_tau e^{s/2} (J (kappa + beta2 Z + 2 beta1 V.N) - fdot),
// (G_Z, G_U with the front speed kappa + beta2 Z replaced by beta2 kappa + Z
// and beta1 (kappa + Z)), the transverse transports
//   h_W^mu = beta_tau e^{-s} N_mu W
//          + beta_tau e^{-s/2} (2 beta1 V_mu + N_mu kappa + beta2 N_mu Z
//                               + 2 beta1 A_gamma T^gamma_mu),
// (h_Z, h_U with the matching Riemann weights), and the grid drift
//   V_i = Qdot_{i1}(e^{-3s/2} y1 + f) + e^{-s/2} Qdot_{i nu} y_nu
//       - (R^T xi_dot)_i.
// The forcings F couple the tangential velocity and the entropy gradient,
// e.g. F_W = -2 beta3 beta_tau S T^nu_mu d_mu A_nu + (geometric terms in
// Ndot, Qdot, N_{,mu}) + beta4 beta_tau S^2 (J e^s d_1 K + N_mu d_mu K),
// where S = (kappa + e^{-s/2} W - Z)/2 and U.N = (kappa + e^{-s/2} W + Z)/2.
//
// The ten modulation rates (kappa_dot, tau_dot, xi_dot, n_dot, phi_dot) are
// closed by demanding that the origin jet of the assembled W tendency vanish
// through second order, so the constraints W(0) = 0, dW(0) = (-1, 0, 0),
// d^2W(0) = 0 are preserved by the continuous dynamics.  The closure is a
// short fixed-point iteration around one 3x3 linear solve through
// H0_ij = d_{1ij}W(0).
#pragma once

#include <vector>

#include "shockss/fields.h"

namespace shockss {

// Transport velocities, one value per node, before the self-similar scaling
// parts (+3/2 y1 along axis 1, +y_mu/2 transversally) are added.
struct TransportFields {
    std::vector<double> gW, gZ, gU;
    std::vector<double> hW2, hW3, hZ2, hZ3, hU2, hU3;
    std::vector<double> V1, V2, V3;
};

TransportFields transport_fields(const SelfSimilarFields& f);

struct Tendency {
    std::vector<double> dW, dZ, dA2, dA3, dK;  // d_s of each field
    ModulationRates rates_s;  // modulation rates per unit s (= beta_tau e^{-s} d/dt)
    double dt_ds = 0.0;       // beta_tau e^{-s}
    double cfl_limit = 0.0;   // min over nodes and axes of spacing / |velocity|
    double min_sound = 0.0;   // min of S over the shock-support region
};

// Full right-hand side for the state as given; f.mod.rates must already hold
// the closure output (step() refreshes them, direct callers own that).
// Transport terms are upwinded by the sign of each velocity component
// (4th-order central blended in where the field is smooth; K strictly
// first-order upwind).  Throws on vacuum (S <= 0 inside the support region).
Tendency assemble_rhs(const SelfSimilarFields& f);
void assemble_rhs(const SelfSimilarFields& f, Tendency& out);

// The blended upwind derivative used for transport terms: first-order upwind
// for the given velocity sign, blended toward the 4th-order central stencil
// by a smoothness weight on the adjacent-slope ratio; exactly central in
// smooth monotone regions, exactly upwind at extrema and next to walls, and
// zero at an inflow wall (no upwind data).
double transport_derivative(const std::vector<double>& field, const Grid& grid,
                            int axis, int i1, int i2, int i3, double vel,
                            bool pure_upwind = false);

// Origin jets of the five fields plus which axes carry data (degenerate axes
// have exactly-zero jet entries and are excluded from the closure).
struct OriginJets {
    OriginJet W, Z, A2, A3, K;
    std::array<bool, 3> active = {true, true, true};
};
OriginJets origin_jets(const SelfSimilarFields& f);

// Intermediate quantities of the modulation closure, for inspection.
struct ModulationDetail {
    Mat3 H0 = {};                        // d_{1ij} W at the origin
    double det_active = 0.0;             // determinant of the active block
    double GW0 = 0.0;                    // assembled G_W(0), beta_tau included
    std::array<double, 2> hW0 = {0, 0};  // assembled h_W^mu(0), beta_tau included
    int passes = 0;
};

// Solve the closure for the ten rates (returned per unit t).  The state's
// stored rates seed the iteration.  Throws if |det| of the active H0 block
// falls below 1e-3 (degenerate constraint) or beta_tau leaves (1/2, 2)
// (modulation instability).
ModulationRates modulation_rates(const OriginJets& jets,
                                 const ModulationState& state, double s,
                                 const FluidParams& params,
                                 ModulationDetail* detail = nullptr);
ModulationRates modulation_rates(const SelfSimilarFields& f,
                                 ModulationDetail* detail = nullptr);

// Max over |gamma| <= 2 of |d_s d^gamma W(0)| of the assembled tendency for
// the state's current rates: the independent health check of the closure.
double constraint_residual(const SelfSimilarFields& f);

struct StepReport {
    double ds = 0.0;        // step actually taken
    int halvings = 0;
    double cfl_limit = 0.0; // largest admissible ds at the step's start
};

// One classical RK4 step of the PDE fields and the ten modulation ODEs
// together.  The requested ds is halved (at most 8 times) until it fits
// cfl * (min spacing / velocity); rates are re-closed at every stage and
// constraints are only measured, never projected.
StepReport step(SelfSimilarFields& f, double ds, double cfl = 0.4);

// One row of the modulation history used for blowup detection.
struct ModulationSample {
    double t = 0.0, s = 0.0;
    double tau = 0.0, tau_dot = 0.0;
    Vec3 xi = {0, 0, 0};
    Vec3 xi_dot = {0, 0, 0};
};

struct BlowupEstimate {
    bool determined = false;
    double T_star = 0.0;
    Vec3 xi_star = {0, 0, 0};
};

// Locate the blowup time T_* solving tau(T_*) = T_* (the remaining-time
// integral of 1 - tau_dot from -epsilon crossing epsilon) by bracketing and
// interpolation, extrapolating the final constant-tau_dot stretch when the
// history stops short; not determined while tau - t > epsilon/2 at the end.
BlowupEstimate detect_blowup(const std::vector<ModulationSample>& history,
                             double epsilon);

}  // namespace shockss
