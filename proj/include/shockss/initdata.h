// Initial data for the self-similar evolution, posed at s0 = -log(eps).
//
// The wave amplitude starts as the stationary profile cut to a compact set,
//   W0(y) = bar_w(y) * eta[a1,b1](|y1|) * eta[a2,b2](|y_check|),
// where eta[a,b] is a C^2 quintic-smoothstep bump (1 on [0,a], 0 beyond a+b)
// and the radii keep the support inside the initial box
//   X0 = { |y1| <= 1/eps, |y_check| <= eps^{-1/3} }.
// The remaining unknowns are seeded consistently with an irrotational,
// isentropic perturbation of constant state:
//   Z0 = 0,
//   A_nu0(y) = -(eps^{3/2}/2) * integral_{y1}^{inf} d_nu W0  (zero curl),
//   K0 = optional entropy bump of amplitude `entropy_amp`, centered at the
//        blowup label y0 = (beta3 * kappa0 * eps^{-1/2}, 0, 0), built so that
//        grad K0(y0) = (0, -entropy_amp, 0).
// Modulation starts at kappa = kappa0, tau = xi = n_check = 0, phi = phi0.
//
// validate_data() measures the seeded state against the weighted pointwise
// bounds the evolution is expected to propagate and reports one row per
// bound; it never throws.

#pragma once

#include <string>
#include <vector>

#include "shockss/fields.h"

namespace shockss {

enum class RunMode { burgers1d, euler_planar, euler3d };

struct DataConfig {
    double gamma = 1.4;
    double epsilon = 0.04;
    double kappa0 = 20.0;
    double entropy_amp = 0.0;             // 0 disables the entropy seed
    std::array<double, 3> phi0 = {0.0, 0.0, 0.0};  // (22, 23, 33)
    RunMode mode = RunMode::euler3d;
};

// Quintic-smoothstep bump of the radius r >= 0: identically 1 on [0, a],
// identically 0 on [a + b, inf), monotone in between with |d/dr| <= 2/b.
// Requires b >= 2a > 0.
double cutoff(double a, double b, double r);

// Cutoff radii used by generate_W0, chosen so that the support is contained
// in X0 and the cutoff precondition b >= 2a holds for every epsilon <~ 0.19.
struct CutoffRadii {
    double a1, b1;  // longitudinal, applied to |y1|
    double a2, b2;  // transverse, applied to |y_check|
};
CutoffRadii cutoff_radii(double epsilon);

FluidParams params_of(const DataConfig& cfg);

// Throws std::invalid_argument when the configuration is unusable: gamma <= 1,
// kappa0 below the amplitude floor 3/(1 - max(beta1, beta2)), epsilon outside
// (0, 0.25] or too large for the support to fit in X0, |phi0| > eps, or an
// entropy amplitude whose bump would exceed max|K| = eps.
void validate_config(const DataConfig& cfg);

// Grid sized for the given mode: 4097 uniform nodes on |y1| <= 40 (burgers1d),
// 1025 x 257 on [-40,40] x [-10,10] (euler_planar), 257 x 65 x 65
// sinh-stretched (a = 2.5) on [-40,40] x [-10,10]^2 (euler3d).
Grid default_grid(const DataConfig& cfg);

double generate_W0(const DataConfig& cfg, const Vec3& y);
double generate_K0(const DataConfig& cfg, const Vec3& y);

// Blowup label in self-similar coordinates, y0 = (beta3*kappa0/sqrt(eps),0,0).
Vec3 k0_label(const DataConfig& cfg);

// One measured slope of the initial amplitude: d1W = d W0 / d y1 at y.
struct SlopeSample {
    Vec3 y;
    double d1W;
};

// Checks the lower/upper slope envelope
//   -1/2 |y1|^{-2/3} <= d1W <= -1/4 |y1|^{-2/3}
// over the band { eps^{-1/10} <= |y1| <= 2*kappa0*eps^{-1/2}, |y_check| <=
// eps^{1/3} }.  Samples outside the band are ignored; returns true when every
// sample inside it satisfies the envelope.
bool slope_band_check(const DataConfig& cfg,
                      const std::vector<SlopeSample>& samples);

// bar_w sampled at every grid node (the far-field attractor of W).
std::vector<double> sample_profile(const Grid& grid);

// Seeds all five unknowns and the modulation state on the given grid.
// Validates the configuration first.
SelfSimilarFields initial_fields(const DataConfig& cfg, Grid grid);

// Overwrites A2, A3 with the zero-curl seed integrated from W by suffix
// trapezoid sums along y1.  Requires a flat front (phi = 0).
void generate_irrotational_A0(SelfSimilarFields& f);

struct ValidationRow {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = true;
};

// Measures the seeded state against the weighted initial-data bounds (origin
// constraints, interior/exterior amplitude envelopes, second-derivative
// envelopes, smallness of Z, A, K, compact support).  Reports one row per
// bound; margins are bound/measured.
std::vector<ValidationRow> validate_data(const SelfSimilarFields& f);

}  // namespace shockss
