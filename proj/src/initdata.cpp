#include "shockss/initdata.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "shockss/profile.h"

namespace shockss {

namespace {

// Quintic smoothstep: 0 -> 1 on [0,1] with vanishing first and second
// derivatives at both ends; max slope 15/8 at t = 1/2.
double smoothstep5(double t)
{
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// Peak of t * cutoff(c, 2c, t) over t >= 0 (attained inside the ramp).
double bump_peak(double c)
{
    double peak = c;  // value at the plateau edge t = c
    const int n = 4096;
    for (int i = 1; i < n; ++i) {
        const double t = c + 2.0 * c * i / n;
        peak = std::max(peak, t * cutoff(c, 2.0 * c, t));
    }
    return peak;
}

double transverse_radius(const Vec3& y)
{
    return std::hypot(y[1], y[2]);
}

}  // namespace

double cutoff(double a, double b, double r)
{
    if (!(a > 0.0) || !(b >= 2.0 * a))
        throw std::invalid_argument("cutoff: radii must satisfy b >= 2a > 0");
    if (!(r >= 0.0)) throw std::invalid_argument("cutoff: negative radius");
    if (r <= a) return 1.0;
    if (r >= a + b) return 0.0;
    return 1.0 - smoothstep5((r - a) / b);
}

CutoffRadii cutoff_radii(double epsilon)
{
    CutoffRadii c;
    c.b1 = std::pow(epsilon, -0.75);
    c.a1 = std::min(std::pow(epsilon, -0.5625), 0.5 * c.b1);
    const double yc = std::pow(epsilon, -1.0 / 3.0);  // transverse box radius
    c.a2 = std::min(std::pow(epsilon, -0.25), yc / 3.0);
    c.b2 = std::min(100.0 * std::pow(epsilon, -0.25), 2.0 * yc / 3.0);
    return c;
}

FluidParams params_of(const DataConfig& cfg)
{
    return make_params(cfg.gamma);
}

void validate_config(const DataConfig& cfg)
{
    const FluidParams p = make_params(cfg.gamma);  // throws for gamma <= 1
    if (!(cfg.epsilon > 0.0) || !(cfg.epsilon <= 0.25))
        throw std::invalid_argument("epsilon must lie in (0, 0.25]");
    if (!(cfg.kappa0 >= min_kappa0(p)))
        throw std::invalid_argument("kappa0 below the amplitude floor");

    const CutoffRadii r = cutoff_radii(cfg.epsilon);
    if (r.a1 + r.b1 > 1.0 / cfg.epsilon)
        throw std::invalid_argument("epsilon too large: support exceeds the initial box");

    const double phi_max = std::max(
        {std::fabs(cfg.phi0[0]), std::fabs(cfg.phi0[1]), std::fabs(cfg.phi0[2])});
    if (phi_max > cfg.epsilon)
        throw std::invalid_argument("initial front curvature exceeds epsilon");

    if (cfg.entropy_amp != 0.0) {
        const Vec3 y0 = k0_label(cfg);
        if (!(y0[0] < 1.0 / cfg.epsilon))
            throw std::invalid_argument("entropy bump center outside the initial box");
        const double c = std::pow(cfg.epsilon, -1.0 / 3.0) / 3.0;
        if (std::fabs(cfg.entropy_amp) * bump_peak(c) > cfg.epsilon)
            throw std::invalid_argument("entropy amplitude too large: |K| would exceed epsilon");
    }
}

Grid default_grid(const DataConfig& cfg)
{
    switch (cfg.mode) {
        case RunMode::burgers1d:
            return make_grid({4097, 1, 1}, {40.0, 0.0, 0.0}, 0.0);
        case RunMode::euler_planar:
            return make_grid({1025, 257, 1}, {40.0, 10.0, 0.0}, 0.0);
        case RunMode::euler3d:
            return make_grid({257, 65, 65}, {40.0, 10.0, 10.0}, 2.5);
    }
    throw std::invalid_argument("default_grid: unknown mode");
}

double generate_W0(const DataConfig& cfg, const Vec3& y)
{
    const CutoffRadii r = cutoff_radii(cfg.epsilon);
    const double chi = cutoff(r.a1, r.b1, std::fabs(y[0])) *
                       cutoff(r.a2, r.b2, transverse_radius(y));
    return (chi == 0.0) ? 0.0 : bar_w_value(y) * chi;
}

Vec3 k0_label(const DataConfig& cfg)
{
    const FluidParams p = make_params(cfg.gamma);
    return {p.beta3 * cfg.kappa0 / std::sqrt(cfg.epsilon), 0.0, 0.0};
}

double generate_K0(const DataConfig& cfg, const Vec3& y)
{
    if (cfg.entropy_amp == 0.0) return 0.0;
    const Vec3 y0 = k0_label(cfg);
    const double c = std::pow(cfg.epsilon, -1.0 / 3.0) / 3.0;
    const double w1 = (1.0 / cfg.epsilon - y0[0]) / 3.0;
    // The transverse bump is radial so the support stays inside the ball
    // |y_check| <= 3c (a separable product would leak at the corners).
    double k = -cfg.entropy_amp * y[1] *
               cutoff(c, 2.0 * c, transverse_radius(y));
    if (k == 0.0) return 0.0;
    return k * cutoff(w1, 2.0 * w1, std::fabs(y[0] - y0[0]));
}

bool slope_band_check(const DataConfig& cfg, const std::vector<SlopeSample>& samples)
{
    const double lo = std::pow(cfg.epsilon, -0.1);
    const double hi = 2.0 * cfg.kappa0 / std::sqrt(cfg.epsilon);
    const double rc_max = std::pow(cfg.epsilon, 1.0 / 3.0);
    for (const SlopeSample& s : samples) {
        const double r1 = std::fabs(s.y[0]);
        if (r1 < lo || r1 > hi || transverse_radius(s.y) > rc_max) continue;
        const double env = std::pow(r1, -2.0 / 3.0);
        if (s.d1W > -0.25 * env || s.d1W < -0.5 * env) return false;
    }
    return true;
}

std::vector<double> sample_profile(const Grid& grid)
{
    std::vector<double> out(grid.size());
    for (int i1 = 0; i1 < grid.n[0]; ++i1)
        for (int i2 = 0; i2 < grid.n[1]; ++i2)
            for (int i3 = 0; i3 < grid.n[2]; ++i3)
                out[grid.idx(i1, i2, i3)] = bar_w_value(
                    {grid.coord[0][i1], grid.coord[1][i2], grid.coord[2][i3]});
    return out;
}

SelfSimilarFields initial_fields(const DataConfig& cfg, Grid grid)
{
    validate_config(cfg);
    SelfSimilarFields f =
        make_fields(std::move(grid), params_of(cfg), cfg.epsilon, cfg.kappa0);
    f.s = -std::log(cfg.epsilon);
    f.t = -cfg.epsilon;  // t = tau - e^{-s} with tau = 0 initially
    f.mod.kappa = cfg.kappa0;
    f.mod.phi = cfg.phi0;

    const Grid& g = f.grid;
    for (int i1 = 0; i1 < g.n[0]; ++i1)
        for (int i2 = 0; i2 < g.n[1]; ++i2)
            for (int i3 = 0; i3 < g.n[2]; ++i3) {
                const Vec3 y = {g.coord[0][i1], g.coord[1][i2], g.coord[2][i3]};
                const std::size_t k = g.idx(i1, i2, i3);
                f.W[k] = generate_W0(cfg, y);
                if (cfg.entropy_amp != 0.0) f.K[k] = generate_K0(cfg, y);
            }

    // The zero-curl tangential seed is defined for a flat front only; with
    // curved initial fronts A starts at zero.
    if (cfg.mode != RunMode::burgers1d &&
        cfg.phi0 == std::array<double, 3>{0.0, 0.0, 0.0})
        generate_irrotational_A0(f);
    return f;
}

void generate_irrotational_A0(SelfSimilarFields& f)
{
    if (f.mod.phi != std::array<double, 3>{0.0, 0.0, 0.0})
        throw std::invalid_argument("irrotational seed requires a flat front (phi = 0)");

    const Grid& g = f.grid;
    const double scale = -0.5 * std::pow(f.epsilon, 1.5);
    std::vector<double> d;
    for (int nu = 2; nu <= 3; ++nu) {
        std::vector<double>& a = (nu == 2) ? f.A2 : f.A3;
        deriv_axis(f.W, g, nu, d);
        // Suffix trapezoid along y1: a[i1] = scale * integral_{y1[i1]}^{top} d.
        for (int i2 = 0; i2 < g.n[1]; ++i2)
            for (int i3 = 0; i3 < g.n[2]; ++i3) {
                double acc = 0.0;
                a[g.idx(g.n[0] - 1, i2, i3)] = 0.0;
                for (int i1 = g.n[0] - 2; i1 >= 0; --i1) {
                    const double h = g.coord[0][i1 + 1] - g.coord[0][i1];
                    acc += 0.5 * h *
                           (d[g.idx(i1, i2, i3)] + d[g.idx(i1 + 1, i2, i3)]);
                    a[g.idx(i1, i2, i3)] = scale * acc;
                }
            }
    }
}

namespace {

// Max-abs of `value` over nodes selected by `mask`, accumulated into a row.
struct RowMax {
    double measured = 0.0;
    void add(double v) { measured = std::max(measured, std::fabs(v)); }
};

void all_first(const std::vector<double>& u, const Grid& g,
               std::array<std::vector<double>, 3>& d)
{
    for (int axis = 1; axis <= 3; ++axis) deriv_axis(u, g, axis, d[axis - 1]);
}

}  // namespace

std::vector<ValidationRow> validate_data(const SelfSimilarFields& f)
{
    const Grid& g = f.grid;
    const double eps = f.epsilon;
    const double L = std::pow(eps, -0.1);           // interior/exterior split
    const double box1 = 1.0 / eps;                  // initial box, longitudinal
    const double boxc = std::pow(eps, -1.0 / 3.0);  // initial box, transverse

    std::vector<ValidationRow> rows;
    auto push = [&rows](const std::string& name, double measured, double bound) {
        rows.push_back({name, measured, bound, measured <= bound});
    };

    // Origin constraints fixed by the modulation: W and its jet through
    // second order vanish there, except d1W = -1.  "Grid accuracy" for the
    // seven-node origin stencil is set by the profile's h^6 truncation (the
    // stationary profile has 7th derivative 60480 at the origin).
    {
        const double h = g.spacing_at_origin(1);
        const double tol0 = std::max(1e-4, 864.0 * std::pow(h, 6));
        const OriginJet j = origin_jet(f.W, g);
        double d2max = 0.0;
        for (double v : j.d2) d2max = std::max(d2max, std::fabs(v));
        push("origin: |W|", std::fabs(j.val), tol0);
        push("origin: |d1W + 1|", std::fabs(j.d1[0] + 1.0), tol0);
        push("origin: |perp grad W|", std::max(std::fabs(j.d1[1]), std::fabs(j.d1[2])), tol0);
        push("origin: |second derivatives of W|", d2max, tol0);
    }

    // Amplitude envelopes.  Interior (|y| <= L): distance to the stationary
    // profile; exterior (inside the initial box): absolute weighted size.
    {
        std::vector<double> wt(g.size());
        {
            const std::vector<double> wb = sample_profile(g);
            for (std::size_t k = 0; k < wt.size(); ++k) wt[k] = f.W[k] - wb[k];
        }
        std::array<std::vector<double>, 3> dwt, dw;
        all_first(wt, g, dwt);
        all_first(f.W, g, dw);
        std::array<std::vector<double>, 6> d2w;  // 11,12,13,22,23,33
        deriv_axis(dw[0], g, 1, d2w[0]);
        deriv_axis(dw[0], g, 2, d2w[1]);
        deriv_axis(dw[0], g, 3, d2w[2]);
        deriv_axis(dw[1], g, 2, d2w[3]);
        deriv_axis(dw[1], g, 3, d2w[4]);
        deriv_axis(dw[2], g, 3, d2w[5]);

        RowMax in_val, in_d1, in_dp, ex_val, ex_d1, ex_dp, mix, d11, dperp2;
        for (int i1 = 0; i1 < g.n[0]; ++i1)
            for (int i2 = 0; i2 < g.n[1]; ++i2)
                for (int i3 = 0; i3 < g.n[2]; ++i3) {
                    const Vec3 y = {g.coord[0][i1], g.coord[1][i2], g.coord[2][i3]};
                    const double rc = transverse_radius(y);
                    if (std::fabs(y[0]) > box1 || rc > boxc) continue;
                    const std::size_t k = g.idx(i1, i2, i3);
                    const WeightValues w = weights(y, f.s);
                    const double e16 = std::pow(w.eta, 1.0 / 6.0);
                    const double e13 = e16 * e16;
                    const double perp1 = std::max(std::fabs(dw[1][k]), std::fabs(dw[2][k]));
                    if (std::hypot(y[0], rc) <= L) {
                        in_val.add(wt[k] / e16);
                        in_d1.add(dwt[0][k] * e13);
                        in_dp.add(std::max(std::fabs(dwt[1][k]), std::fabs(dwt[2][k])));
                    } else {
                        ex_val.add(f.W[k] / e16);
                        ex_d1.add(dw[0][k] * e13);
                        ex_dp.add(perp1);
                    }
                    mix.add(e13 * std::max(std::fabs(d2w[1][k]), std::fabs(d2w[2][k])));
                    d11.add(e13 * std::pow(w.psi, -0.25) * d2w[0][k]);
                    dperp2.add(e16 * std::max({std::fabs(d2w[3][k]), std::fabs(d2w[4][k]),
                                               std::fabs(d2w[5][k])}));
                }
        push("interior: eta^{-1/6} |W - profile|", in_val.measured, std::pow(eps, 0.1));
        push("interior: eta^{1/3} |d1(W - profile)|", in_d1.measured, std::pow(eps, 1.0 / 11.0));
        push("interior: |perp grad (W - profile)|", in_dp.measured, std::pow(eps, 1.0 / 12.0));
        push("exterior: eta^{-1/6} |W|", ex_val.measured, 1.0 + std::pow(eps, 1.0 / 11.0));
        push("exterior: eta^{1/3} |d1W|", ex_d1.measured, 1.0 + std::pow(eps, 1.0 / 12.0));
        push("exterior: |perp grad W|", ex_dp.measured, 0.75);
        push("box: eta^{1/3} |d1 perp W|", mix.measured, 1.0);
        push("box: eta^{1/3} psi^{-1/4} |d11 W|", d11.measured, 1.0);
        push("box: eta^{1/6} |perp perp W|", dperp2.measured, 1.0);
    }

    // Smallness of the remaining unknowns inside the initial box.  Each field
    // gets a "longitudinal" row (derivatives with a d1 factor; which ones are
    // included varies by field) and a "flat" row (the value and purely
    // transverse jets).  K gets a separately weighted d11 row.  A field that
    // is identically zero passes without differentiation.
    struct SmallSpec {
        bool lon_mixed;        // include d12, d13 in the longitudinal row
        bool lon_second;       // include d11 in the longitudinal row
        bool weighted_second;  // separate eta^{1/15} |d11| row
        double long_bound, flat_bound, second_bound;
    };
    auto small_field = [&](const std::vector<double>* u2, const std::vector<double>* u3,
                           const std::string& label, const SmallSpec& spec) {
        bool all_zero = true;
        for (const std::vector<double>* u : {u2, u3}) {
            if (!u || !all_zero) continue;
            for (double v : *u)
                if (v != 0.0) { all_zero = false; break; }
        }
        RowMax lon, lon2, flat;
        if (!all_zero) {
            std::array<std::vector<double>, 3> d;
            std::array<std::vector<double>, 3> dperp;  // 22,23,33
            std::vector<double> d11, d12, d13;
            for (const std::vector<double>* u : {u2, u3}) {
                if (!u) continue;
                all_first(*u, g, d);
                deriv_axis(d[1], g, 2, dperp[0]);
                deriv_axis(d[1], g, 3, dperp[1]);
                deriv_axis(d[2], g, 3, dperp[2]);
                if (spec.lon_mixed) {
                    deriv_axis(d[0], g, 2, d12);
                    deriv_axis(d[0], g, 3, d13);
                }
                if (spec.lon_second || spec.weighted_second)
                    deriv_axis(d[0], g, 1, d11);
                for (int i1 = 0; i1 < g.n[0]; ++i1)
                    for (int i2 = 0; i2 < g.n[1]; ++i2)
                        for (int i3 = 0; i3 < g.n[2]; ++i3) {
                            const Vec3 y = {g.coord[0][i1], g.coord[1][i2],
                                            g.coord[2][i3]};
                            if (std::fabs(y[0]) > box1 || transverse_radius(y) > boxc)
                                continue;
                            const std::size_t k = g.idx(i1, i2, i3);
                            lon.add(d[0][k]);
                            if (spec.lon_mixed) {
                                lon.add(d12[k]);
                                lon.add(d13[k]);
                            }
                            if (spec.lon_second) lon.add(d11[k]);
                            if (spec.weighted_second)
                                lon2.add(std::pow(weights(y, f.s).eta, 1.0 / 15.0) *
                                         d11[k]);
                            flat.add((*u)[k]);
                            flat.add(d[1][k]);
                            flat.add(d[2][k]);
                            for (const auto& dp : dperp) flat.add(dp[k]);
                        }
            }
        }
        push(label + ": longitudinal derivatives", lon.measured, spec.long_bound);
        if (spec.weighted_second)
            push(label + ": eta^{1/15} |d11|", lon2.measured, spec.second_bound);
        push(label + ": value and transverse jets", flat.measured, spec.flat_bound);
    };

    const double e32 = std::pow(eps, 1.5);
    small_field(&f.Z, nullptr, "Z", {true, true, false, e32, eps, 0.0});
    small_field(&f.A2, &f.A3, "A", {false, false, false, e32, eps, 0.0});
    small_field(&f.K, nullptr, "K",
                {true, false, true, eps * eps, eps, std::pow(eps, 2.25)});

    // Everything must vanish (to roundoff) outside the support region at s.
    const SupportReport sup = support_check(f, 1e-12);
    push("support: max |field| outside region", std::fabs(sup.worst_value), 1e-12);

    return rows;
}

}  // namespace shockss
