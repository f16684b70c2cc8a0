// Trajectory integration through snapshot series: snapshot paging, trilinear
// field interpolation, RK4 flows (self-similar families in s, the physical
// front-frame flow in t), escape checks, the backward blowup-label
// integration, and the slope-amplification integral.
#include "shockss/trajectories.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace shockss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- interpolation ---------------------------------------------------------------

// Cell index and weight along one axis; degenerate axes pin to node 0.
struct AxisLoc {
    int i0 = 0;
    double w = 0.0;
};

AxisLoc locate(const Grid& g, int axis, double x)
{
    AxisLoc l;
    const auto& c = g.coord[axis];
    const int n = g.n[axis];
    if (n == 1) return l;
    if (x <= c.front()) return {0, 0.0};
    if (x >= c.back()) return {n - 2, 1.0};
    const int hi = static_cast<int>(std::upper_bound(c.begin(), c.end(), x) -
                                    c.begin());
    l.i0 = hi - 1;
    l.w = (x - c[l.i0]) / (c[l.i0 + 1] - c[l.i0]);
    return l;
}

struct BoxLoc {
    AxisLoc a[3];
};

BoxLoc locate(const Grid& g, const Vec3& y)
{
    return {locate(g, 0, y[0]), locate(g, 1, y[1]), locate(g, 2, y[2])};
}

bool inside_box(const Grid& g, const Vec3& y)
{
    for (int axis = 0; axis < 3; ++axis) {
        if (g.n[axis] == 1) continue;
        if (y[axis] < g.coord[axis].front() || y[axis] > g.coord[axis].back())
            return false;
    }
    return true;
}

double trilerp(const std::vector<double>& a, const Grid& g, const BoxLoc& l)
{
    double acc = 0.0;
    for (int b1 = 0; b1 < 2; ++b1) {
        const double w1 = b1 ? l.a[0].w : 1.0 - l.a[0].w;
        if (w1 == 0.0) continue;
        for (int b2 = 0; b2 < 2; ++b2) {
            const double w2 = b2 ? l.a[1].w : 1.0 - l.a[1].w;
            if (w2 == 0.0) continue;
            for (int b3 = 0; b3 < 2; ++b3) {
                const double w3 = b3 ? l.a[2].w : 1.0 - l.a[2].w;
                if (w3 == 0.0) continue;
                acc += w1 * w2 * w3 *
                       a[g.idx(l.a[0].i0 + b1, l.a[1].i0 + b2, l.a[2].i0 + b3)];
            }
        }
    }
    return acc;
}

// ---- per-snapshot evaluation -------------------------------------------------------

using Page = SnapshotSeries::Page;

Vec3 family_velocity(const Page& pg, FlowFamily fam, const Vec3& y)
{
    const Grid& g = pg.f->grid;
    const BoxLoc l = locate(g, y);
    const TransportFields& tf = pg.tf;
    double g1 = 0.0, h2 = 0.0, h3 = 0.0;
    switch (fam) {
        case FlowFamily::W:
            g1 = trilerp(tf.gW, g, l);
            h2 = trilerp(tf.hW2, g, l);
            h3 = trilerp(tf.hW3, g, l);
            break;
        case FlowFamily::Z:
            g1 = trilerp(tf.gZ, g, l);
            h2 = trilerp(tf.hZ2, g, l);
            h3 = trilerp(tf.hZ3, g, l);
            break;
        case FlowFamily::U:
            g1 = trilerp(tf.gU, g, l);
            h2 = trilerp(tf.hU2, g, l);
            h3 = trilerp(tf.hU3, g, l);
            break;
    }
    return {g1 + 1.5 * y[0], h2 + 0.5 * y[1], h3 + 0.5 * y[2]};
}

double beta_tau_of(const Page& pg)
{
    return 1.0 / (1.0 - pg.f->mod.rates.tau_dot);
}

// Velocity of the physical flow d_t X = 2 beta1 (Qdot X - R^T xi_dot + u) at
// the snapshot's own time; field lookups clamp to the grid box and report
// whether clamping happened.
Vec3 physical_velocity(const Page& pg, const Vec3& X, bool* outside)
{
    const SelfSimilarFields& f = *pg.f;
    const FrontBasis b = front_basis(f.mod.phi, {X[1], X[2]});
    const double es2 = std::exp(0.5 * f.s);
    const Vec3 y = {(X[0] - b.f) * es2 * es2 * es2, X[1] * es2, X[2] * es2};
    if (!inside_box(f.grid, y)) *outside = true;
    const BoxLoc l = locate(f.grid, y);
    const double W = trilerp(f.W, f.grid, l);
    const double Z = trilerp(f.Z, f.grid, l);
    const double A2 = trilerp(f.A2, f.grid, l);
    const double A3 = trilerp(f.A3, f.grid, l);
    const double un = u_dot_n(W, Z, f.mod.kappa, f.s);
    const Mat3 Qd = frame_spin(f.mod.n_check, f.mod.rates.n_dot);
    const Vec3 drift = mat_vec(Qd, X);
    const Vec3 rxd = mat_t_vec(rotation(f.mod.n_check), f.mod.rates.xi_dot);
    const double b1 = f.params.beta1;
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        v[i] = 2.0 * b1 *
               (drift[i] - rxd[i] + un * b.N[i] + A2 * b.T2[i] + A3 * b.T3[i]);
    }
    return v;
}

}  // namespace

// ---- SnapshotSeries ---------------------------------------------------------------

SnapshotSeries::SnapshotSeries(std::vector<SelfSimilarFields> states)
{
    if (states.empty()) throw std::invalid_argument("SnapshotSeries: no states");
    epsilon_ = states.front().epsilon;
    kappa0_ = states.front().kappa0;
    params_ = states.front().params;
    for (auto& st : states) {
        meta_.push_back({st.s, st.t, ""});
        states_.push_back(
            std::make_shared<const SelfSimilarFields>(std::move(st)));
    }
    for (std::size_t i = 1; i < meta_.size(); ++i) {
        if (meta_[i].s <= meta_[i - 1].s)
            throw std::invalid_argument("SnapshotSeries: scales not increasing");
    }
    window_ = count();
}

SnapshotSeries SnapshotSeries::from_dir(const std::string& dir, int window)
{
    namespace fs = std::filesystem;
    std::vector<std::string> bases;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json")
            bases.push_back(entry.path().string().substr(
                0, entry.path().string().size() - 5));
    }
    std::sort(bases.begin(), bases.end());
    if (bases.empty())
        throw std::invalid_argument("SnapshotSeries: no snapshots in " + dir);

    SnapshotSeries src;
    src.window_ = std::max(window, 2);
    for (const auto& base : bases) {
        std::ifstream jf(base + ".json");
        if (!jf)
            throw std::runtime_error("SnapshotSeries: cannot open " + base +
                                     ".json");
        const nlohmann::json header = nlohmann::json::parse(jf);
        src.meta_.push_back({header.at("s"), header.at("t"), base});
        if (src.meta_.size() == 1) {
            src.epsilon_ = header.at("epsilon");
            src.kappa0_ = header.at("kappa0");
            src.params_ = make_params(header.at("gamma").get<double>());
        }
    }
    src.states_.resize(src.meta_.size());
    for (std::size_t i = 1; i < src.meta_.size(); ++i) {
        if (src.meta_[i].s <= src.meta_[i - 1].s)
            throw std::invalid_argument("SnapshotSeries: scales not increasing");
    }
    return src;
}

double SnapshotSeries::max_spacing(double s_lo, double s_hi) const
{
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < meta_.size(); ++i) {
        if (meta_[i + 1].s < s_lo || meta_[i].s > s_hi) continue;
        worst = std::max(worst, meta_[i + 1].s - meta_[i].s);
    }
    return worst;
}

int SnapshotSeries::bracket_scale(double s) const
{
    int lo = 0, hi = count() - 2;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (meta_[mid].s <= s)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

int SnapshotSeries::bracket_time(double t) const
{
    int lo = 0, hi = count() - 2;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (meta_[mid].t <= t)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

std::shared_ptr<const Page> SnapshotSeries::page(int i) const
{
    std::lock_guard<std::mutex> lock(*mu_);
    for (auto it = pages_.begin(); it != pages_.end(); ++it) {
        if (it->first == i) {
            pages_.splice(pages_.begin(), pages_, it);
            return pages_.front().second;
        }
    }
    auto pg = std::make_shared<Page>();
    if (meta_[i].base.empty()) {
        pg->f = states_[i];
    } else {
        pg->f = std::make_shared<const SelfSimilarFields>(
            read_snapshot(meta_[i].base));
    }
    pg->tf = transport_fields(*pg->f);
    deriv_axis(pg->f->W, pg->f->grid, 1, pg->d1W);
    pages_.emplace_front(i, std::move(pg));
    while (static_cast<int>(pages_.size()) > window_) pages_.pop_back();
    return pages_.front().second;
}

// ---- integrate_flow ---------------------------------------------------------------

TrajectoryRecord integrate_flow(const FlowRequest& req, const SnapshotSeries& src)
{
    if (src.count() < 2)
        throw std::invalid_argument("integrate_flow: need at least two snapshots");
    if (!(req.s1 > req.s0) || !(req.ds > 0))
        throw std::invalid_argument("integrate_flow: bad s-range or step");
    const double pad = 1e-9;
    if (req.s0 < src.scale_at(0) - pad ||
        req.s1 > src.scale_at(src.count() - 1) + pad)
        throw std::invalid_argument("integrate_flow: s-range not covered");
    if (src.max_spacing(req.s0, req.s1) > 0.05 + pad)
        throw std::invalid_argument("integrate_flow: snapshot spacing above 0.05");
    for (const auto& name : req.integrands) {
        if (name != kIntAbsD1W && name != kIntPosD1W && name != kIntBetaTauD1W)
            throw std::invalid_argument("integrate_flow: unknown integrand " + name);
    }
    {
        const auto pg = src.page(0);
        if (!inside_box(pg->f->grid, req.seed))
            throw std::invalid_argument("integrate_flow: seed outside grid");
    }

    // Velocity and integrand samples lerp between the bracketing snapshots.
    const auto vel = [&](const Vec3& y, double s) {
        const int i = src.bracket_scale(s);
        const auto a = src.page(i);
        const auto b = src.page(i + 1);
        const double th = std::clamp(
            (s - src.scale_at(i)) / (src.scale_at(i + 1) - src.scale_at(i)), 0.0,
            1.0);
        const Vec3 va = family_velocity(*a, req.family, y);
        const Vec3 vb = family_velocity(*b, req.family, y);
        return Vec3{(1 - th) * va[0] + th * vb[0], (1 - th) * va[1] + th * vb[1],
                    (1 - th) * va[2] + th * vb[2]};
    };
    const auto integrand = [&](const std::string& name, const Vec3& y, double s) {
        const int i = src.bracket_scale(s);
        const auto a = src.page(i);
        const auto b = src.page(i + 1);
        const double th = std::clamp(
            (s - src.scale_at(i)) / (src.scale_at(i + 1) - src.scale_at(i)), 0.0,
            1.0);
        const BoxLoc la = locate(a->f->grid, y);
        const BoxLoc lb = locate(b->f->grid, y);
        const double d1 = (1 - th) * trilerp(a->d1W, a->f->grid, la) +
                          th * trilerp(b->d1W, b->f->grid, lb);
        if (name == kIntAbsD1W) return std::abs(d1);
        if (name == kIntPosD1W) return std::max(d1, 0.0);
        return ((1 - th) * beta_tau_of(*a) + th * beta_tau_of(*b)) * d1;
    };

    TrajectoryRecord rec;
    rec.family = req.family;
    rec.y0 = req.seed;
    rec.s0 = req.s0;
    rec.s.push_back(req.s0);
    rec.pos.push_back(req.seed);
    std::map<std::string, double> prev;
    for (const auto& name : req.integrands) {
        rec.integrals[name] = 0.0;
        prev[name] = integrand(name, req.seed, req.s0);
    }

    Vec3 y = req.seed;
    double s = req.s0;
    while (s < req.s1 - 1e-12) {
        const double h = std::min(req.ds, req.s1 - s);
        const Vec3 k1 = vel(y, s);
        const Vec3 y2 = {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1],
                         y[2] + 0.5 * h * k1[2]};
        const Vec3 k2 = vel(y2, s + 0.5 * h);
        const Vec3 y3 = {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1],
                         y[2] + 0.5 * h * k2[2]};
        const Vec3 k3 = vel(y3, s + 0.5 * h);
        const Vec3 y4 = {y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]};
        const Vec3 k4 = vel(y4, s + h);
        for (int i = 0; i < 3; ++i)
            y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        s += h;
        if (!inside_box(src.page(src.bracket_scale(s))->f->grid, y)) {
            rec.truncated = true;
            break;
        }
        rec.s.push_back(s);
        rec.pos.push_back(y);
        for (const auto& name : req.integrands) {
            const double cur = integrand(name, y, s);
            rec.integrals[name] += 0.5 * h * (prev[name] + cur);
            prev[name] = cur;
        }
    }
    return rec;
}

// ---- escape_report ----------------------------------------------------------------

EscapeReport escape_report(const std::vector<TrajectoryRecord>& records,
                           double epsilon, double M)
{
    EscapeReport rep;
    rep.ell = std::pow(std::log(M), -5.0);
    rep.big_ell = std::pow(epsilon, -0.1);
    const double slack = 1e-12;
    for (const auto& rec : records) {
        const double r0 = std::sqrt(dot(rec.y0, rec.y0));

        EscapeVerdict la;
        la.applicable = rec.family == FlowFamily::W && r0 >= rep.ell;
        if (la.applicable) {
            la.passed = true;
            la.worst_margin = kInf;
            for (std::size_t k = 0; k < rec.s.size(); ++k) {
                const double lhs = std::sqrt(dot(rec.pos[k], rec.pos[k]));
                const double rhs = r0 * std::exp((rec.s[k] - rec.s0) / 5.0);
                la.worst_margin = std::min(la.worst_margin, lhs / rhs - 1.0);
                if (lhs < rhs * (1.0 - slack)) la.passed = false;
            }
        }
        rep.lower_amplitude.push_back(la);

        EscapeVerdict sf;
        sf.applicable = rec.family == FlowFamily::W && r0 >= rep.big_ell;
        if (sf.applicable) {
            sf.passed = true;
            sf.worst_margin = kInf;
            const double cap = M * std::sqrt(epsilon);
            for (std::size_t k = 0; k < rec.s.size(); ++k) {
                const double lhs = std::abs(rec.pos[k][0]);
                const double rhs = 0.75 * std::abs(rec.y0[0]) *
                                   std::exp(1.5 * (rec.s[k] - rec.s0));
                const double perp = std::hypot(rec.pos[k][1], rec.pos[k][2]);
                sf.worst_margin = std::min(
                    {sf.worst_margin, lhs / rhs - 1.0, 1.0 - perp / cap});
                if (lhs < rhs * (1.0 - slack) || perp > cap * (1.0 + slack))
                    sf.passed = false;
            }
        }
        rep.shock_formation.push_back(sf);
    }
    return rep;
}

// ---- physical flow ----------------------------------------------------------------

PhysicalFlowRecord integrate_physical(const SnapshotSeries& src,
                                      const Vec3& x_start, double t_from,
                                      double t_to, double dt)
{
    if (src.count() < 2)
        throw std::invalid_argument("integrate_physical: need two snapshots");
    if (!(dt > 0)) throw std::invalid_argument("integrate_physical: dt <= 0");
    const double t_lo = src.time_at(0);
    const double t_hi = src.time_at(src.count() - 1);
    const double pad = 1e-12 + 1e-9 * (t_hi - t_lo);
    if (std::min(t_from, t_to) < t_lo - pad ||
        std::max(t_from, t_to) > t_hi + pad)
        throw std::invalid_argument("integrate_physical: t-range not covered");

    PhysicalFlowRecord rec;
    rec.x0 = x_start;
    const auto vel = [&](const Vec3& X, double t) {
        const int i = src.bracket_time(t);
        const auto a = src.page(i);
        const auto b = src.page(i + 1);
        const double th = std::clamp(
            (t - src.time_at(i)) / (src.time_at(i + 1) - src.time_at(i)), 0.0,
            1.0);
        const Vec3 va = physical_velocity(*a, X, &rec.left_support);
        const Vec3 vb = physical_velocity(*b, X, &rec.left_support);
        return Vec3{(1 - th) * va[0] + th * vb[0], (1 - th) * va[1] + th * vb[1],
                    (1 - th) * va[2] + th * vb[2]};
    };

    const double dir = t_to >= t_from ? 1.0 : -1.0;
    Vec3 X = x_start;
    double t = t_from;
    rec.t.push_back(t);
    rec.X.push_back(X);
    while (dir * (t_to - t) > 1e-15) {
        const double h = dir * std::min(dt, dir * (t_to - t));
        const Vec3 k1 = vel(X, t);
        const Vec3 X2 = {X[0] + 0.5 * h * k1[0], X[1] + 0.5 * h * k1[1],
                         X[2] + 0.5 * h * k1[2]};
        const Vec3 k2 = vel(X2, t + 0.5 * h);
        const Vec3 X3 = {X[0] + 0.5 * h * k2[0], X[1] + 0.5 * h * k2[1],
                         X[2] + 0.5 * h * k2[2]};
        const Vec3 k3 = vel(X3, t + 0.5 * h);
        const Vec3 X4 = {X[0] + h * k3[0], X[1] + h * k3[1], X[2] + h * k3[2]};
        const Vec3 k4 = vel(X4, t + h);
        for (int i = 0; i < 3; ++i)
            X[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        t += h;
        rec.t.push_back(t);
        rec.X.push_back(X);
    }
    return rec;
}

BlowupLabel blowup_label(const SnapshotSeries& src, double T_star, double dt,
                         bool deformation)
{
    const double eps = src.epsilon();
    const double t0 = src.time_at(0);
    const double t_start =
        std::min(T_star - 1e-3 * eps, src.time_at(src.count() - 1));
    if (dt <= 0) dt = (t_start - t0) / 4096.0;

    BlowupLabel label;
    label.t_start = t_start;
    const auto back = integrate_physical(src, {0, 0, 0}, t_start, t0, dt);
    label.x0 = back.X.back();
    label.left_support = back.left_support;

    if (deformation) {
        const double delta = 1e-2 * eps;
        std::array<PhysicalFlowRecord, 6> probes;
        for (int j = 0; j < 3; ++j) {
            Vec3 plus = label.x0, minus = label.x0;
            plus[j] += delta;
            minus[j] -= delta;
            probes[2 * j] = integrate_physical(src, plus, t0, t_start, dt);
            probes[2 * j + 1] = integrate_physical(src, minus, t0, t_start, dt);
        }
        std::size_t kmax = probes[0].X.size();
        for (const auto& p : probes) kmax = std::min(kmax, p.X.size());
        for (std::size_t k = 0; k < kmax; ++k) {
            double fro = 0.0;
            for (int j = 0; j < 3; ++j) {
                for (int i = 0; i < 3; ++i) {
                    const double gij = (probes[2 * j].X[k][i] -
                                        probes[2 * j + 1].X[k][i]) /
                                       (2.0 * delta);
                    const double d = gij - (i == j ? 1.0 : 0.0);
                    fro += d * d;
                }
            }
            label.max_deformation =
                std::max(label.max_deformation, std::sqrt(fro));
        }
    }
    return label;
}

double amplification(const SnapshotSeries& src, const Vec3& x0, double ds)
{
    const auto pg = src.page(0);
    const SelfSimilarFields& f = *pg->f;
    const FrontBasis b = front_basis(f.mod.phi, {x0[1], x0[2]});
    const double es2 = std::exp(0.5 * f.s);
    FlowRequest req;
    req.family = FlowFamily::U;
    req.seed = {(x0[0] - b.f) * es2 * es2 * es2, x0[1] * es2, x0[2] * es2};
    req.s0 = src.scale_at(0);
    req.s1 = src.scale_at(src.count() - 1);
    req.ds = ds;
    req.integrands = {kIntBetaTauD1W};
    const TrajectoryRecord rec = integrate_flow(req, src);
    return -rec.integrals.at(kIntBetaTauD1W);
}

// ---- monitors ---------------------------------------------------------------------

double max_positive_slope(const SelfSimilarFields& f)
{
    std::vector<double> d1;
    deriv_axis(f.W, f.grid, 1, d1);
    double worst = 0.0;
    for (const double v : d1) worst = std::max(worst, v);
    return worst;
}

}  // namespace shockss
