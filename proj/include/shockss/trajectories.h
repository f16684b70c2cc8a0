// Lagrangian trajectories through stored snapshot series: the three
// self-similar flow families driven by the transport velocities
//   d_s Phi = V_fam(Phi, s),   V_fam = (g + 3/2 y1, h^2 + y2/2, h^3 + y3/2),
// the physical front-frame flow
//   d_t X = 2 beta1 (Qdot X - R^T xi_dot + (u.N) N + A_nu T^nu)(X, t),
// escape-rate checks along W-family trajectories, the backward label
// integration to the blowup particle, and the slope-amplification integral
//   -int beta_tau (d1 W) o Phi_U ds.
//
// Snapshot fields are interpolated trilinearly inside the grid box and
// linearly between snapshots (in s for the self-similar flows, in t for the
// physical flow).  Integration is classical RK4 with a fixed step; a
// trajectory that steps outside the grid box is cut at the last interior
// sample and flagged.  Path integrals use the trapezoid rule on the samples.
#pragma once

#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "shockss/dynamics.h"
#include "shockss/fields.h"

namespace shockss {

enum class FlowFamily { W, Z, U };

// Random-access view of a run's stored states, ordered by increasing s.
// Either fully resident (built from states in memory) or paged from disk
// (built from a snapshot directory), with derived per-snapshot data
// (transport velocities, d1 W) computed on first use.  Paging is guarded by
// a mutex and pages are handed out as shared pointers, so concurrent
// trajectory integrations can share one series.
class SnapshotSeries {
  public:
    explicit SnapshotSeries(std::vector<SelfSimilarFields> states);

    // Loads every "*.json"/"*.bin" snapshot pair under dir (sorted by name),
    // keeping only headers resident; at most `window` decoded snapshots stay
    // in memory at a time.
    static SnapshotSeries from_dir(const std::string& dir, int window = 4);

    int count() const { return static_cast<int>(meta_.size()); }
    double scale_at(int i) const { return meta_[i].s; }
    double time_at(int i) const { return meta_[i].t; }
    double epsilon() const { return epsilon_; }
    double kappa0() const { return kappa0_; }
    FluidParams params() const { return params_; }

    // Largest spacing s_{i+1} - s_i over snapshots intersecting [s_lo, s_hi].
    double max_spacing(double s_lo, double s_hi) const;

    // Index i with scale_at(i) <= s <= scale_at(i+1), clamped to the ends.
    int bracket_scale(double s) const;
    int bracket_time(double t) const;

    struct Page {
        std::shared_ptr<const SelfSimilarFields> f;
        TransportFields tf;
        std::vector<double> d1W;  // d_{y1} W at the nodes
    };
    std::shared_ptr<const Page> page(int i) const;

  private:
    SnapshotSeries() = default;
    struct Meta {
        double s = 0.0, t = 0.0;
        std::string base;  // empty => states_[i] holds the fields
    };
    std::vector<Meta> meta_;
    std::vector<std::shared_ptr<const SelfSimilarFields>> states_;
    double epsilon_ = 0.0;
    double kappa0_ = 0.0;
    FluidParams params_;
    int window_ = 4;
    // unique_ptr keeps the series movable; the mutex guards the page list.
    mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
    mutable std::list<std::pair<int, std::shared_ptr<const Page>>> pages_;
};

// ---- self-similar flows ---------------------------------------------------------

// Path integrals recognized by integrate_flow, keyed by these names:
//   "abs_d1W"       int |d1 W| o Phi ds
//   "pos_d1W"       int max(d1 W, 0) o Phi ds
//   "beta_tau_d1W"  int beta_tau (d1 W) o Phi ds
inline constexpr const char* kIntAbsD1W = "abs_d1W";
inline constexpr const char* kIntPosD1W = "pos_d1W";
inline constexpr const char* kIntBetaTauD1W = "beta_tau_d1W";

struct FlowRequest {
    FlowFamily family = FlowFamily::W;
    Vec3 seed = {0, 0, 0};  // y at s0
    double s0 = 0.0;
    double s1 = 0.0;
    double ds = 0.01;
    std::vector<std::string> integrands;
};

struct TrajectoryRecord {
    FlowFamily family = FlowFamily::W;
    Vec3 y0 = {0, 0, 0};
    double s0 = 0.0;
    std::vector<double> s;    // strictly increasing, s.front() == s0
    std::vector<Vec3> pos;    // pos.front() == y0
    bool truncated = false;   // stepped out of the grid box before s1
    std::map<std::string, double> integrals;
};

// RK4 integration of one trajectory.  Requires snapshots covering
// [s0, s1] with spacing <= 0.05, the seed inside the grid box, and known
// integrand names; violations throw std::invalid_argument.
TrajectoryRecord integrate_flow(const FlowRequest& req, const SnapshotSeries& src);

// ---- escape checks --------------------------------------------------------------

struct EscapeVerdict {
    bool applicable = false;
    bool passed = false;
    // Smallest sampled slack of the checked inequality (lhs/rhs - 1);
    // negative means a violated sample.
    double worst_margin = 0.0;
};

struct EscapeReport {
    double ell = 0.0;      // (log M)^{-5}: amplitude threshold
    double big_ell = 0.0;  // epsilon^{-1/10}: shock-formation threshold
    // Per input record.  lower_amplitude checks |Phi(s)| >= |y0| e^{(s-s0)/5}
    // for W-family seeds with |y0| >= ell; shock_formation checks
    // |Phi_1(s)| >= 3/4 |y0_1| e^{3(s-s0)/2} together with the transverse
    // confinement |check Phi| <= M eps^{1/2}, for W-family seeds with
    // |y0| >= big_ell.
    std::vector<EscapeVerdict> lower_amplitude;
    std::vector<EscapeVerdict> shock_formation;
};

EscapeReport escape_report(const std::vector<TrajectoryRecord>& records,
                           double epsilon, double M);

// ---- physical flow, blowup label, amplification -----------------------------------

struct PhysicalFlowRecord {
    Vec3 x0 = {0, 0, 0};     // position at t.front()
    std::vector<double> t;   // monotone in integration direction
    std::vector<Vec3> X;
    bool left_support = false;  // some evaluation fell outside the grid box
};

// Integrates d_t X = 2 beta1 (Qdot X - R^T xi_dot + u) from (x_start, t_from)
// to t_to (forward or backward), sampling every step.  dt > 0 is the step
// magnitude.  Field lookups outside the grid box clamp to the box edge and
// set left_support.
PhysicalFlowRecord integrate_physical(const SnapshotSeries& src,
                                      const Vec3& x_start, double t_from,
                                      double t_to, double dt);

// Same contract for the material flow in front-adapted coordinates
// (x1 measured from the front graph), the chart in which the vorticity
// components are transported:
//   d_t x = (-fdot + 2 beta1 J (v + u).N, 2 beta1 (v + u)_2, ...),
// v = Qdot x_tilde - R^T xi_dot.  It follows the same particles as the
// sheared-frame flow: x(t) = (X1(t) - f(X_check), X_check(t)).
PhysicalFlowRecord integrate_material(const SnapshotSeries& src,
                                      const Vec3& x_start, double t_from,
                                      double t_to, double dt);

struct BlowupLabel {
    Vec3 x0 = {0, 0, 0};       // front-frame label at t = -epsilon
    double t_start = 0.0;      // where the backward integration began
    bool left_support = false;  // the backward sweep left the grid box
    // max over sampled times of |grad_label X(t) - Id|_F, by centered finite
    // differences of six forward trajectories around x0.  The probes ride
    // into the shrinking self-similar box near t_start, so their edge
    // clamping is not folded into left_support.
    double max_deformation = 0.0;
};

// Backward integration of the physical flow from X = 0 at
// t_start = min(T_star - 1e-3 epsilon, last snapshot time) down to the first
// snapshot time; the small start offset avoids the singular velocity
// gradient and perturbs the label only at O(1e-3 epsilon).
BlowupLabel blowup_label(const SnapshotSeries& src, double T_star,
                         double dt = 0.0, bool deformation = true);

// -int beta_tau (d1 W) o Phi_U ds over the stored range, seeded from the
// front-frame label x0 at the first snapshot: equals the slope amplification
// -int d_{x1} w o X dt after the change of variables dt = beta_tau e^{-s} ds,
// d_{x1} w = e^s d1 W.
double amplification(const SnapshotSeries& src, const Vec3& x0,
                     double ds = 0.01);

// ---- field monitors ----------------------------------------------------------------

// max over nodes of max(d1 W, 0); healthy runs keep this below 4 e^{-s/15}.
double max_positive_slope(const SelfSimilarFields& f);

}  // namespace shockss
