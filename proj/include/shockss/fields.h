// Gridded representation of the self-similar unknowns (W, Z, A2, A3, K) with
// finite-difference machinery and snapshot IO.
//
// Grids are tensor products of per-axis node sets: uniform, or sinh-stretched
// y = Y sinh(a u)/sinh(a) with u uniform on [-1,1].  Node counts are odd so
// y = 0 is always a node; an axis of length 1 is degenerate (planar/1D modes)
// and every derivative along it is zero.  First derivatives use 5-node
// stencils (4th-order centered interior, shifted windows at the boundary);
// origin jets use 7-node stencils per axis, tensor-multiplied for mixed
// derivatives.  Stencil weights come from Fornberg's algorithm on the actual
// node coordinates, so stretched grids need no explicit chain rule.
//
// Weight functions: eta = 1 + y1^2 + |y_check|^6, eta_tilde = eta + |y_check|^2,
// psi = 1/eta + e^{-3s} eta.
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "shockss/geometry.h"

namespace shockss {

struct Grid {
    std::array<int, 3> n = {1, 1, 1};
    std::array<double, 3> half_width = {0, 0, 0};
    double stretch_a = 0.0;  // 0 => uniform
    std::array<std::vector<double>, 3> coord;
    // First-derivative stencils: per axis, node i uses the 5-node window
    // starting at d1_start[axis][i] with weights d1_weight[axis][5*i .. 5*i+4].
    std::array<std::vector<int>, 3> d1_start;
    std::array<std::vector<double>, 3> d1_weight;

    std::size_t idx(int i1, int i2, int i3) const
    {
        return (static_cast<std::size_t>(i1) * n[1] + i2) * n[2] + i3;
    }
    std::size_t size() const
    {
        return static_cast<std::size_t>(n[0]) * n[1] * n[2];
    }
    double spacing_at_origin(int axis) const;  // node distance at y=0, axis in 1..3
};

// Each axis count must be odd, and either 1 (degenerate) or >= 7.
// half_width[axis] is ignored for degenerate axes.
Grid make_grid(const std::array<int, 3>& n, const std::array<double, 3>& half_width,
               double stretch_a);

// Fornberg finite-difference weights for the m-th derivative at z over the
// given nodes (any layout, m < nodes.size()).
std::vector<double> fd_weights(const std::vector<double>& nodes, double z, int order);

// ---- fields ------------------------------------------------------------------

struct SelfSimilarFields {
    Grid grid;
    double s = 0.0;
    double t = 0.0;  // accumulated physical-ish time, dt = beta_tau e^{-s} ds
    double epsilon = 0.0;
    double kappa0 = 0.0;
    FluidParams params;
    ModulationState mod;
    std::vector<double> W, Z, A2, A3, K;
};

SelfSimilarFields make_fields(Grid grid, FluidParams params, double epsilon,
                              double kappa0);

// ---- interpolation --------------------------------------------------------------

// Cell locator for trilinear interpolation: per-axis lower node index and
// weight, computed once and reused across several arrays on the same grid.
// Coordinates outside the box clamp to the edge; degenerate axes pin to
// their single node with zero weight.
struct CellLoc {
    std::array<int, 3> i0 = {0, 0, 0};
    std::array<double, 3> w = {0, 0, 0};
};
CellLoc locate_cell(const Grid& grid, const Vec3& y);

// Whether y lies inside the grid box (degenerate axes ignore their coordinate).
bool in_box(const Grid& grid, const Vec3& y);

double trilinear(const std::vector<double>& field, const Grid& grid,
                 const CellLoc& loc);
double trilinear(const std::vector<double>& field, const Grid& grid, const Vec3& y);

// ---- differentiation ----------------------------------------------------------

// First derivative along axis (1,2,3) at one node.
double derivative(const std::vector<double>& field, const Grid& grid, int axis,
                  int i1, int i2, int i3);

// Whole-array first derivative along axis; out is resized to match.
void deriv_axis(const std::vector<double>& field, const Grid& grid, int axis,
                std::vector<double>& out);

// All derivatives at y = 0 up to total order 3.
struct OriginJet {
    double val = 0.0;
    Vec3 d1 = {0, 0, 0};
    std::array<double, 6> d2 = {};   // 11,12,13,22,23,33
    std::array<double, 10> d3 = {};  // 111,112,113,122,123,133,222,223,233,333
};
OriginJet origin_jet(const std::vector<double>& field, const Grid& grid);

// ---- weights and support --------------------------------------------------------

struct WeightValues {
    double eta = 0.0;
    double eta_tilde = 0.0;
    double psi = 0.0;
};
WeightValues weights(const Vec3& y, double s);

// Spatial support allowed at scale s: |y1| <= 2 eps^{1/2} e^{3s/2},
// |y_check| <= 2 eps^{1/6} e^{s/2}.
bool in_support_region(const Vec3& y, double s, double epsilon);

struct SupportReport {
    bool ok = true;
    Vec3 worst_y = {0, 0, 0};
    double worst_value = 0.0;
    std::string field;
};
SupportReport support_check(const SelfSimilarFields& fields, double threshold);

// ---- snapshot IO -----------------------------------------------------------------

// Writes base+".json" (header) and base+".bin" (W,Z,A2,A3,K as little-endian
// float64, index order i1 slowest / i3 fastest).
void write_snapshot(const std::string& base, const SelfSimilarFields& fields);

// Inverse of write_snapshot; throws std::runtime_error on missing files or a
// header/binary length mismatch.
SelfSimilarFields read_snapshot(const std::string& base);

}  // namespace shockss
