#include "shockss/fields.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shockss {

std::vector<double> fd_weights(const std::vector<double>& nodes, double z, int order)
{
    const int n = static_cast<int>(nodes.size());
    if (order < 0 || order >= n) {
        throw std::invalid_argument("fd_weights: order must be below the node count");
    }
    // Fornberg's recursion; C(i,k) are weights of node i for the k-th derivative.
    std::vector<double> C(static_cast<std::size_t>(n) * (order + 1), 0.0);
    auto c = [&](int i, int k) -> double& { return C[i * (order + 1) + k]; };
    double c1 = 1.0;
    double c4 = nodes[0] - z;
    c(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                }
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k) {
                c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            }
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c(i, order);
    return w;
}

Grid make_grid(const std::array<int, 3>& n, const std::array<double, 3>& half_width,
               double stretch_a)
{
    Grid g;
    g.n = n;
    g.half_width = half_width;
    g.stretch_a = stretch_a;
    for (int a = 0; a < 3; ++a) {
        const int m = n[a];
        if (m % 2 == 0 || m < 1 || (m > 1 && m < 7)) {
            throw std::invalid_argument(
                "make_grid: axis counts must be odd and either 1 or >= 7");
        }
        auto& x = g.coord[a];
        x.resize(m);
        if (m == 1) {
            x[0] = 0.0;
            continue;
        }
        if (!(half_width[a] > 0.0)) {
            throw std::invalid_argument("make_grid: half widths must be positive");
        }
        const double sh = (stretch_a > 0.0) ? std::sinh(stretch_a) : 0.0;
        for (int i = 0; i < m; ++i) {
            const double u = -1.0 + 2.0 * i / (m - 1.0);
            x[i] = (stretch_a > 0.0) ? half_width[a] * std::sinh(stretch_a * u) / sh
                                     : half_width[a] * u;
        }
        x[(m - 1) / 2] = 0.0;  // exact center node
        // 5-node first-derivative stencils, windows clamped at the edges.
        g.d1_start[a].resize(m);
        g.d1_weight[a].resize(5 * static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const int o = std::clamp(i - 2, 0, m - 5);
            g.d1_start[a][i] = o;
            const std::vector<double> win(x.begin() + o, x.begin() + o + 5);
            const auto w = fd_weights(win, x[i], 1);
            std::copy(w.begin(), w.end(), g.d1_weight[a].begin() + 5 * i);
        }
    }
    return g;
}

double Grid::spacing_at_origin(int axis) const
{
    if (axis < 1 || axis > 3) throw std::invalid_argument("spacing_at_origin: axis must be 1..3");
    const int m = n[axis - 1];
    if (m == 1) return 0.0;
    const int c = (m - 1) / 2;
    return coord[axis - 1][c + 1] - coord[axis - 1][c];
}

SelfSimilarFields make_fields(Grid grid, FluidParams params, double epsilon,
                              double kappa0)
{
    SelfSimilarFields f;
    const std::size_t sz = grid.size();
    f.grid = std::move(grid);
    f.params = params;
    f.epsilon = epsilon;
    f.kappa0 = kappa0;
    f.t = f.mod.tau - std::exp(-f.s);
    f.W.assign(sz, 0.0);
    f.Z.assign(sz, 0.0);
    f.A2.assign(sz, 0.0);
    f.A3.assign(sz, 0.0);
    f.K.assign(sz, 0.0);
    return f;
}

double derivative(const std::vector<double>& field, const Grid& grid, int axis,
                  int i1, int i2, int i3)
{
    if (axis < 1 || axis > 3) {
        throw std::invalid_argument("derivative: axis must be 1, 2, or 3");
    }
    const int a = axis - 1;
    if (grid.n[a] == 1) return 0.0;
    int ii[3] = {i1, i2, i3};
    const int o = grid.d1_start[a][ii[a]];
    const double* w = grid.d1_weight[a].data() + 5 * ii[a];
    double sum = 0.0;
    for (int k = 0; k < 5; ++k) {
        ii[a] = o + k;
        sum += w[k] * field[grid.idx(ii[0], ii[1], ii[2])];
    }
    return sum;
}

void deriv_axis(const std::vector<double>& field, const Grid& grid, int axis,
                std::vector<double>& out)
{
    out.assign(field.size(), 0.0);
    const int a = axis - 1;
    if (grid.n[a] == 1) return;
    const int n1 = grid.n[0], n2 = grid.n[1], n3 = grid.n[2];
    // Strides in the flat (i1 slowest, i3 fastest) layout.
    const std::ptrdiff_t stride[3] = {static_cast<std::ptrdiff_t>(n2) * n3, n3, 1};
    for (int i1 = 0; i1 < n1; ++i1) {
        for (int i2 = 0; i2 < n2; ++i2) {
            for (int i3 = 0; i3 < n3; ++i3) {
                const int ia = (a == 0) ? i1 : (a == 1) ? i2 : i3;
                const int o = grid.d1_start[a][ia];
                const double* w = grid.d1_weight[a].data() + 5 * ia;
                const double* f =
                    field.data() + grid.idx(i1, i2, i3) + (o - ia) * stride[a];
                double sum = 0.0;
                for (int k = 0; k < 5; ++k) sum += w[k] * f[k * stride[a]];
                out[grid.idx(i1, i2, i3)] = sum;
            }
        }
    }
}

namespace {

// 7-node per-axis weights at y=0 for derivative orders 0..3; degenerate axes
// get a single unit weight for order 0 (all higher orders vanish).
struct AxisJet {
    int start = 0;  // first node of the window (absolute index)
    int count = 1;
    std::array<std::array<double, 7>, 4> w = {};  // [order][node]
};

AxisJet axis_jet(const Grid& grid, int a)
{
    AxisJet j;
    if (grid.n[a] == 1) {
        j.w[0][0] = 1.0;
        return j;
    }
    if (grid.n[a] < 7) {
        throw std::runtime_error("origin_jet: grid cannot resolve a 7-point stencil");
    }
    const int c = (grid.n[a] - 1) / 2;
    j.start = c - 3;
    j.count = 7;
    const std::vector<double> win(grid.coord[a].begin() + j.start,
                                  grid.coord[a].begin() + j.start + 7);
    j.w[0][3] = 1.0;  // order 0: value at the center node
    for (int m = 1; m <= 3; ++m) {
        const auto wm = fd_weights(win, 0.0, m);
        for (int k = 0; k < 7; ++k) j.w[m][k] = wm[k];
    }
    return j;
}

}  // namespace

OriginJet origin_jet(const std::vector<double>& field, const Grid& grid)
{
    const AxisJet ax[3] = {axis_jet(grid, 0), axis_jet(grid, 1), axis_jet(grid, 2)};

    auto mixed = [&](int o1, int o2, int o3) -> double {
        if ((o1 > 0 && grid.n[0] == 1) || (o2 > 0 && grid.n[1] == 1) ||
            (o3 > 0 && grid.n[2] == 1)) {
            return 0.0;
        }
        double sum = 0.0;
        for (int k1 = 0; k1 < ax[0].count; ++k1) {
            const double w1 = ax[0].w[o1][k1];
            if (w1 == 0.0) continue;
            for (int k2 = 0; k2 < ax[1].count; ++k2) {
                const double w12 = w1 * ax[1].w[o2][k2];
                if (w12 == 0.0) continue;
                for (int k3 = 0; k3 < ax[2].count; ++k3) {
                    const double w = w12 * ax[2].w[o3][k3];
                    if (w == 0.0) continue;
                    sum += w * field[grid.idx(ax[0].start + k1, ax[1].start + k2,
                                              ax[2].start + k3)];
                }
            }
        }
        return sum;
    };

    OriginJet jet;
    jet.val = mixed(0, 0, 0);
    jet.d1 = {mixed(1, 0, 0), mixed(0, 1, 0), mixed(0, 0, 1)};
    jet.d2 = {mixed(2, 0, 0), mixed(1, 1, 0), mixed(1, 0, 1),
              mixed(0, 2, 0), mixed(0, 1, 1), mixed(0, 0, 2)};
    jet.d3 = {mixed(3, 0, 0), mixed(2, 1, 0), mixed(2, 0, 1), mixed(1, 2, 0),
              mixed(1, 1, 1), mixed(1, 0, 2), mixed(0, 3, 0), mixed(0, 2, 1),
              mixed(0, 1, 2), mixed(0, 0, 3)};
    return jet;
}

WeightValues weights(const Vec3& y, double s)
{
    const double check2 = y[1] * y[1] + y[2] * y[2];
    WeightValues w;
    w.eta = 1.0 + y[0] * y[0] + check2 * check2 * check2;
    w.eta_tilde = w.eta + check2;
    w.psi = 1.0 / w.eta + std::exp(-3.0 * s) * w.eta;
    return w;
}

bool in_support_region(const Vec3& y, double s, double epsilon)
{
    const double lim1 = 2.0 * std::sqrt(epsilon) * std::exp(1.5 * s);
    const double limc = 2.0 * std::pow(epsilon, 1.0 / 6.0) * std::exp(0.5 * s);
    return std::fabs(y[0]) <= lim1 && std::hypot(y[1], y[2]) <= limc;
}

SupportReport support_check(const SelfSimilarFields& fields, double threshold)
{
    SupportReport rep;
    const Grid& g = fields.grid;
    const std::vector<double>* arr[5] = {&fields.W, &fields.Z, &fields.A2, &fields.A3,
                                         &fields.K};
    static const char* names[5] = {"W", "Z", "A2", "A3", "K"};
    for (int i1 = 0; i1 < g.n[0]; ++i1) {
        for (int i2 = 0; i2 < g.n[1]; ++i2) {
            for (int i3 = 0; i3 < g.n[2]; ++i3) {
                const Vec3 y = {g.coord[0][i1], g.coord[1][i2], g.coord[2][i3]};
                if (in_support_region(y, fields.s, fields.epsilon)) continue;
                const std::size_t id = g.idx(i1, i2, i3);
                for (int f = 0; f < 5; ++f) {
                    const double v = std::fabs((*arr[f])[id]);
                    if (v >= threshold && v > std::fabs(rep.worst_value)) {
                        rep.ok = false;
                        rep.worst_y = y;
                        rep.worst_value = (*arr[f])[id];
                        rep.field = names[f];
                    }
                }
            }
        }
    }
    return rep;
}

}  // namespace shockss
