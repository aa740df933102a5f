#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

//
// Discrete radial geometry on the ball B_R(0) in R^n, reduced to the radial
// coordinate. Cell-centered finite-volume grid with no node at r = 0: the
// inner face of the first cell sits at r = 0 where the r^{n-1} flux weight
// vanishes, so the coordinate singularity never enters the stencils.
//

namespace radblow {

struct RadialGrid {
    int dim = 0;           // spatial dimension n >= 3
    double radius = 0.0;   // ball radius R > 0
    int cells = 0;         // cell count N >= 16
    double h = 0.0;        // cell width R/N

    std::vector<double> centers;   // r_i = (i + 1/2) h
    std::vector<double> faces;     // r_{i+1/2} = (i + 1) h, outermost = R

    double surface_factor = 0.0;   // omega_{n-1} = 2 pi^{n/2} / Gamma(n/2)

    // face_weight[i] = r_{i-1/2}^{n-1} / h for i = 0..N (flux conductance
    // geometry; index 0 is the r = 0 face and is exactly zero)
    std::vector<double> face_weight;
    // cell_weight[i] = r_i^{n-1} h (midpoint quadrature weight, no omega)
    std::vector<double> cell_weight;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline double unit_sphere_area(int n) {
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

inline GridPtr make_grid(int n, double R, int N) {
    if (n < 3) throw std::invalid_argument("make_grid: dimension must be >= 3, got " + std::to_string(n));
    if (!(R > 0.0)) throw std::invalid_argument("make_grid: radius must be positive");
    if (N < 16) throw std::invalid_argument("make_grid: cell count must be >= 16, got " + std::to_string(N));

    auto g = std::make_shared<RadialGrid>();
    g->dim = n;
    g->radius = R;
    g->cells = N;
    g->h = R / N;
    g->surface_factor = unit_sphere_area(n);

    g->centers.resize(N);
    g->faces.resize(N);
    g->cell_weight.resize(N);
    g->face_weight.resize(N + 1);
    for (int i = 0; i < N; ++i) {
        g->centers[i] = (i + 0.5) * g->h;
        g->faces[i] = (i + 1.0) * g->h;
        g->cell_weight[i] = std::pow(g->centers[i], n - 1) * g->h;
    }
    g->face_weight[0] = 0.0;
    for (int i = 1; i <= N; ++i)
        g->face_weight[i] = std::pow(i * g->h, n - 1) / g->h;
    return g;
}

// A scalar radial field sampled at cell centers.
struct Profile {
    GridPtr grid;
    std::vector<double> values;

    Profile() = default;
    explicit Profile(GridPtr g, double fill = 0.0)
        : grid(std::move(g)), values(static_cast<size_t>(grid->cells), fill) {}
    Profile(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (static_cast<int>(values.size()) != grid->cells)
            throw std::invalid_argument("Profile: value count does not match grid");
    }

    int size() const { return grid ? grid->cells : 0; }
    double operator[](int i) const { return values[static_cast<size_t>(i)]; }
    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
};

inline bool same_grid(const RadialGrid& a, const RadialGrid& b) {
    return a.dim == b.dim && a.cells == b.cells && a.radius == b.radius;
}

inline void require_same_grid(const Profile& a, const Profile& b, const char* op) {
    if (a.grid == b.grid) return;
    if (!a.grid || !b.grid || !same_grid(*a.grid, *b.grid))
        throw std::invalid_argument(std::string(op) + ": profiles live on different grids");
}

// Neumaier compensated sum; keeps the nonlocal quadratures well below the
// 1e-12 conservativity budget at large N.
inline double compensated_sum(std::span<const double> x) {
    double s = 0.0, c = 0.0;
    for (double v : x) {
        double t = s + v;
        if (std::abs(s) >= std::abs(v))
            c += (s - t) + v;
        else
            c += (v - t) + s;
        s = t;
    }
    return s + c;
}

namespace detail {

inline bool is_integral_power(double p) {
    return p == std::nearbyint(p) && std::abs(p) < 1e15;
}

}  // namespace detail

// Midpoint quadrature of int_Omega p^power, i.e. omega_{n-1} sum r_i^{n-1} p_i^power h.
inline double integrate(const Profile& p, double power = 1.0) {
    const RadialGrid& g = *p.grid;
    const bool integral_pow = detail::is_integral_power(power);
    std::vector<double> terms(static_cast<size_t>(g.cells));
    for (int i = 0; i < g.cells; ++i) {
        const double v = p[i];
        if (!integral_pow && v < 0.0)
            throw std::domain_error("integrate: negative value raised to fractional power");
        if (v == 0.0 && power < 0.0)
            throw std::domain_error("integrate: zero value raised to negative power");
        double vp;
        if (power == 1.0)
            vp = v;
        else if (power == 2.0)
            vp = v * v;
        else
            vp = std::pow(v, power);
        terms[static_cast<size_t>(i)] = g.cell_weight[static_cast<size_t>(i)] * vp;
    }
    return g.surface_factor * compensated_sum(terms);
}

inline double linf_norm(const Profile& p) {
    double m = 0.0;
    for (double v : p.values) m = std::max(m, std::abs(v));
    return m;
}

inline double min_value(const Profile& p) {
    double m = p.values.empty() ? 0.0 : p.values.front();
    for (double v : p.values) m = std::min(m, v);
    return m;
}

inline double lp_norm(const Profile& p, double q) {
    if (q < 1.0) throw std::invalid_argument("lp_norm: exponent must be >= 1");
    Profile a = p;
    for (double& v : a.values) v = std::abs(v);
    return std::pow(integrate(a, q), 1.0 / q);
}

// Conservative finite-volume Laplacian:
//   (Lp)_i = (r_{i+1/2}^{n-1} F_{i+1/2} - r_{i-1/2}^{n-1} F_{i-1/2}) / (r_i^{n-1} h),
//   F = (p_{i+1} - p_i)/h, zero flux at r = 0 and r = R.
inline Profile radial_laplacian(const Profile& p) {
    const RadialGrid& g = *p.grid;
    const int N = g.cells;
    Profile out(p.grid);
    double flux_lo = 0.0;  // r^{n-1} F at the inner face (zero at r = 0)
    for (int i = 0; i < N; ++i) {
        const double flux_hi = (i + 1 < N) ? g.face_weight[static_cast<size_t>(i + 1)] * (p[i + 1] - p[i]) : 0.0;
        out[i] = (flux_hi - flux_lo) / g.cell_weight[static_cast<size_t>(i)];
        flux_lo = flux_hi;
    }
    return out;
}

// Discrete r^{1-n} (r^{n-1} c dp/dr)_r with arithmetic face averaging of the
// coefficient and zero flux at both boundary faces. Telescoping face fluxes
// make integrate(result, 1) vanish to roundoff.
inline Profile radial_flux_divergence(const Profile& coef, const Profile& potential) {
    require_same_grid(coef, potential, "radial_flux_divergence");
    const RadialGrid& g = *potential.grid;
    const int N = g.cells;
    Profile out(potential.grid);
    double flux_lo = 0.0;
    for (int i = 0; i < N; ++i) {
        double flux_hi = 0.0;
        if (i + 1 < N) {
            const double cf = 0.5 * (coef[i] + coef[i + 1]);
            flux_hi = g.face_weight[static_cast<size_t>(i + 1)] * cf * (potential[i + 1] - potential[i]);
        }
        out[i] = (flux_hi - flux_lo) / g.cell_weight[static_cast<size_t>(i)];
        flux_lo = flux_hi;
    }
    return out;
}

// Diagnostics derivative (never used inside the time steppers): centered in
// the interior, one-sided second order at the first and last cell.
inline Profile radial_derivative(const Profile& p) {
    const RadialGrid& g = *p.grid;
    const int N = g.cells;
    Profile out(p.grid);
    if (N < 3) throw std::invalid_argument("radial_derivative: need at least 3 cells");
    const double inv2h = 1.0 / (2.0 * g.h);
    out[0] = (-3.0 * p[0] + 4.0 * p[1] - p[2]) * inv2h;
    for (int i = 1; i + 1 < N; ++i) out[i] = (p[i + 1] - p[i - 1]) * inv2h;
    out[N - 1] = (3.0 * p[N - 1] - 4.0 * p[N - 2] + p[N - 3]) * inv2h;
    return out;
}

}  // namespace radblow
