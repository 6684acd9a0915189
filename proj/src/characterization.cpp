#include "critflow/characterization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "critflow/spectral.hpp"
#include "power_iteration.hpp"

namespace critflow {

using detail::power_iterate;

namespace {

constexpr double pi = std::numbers::pi;
// Madelung-type constant of the simple cubic lattice with neutralising background.
constexpr double madelung_cubic = 2.837297479;

// Apply a real radial symbol s(k) to a mean-zero scalar sample vector.
std::vector<double> apply_symbol(const Grid& g, const std::vector<double>& v,
                                 const std::vector<double>& symbol) {
    std::vector<cplx> a(v.begin(), v.end()), b(g.size());
    g.forward(a.data(), b.data());
    b[0] = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) b[i] *= symbol[i];
    g.inverse(b.data(), a.data());
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = a[i].real();
    return out;
}

}  // namespace

double CharConstants::max() const { return std::max({A1, A2, A3, A4}); }
double CharConstants::min() const { return std::min({A1, A2, A3, A4}); }

CharConstants char_constants(const RealField& nu, CharFamily family) {
    require_rank(nu.rank(), Rank::scalar, "density must be scalar");
    const Grid& g = nu.grid();
    if (family.balls.radii.empty()) family.balls = default_balls(g);
    CharConstants out;
    out.family = family.descriptor;
    double numax = max_abs(nu);
    if (numax == 0.0) return out;
    for (double v : nu.data())
        require(v >= -1e-12 * numax, ErrorKind::InvalidField, "density must be nonnegative");

    const std::size_t n3 = g.size();
    std::vector<double> dens(nu.data().begin(), nu.data().end());
    for (double& v : dens) v = std::max(v, 0.0);

    const double h3 = g.cell_volume();
    const double L = g.length();
    std::vector<double> root(n3);
    for (std::size_t i = 0; i < n3; ++i) root[i] = std::sqrt(dens[i]);
    std::vector<double> start = dens;

    // A1: top eigenvalue of √ν L^{-1} √ν, L the 7-point Laplacian. The periodic
    // inverse is shifted to whole-space behaviour by the leading terms of the
    // lattice-sum expansion G_free ≈ G_per + ξ/(4πL) - |x-y|²/(6L³).
    {
        const double h = g.spacing();
        std::vector<double> inv_lap(n3, 0.0);
        for (std::size_t idx = 1; idx < n3; ++idx) {
            auto ijk = g.unflat(idx);
            double s = 0.0;
            for (int d = 0; d < 3; ++d) {
                double sn = std::sin(0.5 * g.wavenumber(ijk[d]) * h);
                s += 4.0 / (h * h) * sn * sn;
            }
            inv_lap[idx] = 1.0 / s;
        }
        std::vector<std::array<double, 3>> x(n3);
        for (std::size_t idx = 0; idx < n3; ++idx) {
            auto ijk = g.unflat(idx);
            for (int d = 0; d < 3; ++d) x[idx][d] = g.coord(ijk[d]) - g.centre();
        }
        auto apply = [&](const std::vector<double>& v) {
            std::vector<double> f(n3);
            double mass = 0.0, second = 0.0;
            std::array<double, 3> first{0.0, 0.0, 0.0};
            for (std::size_t i = 0; i < n3; ++i) {
                f[i] = root[i] * v[i];
                const double w = f[i] * h3;
                mass += w;
                second += w * (x[i][0] * x[i][0] + x[i][1] * x[i][1] + x[i][2] * x[i][2]);
                for (int d = 0; d < 3; ++d) first[d] += w * x[i][d];
            }
            auto u = apply_symbol(g, f, inv_lap);
            const double c0 = madelung_cubic / (4.0 * pi * L), c2 = 1.0 / (6.0 * L * L * L);
            for (std::size_t i = 0; i < n3; ++i) {
                if (root[i] == 0.0) {
                    u[i] = 0.0;
                    continue;
                }
                double r2 = x[i][0] * x[i][0] + x[i][1] * x[i][1] + x[i][2] * x[i][2];
                double xy = x[i][0] * first[0] + x[i][1] * first[1] + x[i][2] * first[2];
                u[i] = root[i] * (u[i] + c0 * mass - c2 * (r2 * mass - 2.0 * xy + second));
            }
            return u;
        };
        auto r = power_iterate(start, apply, family.max_iter, family.tol, "A1");
        out.A1 = r.value;
        out.iterations_A1 = r.iterations;
    }

    // A2: ||T||² = top eigenvalue of TT* = √ν I_2 √ν, T g = √ν I_1 g, with the
    // free-space kernel 1/(4π|x|).
    {
        FreeSpacePotential i2(g, 2.0);
        RealField buf(g, Rank::scalar);
        auto apply = [&](const std::vector<double>& v) {
            auto b = buf.component(0);
            for (std::size_t i = 0; i < n3; ++i) b[i] = root[i] * v[i];
            RealField u = i2.apply(buf);
            std::vector<double> w(n3);
            auto uv = u.component(0);
            for (std::size_t i = 0; i < n3; ++i) w[i] = root[i] * uv[i];
            return w;
        };
        auto r = power_iterate(start, apply, family.max_iter, family.tol, "A2");
        out.A2 = r.value;
        out.iterations_A2 = r.iterations;
    }

    // A3, A4 over the ball family with cap(B_r) = 4πr.
    auto cap_weight = [](double r) { return 1.0 / (4.0 * pi * r); };
    out.A3 = ball_supremum(nu, family.balls, cap_weight).value;
    RealField pot = FreeSpacePotential(g, 1.0).apply(nu);
    for (double& v : pot.data()) v *= v;
    out.A4 = std::sqrt(ball_supremum(pot, family.balls, cap_weight).value);
    return out;
}

}  // namespace critflow
