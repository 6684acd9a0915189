#include "critflow/profiles.hpp"

#include <cmath>
#include <numbers>

#include "critflow/rng.hpp"
#include "critflow/spectral.hpp"

namespace critflow {

namespace {

constexpr double pi = std::numbers::pi;

std::size_t mirror_index(const Grid& g, std::size_t idx) {
    auto ijk = g.unflat(idx);
    const int n = g.n();
    return g.flat((n - ijk[0]) % n, (n - ijk[1]) % n, (n - ijk[2]) % n);
}

bool in_band(const Grid& g, std::size_t idx, int kmax) {
    auto ijk = g.unflat(idx);
    for (int d = 0; d < 3; ++d)
        if (std::abs(g.mode(ijk[d])) > kmax) return false;
    return true;
}

}  // namespace

RealField sample_scalar(const Grid& g, const std::function<double(const Point&)>& fn) {
    RealField f(g, Rank::scalar);
    const int n = g.n();
    const double c = g.centre();
    auto out = f.component(0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                out[g.flat(i, j, k)] = fn({g.coord(i) - c, g.coord(j) - c, g.coord(k) - c});
    return f;
}

RealField sample_vector(const Grid& g, const std::function<Point(const Point&)>& fn) {
    RealField f(g, Rank::vector);
    const int n = g.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Point v = fn({g.coord(i), g.coord(j), g.coord(k)});
                std::size_t idx = g.flat(i, j, k);
                for (int c = 0; c < 3; ++c) f.at(c, idx) = v[c];
            }
    return f;
}

double smooth_cutoff(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    double t = 2.0 * s - 1.0;
    auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
    double a = psi(1.0 - t), b = psi(t);
    return a / (a + b);
}

RealField gaussian_bump(const Grid& g, double width, double amplitude) {
    return sample_scalar(g, [&](const Point& x) {
        double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        return amplitude * std::exp(-0.5 * r2 / (width * width));
    });
}

RealField gaussian_density(const Grid& g, double width) {
    RealField f = gaussian_bump(g, width);
    double mass = 0.0;
    for (double v : f.data()) mass += v;
    f *= 1.0 / (mass * g.cell_volume());
    return f;
}

RealField critical_profile(const Grid& g, double core, double cutoff, double amplitude) {
    return sample_scalar(g, [&](const Point& x) {
        double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        return amplitude * smooth_cutoff(r / cutoff) / std::sqrt(r * r + core * core);
    });
}

RealField ball_indicator(const Grid& g, double radius) {
    double r2 = radius * radius * (1.0 + 1e-12);
    return sample_scalar(g, [&](const Point& x) {
        return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= r2 ? 1.0 : 0.0;
    });
}

RealField random_band_limited(const Grid& g, Rank rank, int kmax, std::uint64_t seed,
                              bool solenoidal) {
    require(kmax >= 1 && 2 * kmax < g.n(), ErrorKind::InvalidConfig,
            "band limit must satisfy 1 <= kmax < N/2");
    // Draws are keyed by (component, mode), so the same seed gives the same
    // continuum field at every resolution.
    SpectralField F(g, rank);
    for (int c = 0; c < F.components(); ++c) {
        auto d = F.component(c);
        for (std::size_t idx = 1; idx < g.size(); ++idx) {
            if (!in_band(g, idx, kmax)) continue;
            auto ijk = g.unflat(idx);
            std::array<int, 3> m{g.mode(ijk[0]), g.mode(ijk[1]), g.mode(ijk[2])};
            if (m < std::array<int, 3>{0, 0, 0}) continue;  // conjugate partner is drawn
            std::uint64_t stream = static_cast<std::uint64_t>(c);
            for (int v : m) stream = stream * 4096 + static_cast<std::uint64_t>(v + 2048);
            CounterRng rng(seed, stream);
            double a = rng.normal(), b = rng.normal();
            d[idx] = cplx(a, b) * std::sqrt(0.5);
            d[mirror_index(g, idx)] = std::conj(d[idx]);
        }
    }
    if (solenoidal) {
        require_rank(rank, Rank::vector, "solenoidal random field must be a vector field");
        F = leray_project(F);
    }
    return inverse_transform(F);
}

RealField random_broadband(const Grid& g, double spectral_slope, std::uint64_t seed) {
    CounterRng rng(seed);
    SpectralField F(g, Rank::vector);
    const auto& k2 = g.k2();
    for (std::size_t idx = 1; idx < g.size(); ++idx) {
        std::size_t p = mirror_index(g, idx);
        if (p <= idx || !retained_by_dealiasing(g, idx)) continue;
        double amp = std::pow(k2[idx], -0.25 * spectral_slope);
        for (int c = 0; c < 3; ++c) {
            double phase = 2.0 * pi * rng.uniform();
            F.at(c, idx) = amp * std::polar(1.0, phase);
            F.at(c, p) = std::conj(F.at(c, idx));
        }
    }
    RealField w = inverse_transform(leray_project(F));
    w *= 1.0 / rms(w);
    return w;
}

RealField taylor_green(const Grid& g, double amplitude) {
    double q = 2.0 * pi / g.length();
    return sample_vector(g, [&](const Point& x) {
        double sx = std::sin(q * x[0]), cx = std::cos(q * x[0]);
        double sy = std::sin(q * x[1]), cy = std::cos(q * x[1]);
        double cz = std::cos(q * x[2]);
        return Point{amplitude * sx * cy * cz, -amplitude * cx * sy * cz, 0.0};
    });
}

RealField beltrami(const Grid& g, double amplitude, int m) {
    double q = 2.0 * pi * m / g.length();
    // A = 1, B = 0.7, C = 0.4
    const double A = 1.0, B = 0.7, C = 0.4;
    return sample_vector(g, [&](const Point& x) {
        return Point{amplitude * (A * std::sin(q * x[2]) + C * std::cos(q * x[1])),
                     amplitude * (B * std::sin(q * x[0]) + A * std::cos(q * x[2])),
                     amplitude * (C * std::sin(q * x[1]) + B * std::cos(q * x[0]))};
    });
}

RealField single_mode(const Grid& g, std::array<int, 3> m, double amplitude) {
    Point e{0.0, 0.0, 0.0};
    if (m[1] == 0 && m[2] == 0) {
        e = {0.0, 1.0, 0.0};
    } else {
        double nx = m[1], ny = -m[0];
        double n = std::hypot(nx, ny);
        if (n == 0.0) e = {1.0, 0.0, 0.0};
        else e = {nx / n, ny / n, 0.0};
    }
    double q = 2.0 * pi / g.length();
    return sample_vector(g, [&](const Point& x) {
        double ph = q * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]);
        double v = amplitude * std::cos(ph);
        return Point{v * e[0], v * e[1], v * e[2]};
    });
}

std::vector<RealField> probe_family(const Grid& g, int jmax) {
    std::vector<RealField> out;
    for (int j = 1; j <= jmax; ++j) {
        out.push_back(single_mode(g, {j, 0, 0}));
        out.push_back(single_mode(g, {j, j, 0}));
        out.push_back(single_mode(g, {j, j, j}));
    }
    return out;
}

std::vector<NamedField> regression_family(const Grid& g) {
    const double h = g.spacing(), L = g.length();
    std::vector<NamedField> out;
    out.push_back({"critical core=2h cutoff=L/4", critical_profile(g, 2 * h, L / 4)});
    out.push_back({"critical core=4h cutoff=L/4", critical_profile(g, 4 * h, L / 4)});
    out.push_back({"gaussian width=L/20", gaussian_bump(g, L / 20)});
    out.push_back({"ball radius=L/10", ball_indicator(g, L / 10)});
    const double w = L / 24, d = L / 12;
    out.push_back({"two gaussians L/6 apart", sample_scalar(g, [&](const Point& x) {
                       double a = (x[0] - d) * (x[0] - d) + x[1] * x[1] + x[2] * x[2];
                       double b = (x[0] + d) * (x[0] + d) + x[1] * x[1] + x[2] * x[2];
                       return std::exp(-a / (2 * w * w)) + std::exp(-b / (2 * w * w));
                   })});
    return out;
}

namespace {

// out[i] = factor * f[2i - shift]; periodic wraps the source index, otherwise
// nodes whose source falls outside the box are left at zero.
RealField relabel(const RealField& f, double factor, int shift, bool periodic) {
    const Grid& g = f.grid();
    const int n = g.n();
    RealField out(g, f.rank());
    auto src_index = [&](int i) {
        int s = 2 * i - shift;
        if (periodic) return ((s % n) + n) % n;
        return s >= 0 && s < n ? s : -1;
    };
    for (int i = 0; i < n; ++i) {
        int si = src_index(i);
        if (si < 0) continue;
        for (int j = 0; j < n; ++j) {
            int sj = src_index(j);
            if (sj < 0) continue;
            for (int k = 0; k < n; ++k) {
                int sk = src_index(k);
                if (sk < 0) continue;
                for (int c = 0; c < f.components(); ++c)
                    out.at(c, g.flat(i, j, k)) = factor * f.at(c, g.flat(si, sj, sk));
            }
        }
    }
    return out;
}

}  // namespace

RealField dilate_about_centre(const RealField& f, double factor) {
    return relabel(f, factor, f.grid().n() / 2, false);
}

RealField dilate_periodic(const RealField& f, double factor) { return relabel(f, factor, 0, true); }

}  // namespace critflow
