#include "critflow/perturbed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <boost/math/special_functions/legendre.hpp>

#include "critflow/norms.hpp"
#include "critflow/spectral.hpp"

namespace critflow {

namespace {

constexpr double pi = std::numbers::pi;
constexpr cplx I{0.0, 1.0};

struct Rule {
    std::vector<double> x, w;  // on [-1, 1]
};

const Rule& gauss_legendre(int n) {
    static std::vector<std::pair<int, Rule>> cache;
    for (auto& [m, r] : cache)
        if (m == n) return r;
    Rule r;
    for (double z : boost::math::legendre_p_zeros<double>(n)) {
        double p = boost::math::legendre_p_prime(n, z);
        double w = 2.0 / ((1.0 - z * z) * p * p);
        r.x.push_back(z);
        r.w.push_back(w);
        if (z != 0.0) {
            r.x.push_back(-z);
            r.w.push_back(w);
        }
    }
    cache.emplace_back(n, std::move(r));
    return cache.back().second;
}

SpectralField to_complex_spectrum(const RealField& f) { return forward_transform(f); }

// ||f|| as the ball estimator of the pointwise modulus
double vnorm_of(const SpectralField& F) { return vnorm_ball(pointwise_magnitude(inverse_transform_complex(F))).value; }

RealField real_part(const ComplexField& z, double scale = 1.0) {
    RealField out(z.grid(), z.rank());
    for (std::size_t i = 0; i < z.data().size(); ++i) out.data()[i] = scale * z.data()[i].real();
    return out;
}

RealField imag_part(const ComplexField& z, double scale = 1.0) {
    RealField out(z.grid(), z.rank());
    for (std::size_t i = 0; i < z.data().size(); ++i) out.data()[i] = scale * z.data()[i].imag();
    return out;
}

void require_vector(const SpectralField& f) { require_rank(f.rank(), Rank::vector, "expected a vector field"); }

SpectralField scaled_heat(const SpectralField& F, cplx lambda) {
    const auto& k2 = F.grid().k2();
    SpectralField out(F.grid(), F.rank());
    for (std::size_t idx = 1; idx < F.points(); ++idx) {
        cplx m = 1.0 / (lambda - k2[idx]);
        for (int c = 0; c < F.components(); ++c) out.at(c, idx) = m * F.at(c, idx);
    }
    return out;
}

}  // namespace

PerturbedOperator::PerturbedOperator(RealField U) : U_(std::move(U)) {
    require_rank(U_.rank(), Rank::vector, "the frozen field must be a vector field");
    SpectralField Uh = forward_transform(U_);
    require_mean_zero(Uh, "frozen field");
    double scale = std::max(rms(U_), 1.0);
    if (divergence_norm(Uh) > 1e-10 * scale)
        fail(ErrorKind::NotSolenoidal, "frozen field is not divergence-free");
    max_speed_ = max_abs(pointwise_magnitude(U_));
}

SpectralField op_B(const SpectralField& f, const PerturbedOperator& P) {
    require_same_grid(f.grid(), P.grid());
    require_vector(f);
    const Grid& g = P.grid();
    if (P.max_speed() == 0.0) return SpectralField(g, Rank::vector);
    ComplexField fz = inverse_transform_complex(f);
    const RealField& U = P.U();
    // U⊗f + f⊗U is symmetric: transform the six distinct entries only
    std::vector<cplx> prod(g.size());
    SpectralField T(g, Rank::tensor);
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            auto ua = U.component(a), ub = U.component(b);
            auto fa = fz.component(a), fb = fz.component(b);
            for (std::size_t i = 0; i < g.size(); ++i) prod[i] = ua[i] * fb[i] + fa[i] * ub[i];
            g.forward(prod.data(), T.component(tensor_index(a, b)).data());
            if (a != b) {
                auto src = T.component(tensor_index(a, b));
                std::copy(src.begin(), src.end(), T.component(tensor_index(b, a)).begin());
            }
        }
    dealias(T);
    return leray_project(tensor_divergence(T));
}

RealField op_B(const RealField& f, const PerturbedOperator& P) {
    return real_part(inverse_transform_complex(op_B(forward_transform(f), P)));
}

SpectralField op_A(const SpectralField& f, const PerturbedOperator& P) {
    SpectralField out = laplacian(f);
    out *= -1.0;
    out += op_B(f, P);
    return out;
}

RealField op_A(const RealField& f, const PerturbedOperator& P) {
    return real_part(inverse_transform_complex(op_A(forward_transform(f), P)));
}

SectorPoint::SectorPoint(cplx l, double g) : lambda(l), gamma(g) {
    require(g > 0.0 && g < 0.5 * pi, ErrorKind::InvalidConfig, "sector angle must lie in (0, pi/2)");
    require(std::abs(l) > 0.0 && std::abs(std::arg(l)) >= g, ErrorKind::InvalidConfig,
            "lambda lies outside the sector |arg| >= gamma");
}

ResolventResult resolvent_apply(const SectorPoint& z, const SpectralField& f, const PerturbedOperator& P,
                                const ResolventOptions& opt) {
    require_same_grid(f.grid(), P.grid());
    require_vector(f);
    require_mean_zero(f, "resolvent input");
    require(opt.tol > 0.0 && opt.max_terms >= 1 && opt.growth_run >= 1, ErrorKind::InvalidConfig,
            "resolvent options need tol > 0 and positive counts");
    const double fn = spectral_l2(f);
    ResolventResult r{scaled_heat(f, z.lambda)};
    r.terms = 1;
    if (fn == 0.0) return r;
    char where[96];
    std::snprintf(where, sizeof where, " at lambda = %.6g%+.6gi", z.lambda.real(), z.lambda.imag());

    SpectralField term = r.g;
    double prev = INFINITY;
    int growth = 0;
    while (true) {
        SpectralField bt = op_B(term, P);
        double res = spectral_l2(bt);
        if (!std::isfinite(res)) fail(ErrorKind::SeriesDiverges, std::string("non-finite series term") + where);
        if (res <= 1e-2 * opt.tol * fn) break;
        growth = res > prev ? growth + 1 : 0;
        if (growth >= opt.growth_run)
            fail(ErrorKind::SeriesDiverges, std::string("Neumann series terms keep growing") + where);
        if (r.terms >= opt.max_terms)
            fail(ErrorKind::NoConvergence, "Neumann series hit " + std::to_string(opt.max_terms) + " terms" + where);
        prev = res;
        term = scaled_heat(bt, z.lambda);
        r.g += term;
        ++r.terms;
    }
    // certificate: (λ - A) g - f
    SpectralField check = r.g;
    check *= z.lambda;
    check -= op_A(r.g, P);
    check -= f;
    r.residual = spectral_l2(check) / fn;
    if (r.residual > opt.tol)
        fail(ErrorKind::NoConvergence, "resolvent residual " + std::to_string(r.residual) + " above tolerance" + where);
    return r;
}

ComplexField resolvent_apply(const SectorPoint& z, const RealField& f, const PerturbedOperator& P,
                             const ResolventOptions& opt) {
    return inverse_transform_complex(resolvent_apply(z, to_complex_spectrum(f), P, opt).g);
}

double ContourSpec::ray_end() const {
    require(t > 0.0 && theta > 0.0 && theta < 0.5 * pi, ErrorKind::InvalidConfig,
            "contour needs t > 0 and theta in (0, pi/2)");
    if (r_max > 0.0) return r_max;
    // exp(-t r cos ϑ) < 1e-16
    return std::max(2.0 / t, 37.0 / (t * std::cos(theta)));
}

ContourSpec ContourSpec::doubled() const {
    ContourSpec c = *this;
    c.ray_nodes *= 2;
    c.arc_nodes *= 2;
    return c;
}

namespace {

struct Node {
    cplx lambda;
    cplx weight;  // includes dλ and e^{-λt}
};

// Upper half of Γ, counterclockwise around the spectrum: in along the ray
// from ∞e^{iϑ} to e^{iϑ}/t, then the arc from angle ϑ to π. The lower half
// (mirror image) is appended when `full`.
std::vector<Node> contour_nodes(const ContourSpec& C, bool full) {
    const double r0 = 1.0 / C.t, r1 = C.ray_end();
    require(C.ray_nodes >= 2 && C.arc_nodes >= 2, ErrorKind::InvalidConfig, "contour needs at least 2 nodes per part");
    std::vector<Node> out;
    // ray, r = r0 e^u, u in [0, log(r1/r0)]
    const Rule& ray = gauss_legendre(C.ray_nodes);
    const double umax = std::log(r1 / r0);
    const cplx dir = std::polar(1.0, C.theta);
    for (std::size_t i = 0; i < ray.x.size(); ++i) {
        double u = 0.5 * umax * (ray.x[i] + 1.0);
        double r = r0 * std::exp(u);
        cplx lam = r * dir;
        // traversed inward: -∫ dλ, dλ = e^{iϑ} r du
        cplx w = -0.5 * umax * ray.w[i] * dir * r * std::exp(-lam * C.t);
        out.push_back({lam, w});
    }
    const Rule& arc = gauss_legendre(C.arc_nodes);
    const double half = 0.5 * (pi - C.theta);
    for (std::size_t i = 0; i < arc.x.size(); ++i) {
        double phi = C.theta + half * (arc.x[i] + 1.0);
        cplx lam = std::polar(r0, phi);
        cplx w = half * arc.w[i] * I * lam * std::exp(-lam * C.t);
        out.push_back({lam, w});
    }
    if (full) {
        std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) out.push_back({std::conj(out[i].lambda), -std::conj(out[i].weight)});
    }
    return out;
}

SpectralField contour_integral(const SpectralField& f, const PerturbedOperator& P, const ContourSpec& C,
                               const ResolventOptions& opt, bool full) {
    // the rays sit at angle ϑ, which must clear the sector used by the resolvent
    SpectralField J(f.grid(), Rank::vector);
    for (const Node& nd : contour_nodes(C, full)) {
        SectorPoint z(nd.lambda, std::min(default_sector_angle, 0.5 * C.theta));
        J.axpy(nd.weight, resolvent_apply(z, f, P, opt).g);
    }
    return J;
}

}  // namespace

RealField semigroup_contour(const RealField& f, const PerturbedOperator& P, const ContourSpec& C,
                            const ResolventOptions& opt) {
    require(C.t > 0.0, ErrorKind::InvalidConfig, "semigroup time must be positive");
    SpectralField F = to_complex_spectrum(f);
    if (!C.use_symmetry) return real_part(semigroup_contour_full(f, P, C, opt));
    SpectralField J = contour_integral(F, P, C, opt, false);
    return imag_part(inverse_transform_complex(J), 1.0 / pi);
}

ComplexField semigroup_contour_full(const RealField& f, const PerturbedOperator& P, const ContourSpec& C,
                                    const ResolventOptions& opt) {
    SpectralField J = contour_integral(to_complex_spectrum(f), P, C, opt, true);
    // (1/2πi) J
    J *= 1.0 / (2.0 * pi * I);
    return inverse_transform_complex(J);
}

namespace {

// φ1(z) = (e^z - 1)/z, φ2(z) = (e^z - 1 - z)/z²
double phi1(double z) {
    if (std::abs(z) < 1e-4) return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
}
double phi2(double z) {
    if (std::abs(z) < 1e-3) return 0.5 + z / 6.0 + z * z / 24.0;
    return (std::expm1(z) - z) / (z * z);
}

}  // namespace

double etd_stability_bound(const PerturbedOperator& P) {
    const Grid& g = P.grid();
    if (P.max_speed() == 0.0) return INFINITY;
    double kmax = std::sqrt(3.0) * (2.0 * pi / g.length()) * (g.n() / 3);
    return 1.0 / (2.0 * P.max_speed() * kmax);
}

RealField semigroup_etd(double t, const RealField& f, const PerturbedOperator& P, double dt) {
    require(t >= 0.0 && dt > 0.0, ErrorKind::InvalidConfig, "etd needs t >= 0 and dt > 0");
    require_same_grid(f.grid(), P.grid());
    const Grid& g = P.grid();
    SpectralField u = to_complex_spectrum(f);
    require_mean_zero(u, "semigroup input");
    if (t == 0.0) return f;
    const int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-12)));
    const double h = t / steps;
    const auto& k2 = g.k2();
    std::vector<double> e(g.size()), p1(g.size()), p2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double z = -k2[i] * h;
        e[i] = std::exp(z);
        p1[i] = h * phi1(z);
        p2[i] = h * phi2(z);
    }
    auto diag = [&](const SpectralField& a, const std::vector<double>& d) {
        SpectralField out(g, a.rank());
        for (int c = 0; c < a.components(); ++c)
            for (std::size_t i = 0; i < g.size(); ++i) out.at(c, i) = d[i] * a.at(c, i);
        return out;
    };
    const double start = std::max(spectral_l2(u), 1e-300);
    const bool linear = P.max_speed() == 0.0;
    for (int n = 0; n < steps; ++n) {
        if (linear) {
            u = diag(u, e);
            continue;
        }
        SpectralField Nu = op_B(u, P);
        Nu *= -1.0;
        SpectralField a = diag(u, e);
        a += diag(Nu, p1);
        SpectralField Na = op_B(a, P);
        Na *= -1.0;
        Na -= Nu;
        a += diag(Na, p2);
        u = std::move(a);
        double nrm = spectral_l2(u);
        if (!std::isfinite(nrm) || nrm > 1e8 * start)
            fail(ErrorKind::Unstable, "etd step " + std::to_string(n + 1) + " blew up (dt = " + std::to_string(h) +
                                          ", bound " + std::to_string(etd_stability_bound(P)) + ")");
    }
    return real_part(inverse_transform_complex(u));
}

std::string ScanResult::csv() const {
    std::string out = "x,value,fitted,window_lo,window_hi\n";
    char line[200];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", x[i], values[i], slope, window_lo,
                      window_hi);
        out += line;
    }
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorKind::InvalidConfig, "slope fit needs two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, ErrorKind::InvalidConfig, "slope fit needs positive data");
        double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

ScanResult finish(std::string quantity, std::vector<double> x, std::vector<double> v, double expected) {
    ScanResult r;
    r.quantity = std::move(quantity);
    r.slope = loglog_slope(x, v);
    r.expected = expected;
    r.window_lo = *std::min_element(x.begin(), x.end());
    r.window_hi = *std::max_element(x.begin(), x.end());
    r.x = std::move(x);
    r.values = std::move(v);
    return r;
}

SectorPoint on_ray(double mag, double angle) {
    require(mag > 0.0, ErrorKind::InvalidConfig, "|lambda| must be positive");
    return SectorPoint(std::polar(mag, angle));
}

void check_order(double a, const char* what) {
    require(std::isfinite(a) && a > -2.0 && a <= 1.0, ErrorKind::InvalidExponents,
            std::string(what) + " must lie in (-2, 1]");
}

std::vector<SpectralField> probe_spectra(const std::vector<RealField>& probes, double pre_order,
                                         std::vector<double>& norms) {
    require(!probes.empty(), ErrorKind::InvalidConfig, "need at least one probe");
    std::vector<SpectralField> out;
    for (const auto& p : probes) {
        SpectralField ph = forward_transform(p);
        require_mean_zero(ph, "probe");
        norms.push_back(vnorm_of(ph));
        require(norms.back() > 0.0, ErrorKind::InvalidConfig, "probe is zero");
        out.push_back(fractional_laplacian(ph, pre_order));
    }
    return out;
}

SpectralField semigroup_spectral(double t, const SpectralField& F, const PerturbedOperator& P,
                                 const SemigroupOptions& opt) {
    RealField f = real_part(inverse_transform_complex(F));
    return forward_transform(apply_semigroup(t, f, P, opt));
}

}  // namespace

ScanResult resolvent_decay_scan(const PerturbedOperator& P, const RealField& f, double angle,
                                const std::vector<double>& magnitudes, const ResolventOptions& opt) {
    SpectralField F = to_complex_spectrum(f);
    std::vector<double> v;
    for (double m : magnitudes) v.push_back(vnorm_of(resolvent_apply(on_ray(m, angle), F, P, opt).g));
    return finish("resolvent", magnitudes, std::move(v), -1.0);
}

ScanResult smoothing_scan(const PerturbedOperator& P, const std::vector<RealField>& probes, double alpha,
                          double sigma, double angle, const std::vector<double>& magnitudes,
                          const ResolventOptions& opt) {
    check_order(alpha, "alpha");
    check_order(sigma, "sigma");
    require(std::abs(sigma - alpha) <= 2.0, ErrorKind::InvalidExponents, "need |sigma - alpha| <= 2");
    std::vector<double> norms;
    auto spectra = probe_spectra(probes, -alpha, norms);
    std::vector<double> v;
    for (double m : magnitudes) {
        SectorPoint z = on_ray(m, angle);
        double best = 0.0;
        for (std::size_t i = 0; i < spectra.size(); ++i) {
            SpectralField g = resolvent_apply(z, spectra[i], P, opt).g;
            best = std::max(best, vnorm_of(fractional_laplacian(g, sigma)) / norms[i]);
        }
        v.push_back(best);
    }
    return finish("smoothing", magnitudes, std::move(v), 0.5 * (sigma - alpha) - 1.0);
}

RealField apply_semigroup(double t, const RealField& f, const PerturbedOperator& P, const SemigroupOptions& opt) {
    require(t > 0.0, ErrorKind::InvalidConfig, "semigroup time must be positive");
    if (opt.method == SemigroupMethod::etd) {
        require(opt.etd_steps >= 1, ErrorKind::InvalidConfig, "etd needs at least one step");
        return semigroup_etd(t, f, P, t / opt.etd_steps);
    }
    ContourSpec C;
    C.t = t;
    C.theta = opt.theta;
    return semigroup_contour(f, P, C, opt.resolvent);
}

ScanResult semigroup_decay_check(const PerturbedOperator& P, const std::vector<RealField>& probes, double alpha,
                                 double sigma, const std::vector<double>& times, const SemigroupOptions& opt) {
    require(std::isfinite(alpha) && std::isfinite(sigma) && std::abs(sigma - alpha) <= 2.0,
            ErrorKind::InvalidExponents, "need |sigma - alpha| <= 2");
    std::vector<double> norms;
    auto spectra = probe_spectra(probes, -alpha, norms);
    const bool minus_one = alpha > sigma;
    std::vector<double> v;
    for (double t : times) {
        double best = 0.0;
        for (std::size_t i = 0; i < spectra.size(); ++i) {
            SpectralField s = semigroup_spectral(t, spectra[i], P, opt);
            if (minus_one) s -= spectra[i];
            best = std::max(best, vnorm_of(fractional_laplacian(s, sigma)) / norms[i]);
        }
        v.push_back(std::pow(t, 0.5 * (sigma - alpha)) * best);
    }
    return finish(minus_one ? "semigroup_minus_identity" : "semigroup", times, std::move(v), 0.0);
}

ScanResult differentiability_check(const PerturbedOperator& P, const std::vector<RealField>& probes, double s,
                                   double sigma, const std::vector<double>& times, const SemigroupOptions& opt) {
    require(std::isfinite(s) && std::isfinite(sigma) && s > 0.0 && s < 1.0 && s - sigma >= 2.0 &&
                s - sigma <= 4.0,
            ErrorKind::InvalidExponents, "need 0 < s < 1 and 2 <= s - sigma <= 4");
    std::vector<double> norms;
    auto spectra = probe_spectra(probes, -s, norms);
    std::vector<SpectralField> Af;
    for (const auto& f : spectra) Af.push_back(op_A(f, P));
    std::vector<double> v;
    for (double t : times) {
        double best = 0.0;
        for (std::size_t i = 0; i < spectra.size(); ++i) {
            SpectralField q = semigroup_spectral(t, spectra[i], P, opt);
            q -= spectra[i];
            q *= 1.0 / t;
            q += Af[i];
            best = std::max(best, vnorm_of(fractional_laplacian(q, sigma)) / norms[i]);
        }
        v.push_back(best);
    }
    return finish("differentiability", times, std::move(v), 0.5 * (s - sigma) - 1.0);
}

}  // namespace critflow
