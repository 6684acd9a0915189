#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "critflow/perturbed.hpp"
#include "critflow/profiles.hpp"
#include "critflow/spectral.hpp"
#include "critflow/stationary.hpp"
#include "test_util.hpp"

using namespace critflow;
using namespace testutil;
using std::numbers::pi;

namespace {

template <class Fn>
void expect_kind(ErrorKind kind, Fn&& fn) {
    try {
        fn();
        CHECK_MESSAGE(false, "expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == kind);
    }
}

RealField solenoidal(const Grid& g, int kmax, std::uint64_t seed) {
    return random_band_limited(g, Rank::vector, kmax, seed, true);
}

double max_abs_complex(const ComplexField& z) {
    double m = 0.0;
    for (const auto& v : z.data()) m = std::max(m, std::abs(v));
    return m;
}

double rel_diff(const RealField& a, const RealField& b) { return max_abs(a - b) / max_abs(b); }

PerturbedOperator unperturbed(const Grid& g) { return PerturbedOperator(RealField(g, Rank::vector)); }

}  // namespace

TEST_CASE("frozen field validation") {
    Grid g(8, 2 * pi);
    expect_kind(ErrorKind::NotSolenoidal, [&] { PerturbedOperator(gradient(random_band_limited(g, Rank::scalar, 2, 3))); });
    RealField shifted = taylor_green(g, 1.0);
    for (double& v : shifted.component(0)) v += 1.0;
    expect_kind(ErrorKind::NonZeroMean, [&] { PerturbedOperator{shifted}; });
    expect_kind(ErrorKind::InvalidConfig, [&] { SectorPoint(cplx(1.0, 0.1)); });
    CHECK_NOTHROW(SectorPoint(cplx(1.0, 1.0)));
    CHECK_NOTHROW(SectorPoint(-1.0));
}

TEST_CASE("perturbation operator") {
    Grid g(16, 2 * pi);
    RealField U = taylor_green(g, 0.7);
    PerturbedOperator P(U), P0 = unperturbed(g);
    RealField f = solenoidal(g, 3, 1), h = solenoidal(g, 3, 2);
    CHECK(max_abs(op_B(f, P0)) == 0.0);
    CHECK(max_abs(op_B(RealField(g, Rank::vector), P)) == 0.0);

    RealField lin = op_B(1.3 * f - 0.4 * h, P);
    RealField sum = 1.3 * op_B(f, P) - 0.4 * op_B(h, P);
    CHECK(max_abs(lin - sum) <= 1e-12 * max_abs(sum));
    CHECK(divergence_norm(lin) <= 1e-10);

    // B[U] = ℙ∇·(2 U⊗U) = 2 Δ B(U, U)
    RealField twice = laplacian(bilinear_B(U, U));
    twice *= 2.0;
    CHECK(max_abs(op_B(U, P) - twice) <= 1e-12 * max_abs(twice));

    expect_kind(ErrorKind::GridMismatch, [&] { op_B(solenoidal(Grid(8, 2 * pi), 2, 1), P); });
}

TEST_CASE("full operator") {
    Grid g(16, 2 * pi);
    PerturbedOperator P0 = unperturbed(g);
    RealField m = single_mode(g, {1, 2, 0});
    CHECK(max_abs(op_A(m, P0) - 5.0 * m) <= 1e-12);
    CHECK(max_abs(op_A(RealField(g, Rank::vector), P0)) == 0.0);

    // Re <A f, f> > 0 for small U
    PerturbedOperator P(taylor_green(g, 0.1));
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        RealField f = solenoidal(g, 4, seed);
        RealField Af = op_A(f, P);
        double q = 0.0;
        for (std::size_t i = 0; i < f.data().size(); ++i) q += Af.data()[i] * f.data()[i];
        CHECK(q > 0.0);
    }
    for (const auto& p : probe_family(g, 4)) {
        RealField Ap = op_A(p, P);
        double q = 0.0;
        for (std::size_t i = 0; i < p.data().size(); ++i) q += Ap.data()[i] * p.data()[i];
        CHECK(q > 0.0);
    }
}

TEST_CASE("unperturbed resolvent is the scalar multiplier") {
    Grid g(16, 2 * pi);
    PerturbedOperator P0 = unperturbed(g);
    RealField f = solenoidal(g, 4, 5);
    SpectralField F = forward_transform(f);
    for (cplx lam : {cplx(-1.0, 0.0), cplx(0.0, 10.0), cplx(-3.0, -4.0)}) {
        auto r = resolvent_apply(SectorPoint(lam), F, P0);
        CHECK(r.terms == 1);
        CHECK(r.residual <= 1e-13);
        double err = 0.0;
        for (std::size_t idx = 1; idx < g.size(); ++idx)
            for (int c = 0; c < 3; ++c)
                err = std::max(err, std::abs(r.g.at(c, idx) - F.at(c, idx) / (lam - g.k2()[idx])));
        CHECK(err <= 1e-15);
    }
}

TEST_CASE("perturbed resolvent") {
    Grid g(16, 2 * pi);
    PerturbedOperator P(taylor_green(g, 0.3));
    RealField f = solenoidal(g, 4, 7);
    SpectralField F = forward_transform(f);
    ResolventOptions opt;
    auto r = resolvent_apply(SectorPoint(-1.0), F, P, opt);
    CHECK(r.terms <= 30);
    CHECK(r.residual <= opt.tol);

    // (λ - A) R(λ) f = f, checked independently
    for (cplx lam : {cplx(0.0, 2.0), cplx(-0.5, -0.5), cplx(3.0, 5.0)}) {
        CAPTURE(lam);
        SpectralField G = resolvent_apply(SectorPoint(lam), F, P).g;
        SpectralField back = G;
        back *= lam;
        back -= op_A(G, P);
        back -= F;
        CHECK(spectral_l2(back) <= 1e-10 * spectral_l2(F));
    }

    // R(λ1) - R(λ2) = (λ2 - λ1) R(λ1) R(λ2)
    SectorPoint z1(cplx(0.0, 3.0)), z2(cplx(-2.0, 1.0));
    SpectralField R1 = resolvent_apply(z1, F, P).g;
    SpectralField R2 = resolvent_apply(z2, F, P).g;
    SpectralField R12 = resolvent_apply(z1, R2, P).g;
    SpectralField lhs = R1 - R2;
    R12 *= (z2.lambda - z1.lambda);
    CHECK(spectral_l2(lhs - R12) <= 1e-9 * spectral_l2(lhs));

    // real input, conjugate point: conjugate output
    ComplexField a = resolvent_apply(SectorPoint(cplx(1.0, 2.0)), f, P);
    ComplexField b = resolvent_apply(SectorPoint(cplx(1.0, -2.0)), f, P);
    double asym = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) asym = std::max(asym, std::abs(a.data()[i] - std::conj(b.data()[i])));
    CHECK(asym <= 1e-12 * max_abs_complex(a));
}

TEST_CASE("resolvent failures are reported") {
    Grid g(16, 2 * pi);
    RealField f = solenoidal(g, 3, 9);
    SpectralField F = forward_transform(f);
    PerturbedOperator strong(taylor_green(g, 40.0));
    expect_kind(ErrorKind::SeriesDiverges, [&] { resolvent_apply(SectorPoint(-1.0), F, strong); });
    ResolventOptions capped;
    capped.max_terms = 2;
    PerturbedOperator P(taylor_green(g, 0.3));
    expect_kind(ErrorKind::NoConvergence, [&] { resolvent_apply(SectorPoint(-1.0), F, P, capped); });
    RealField shifted = f;
    for (double& v : shifted.component(1)) v += 0.2;
    expect_kind(ErrorKind::NonZeroMean, [&] { resolvent_apply(SectorPoint(-1.0), shifted, P); });
}

TEST_CASE("resolvent decay along rays") {
    const std::vector<double> big{16, 32, 64, 128, 256};
    const std::vector<double> all{1, 2, 4, 8, 16, 32, 64, 128, 256};
    Grid g(16, 2 * pi);
    RealField m1 = single_mode(g, {1, 0, 0});
    auto exact = resolvent_decay_scan(unperturbed(g), m1, pi / 2, big);
    CHECK(exact.slope == doctest::Approx(-1.0).epsilon(0.01));

    // a box large enough that the torus gap sits well below |λ| = 1
    Grid wide(16, 8 * pi);
    PerturbedOperator P(taylor_green(wide, 0.05));
    RealField f = single_mode(wide, {1, 1, 0});
    for (double angle : {3 * pi / 4, -3 * pi / 4}) {
        auto scan = resolvent_decay_scan(P, f, angle, all);
        CHECK(std::abs(scan.slope + 1.0) <= 0.1);
    }
    auto top = resolvent_decay_scan(P, f, pi / 2, {128, 256});
    CHECK(std::abs(top.values[1] / top.values[0] - 0.5) <= 0.05);
    CHECK(top.csv().rfind("x,value,fitted,window_lo,window_hi\n", 0) == 0);
}

TEST_CASE("resolvent smoothing exponents") {
    Grid g(16, 2 * pi);
    auto probes = probe_family(g, 5);
    const std::vector<double> window{1, 2, 4, 8, 16, 32, 64};
    PerturbedOperator P0 = unperturbed(g), P(taylor_green(g, 0.2));
    auto same = smoothing_scan(P, probes, 0.0, 0.0, pi / 2, window);
    CHECK(std::abs(same.slope + 1.0) <= 0.15);
    auto half = smoothing_scan(P0, probes, 0.0, 1.0, pi / 2, window);
    CHECK(std::abs(half.slope + 0.5) <= 0.02);
    for (auto [a, s] : {std::pair{0.0, 1.0}, std::pair{0.0, 0.5}, std::pair{-0.5, 0.5}}) {
        CAPTURE(a);
        CAPTURE(s);
        auto scan = smoothing_scan(P, probes, a, s, pi / 2, window);
        CHECK(std::abs(scan.slope - scan.expected) <= 0.15);
        auto shifted = smoothing_scan(P, probes, a - 0.2, s - 0.2, pi / 2, window);
        CHECK(std::abs(shifted.slope - scan.slope) <= 0.05);
    }
    expect_kind(ErrorKind::InvalidExponents, [&] { smoothing_scan(P0, probes, -1.5, 1.0, pi / 2, window); });
}

TEST_CASE("unperturbed contour semigroup is the heat multiplier") {
    Grid g(16, 2 * pi);
    PerturbedOperator P0 = unperturbed(g);
    RealField f = solenoidal(g, 4, 11);
    for (double t : {1e-3, 0.1, 1.0}) {
        CAPTURE(t);
        ContourSpec C;
        C.t = t;
        SpectralField F = forward_transform(f);
        for (std::size_t idx = 0; idx < g.size(); ++idx)
            for (int c = 0; c < 3; ++c) F.at(c, idx) *= std::exp(-g.k2()[idx] * t);
        RealField heat = inverse_transform(F);
        CHECK(rel_diff(semigroup_contour(f, P0, C), heat) <= 1e-8);
        CHECK(rel_diff(semigroup_etd(t, f, P0, t / 3), heat) <= 1e-13);
    }
}

TEST_CASE("contour semigroup with a perturbation") {
    Grid g(16, 2 * pi);
    PerturbedOperator P(taylor_green(g, 0.2));
    RealField f = solenoidal(g, 3, 13);
    ContourSpec C;
    C.t = 0.1;
    RealField s = semigroup_contour(f, P, C);
    CHECK(rel_diff(semigroup_contour(f, P, C.doubled()), s) <= 1e-8);

    ContourSpec steep = C;
    steep.theta = 5 * pi / 12;
    CHECK(rel_diff(semigroup_contour(f, P, steep), s) <= 1e-7);

    ComplexField full = semigroup_contour_full(f, P, C);
    double imag = 0.0;
    for (const auto& v : full.data()) imag = std::max(imag, std::abs(v.imag()));
    CHECK(imag <= 1e-8 * max_abs(s));
    RealField re(g, Rank::vector);
    for (std::size_t i = 0; i < re.data().size(); ++i) re.data()[i] = full.data()[i].real();
    CHECK(rel_diff(re, s) <= 1e-10);

    ContourSpec C2 = C;
    C2.t = 0.2;
    RealField twice = semigroup_contour(s, P, C);
    CHECK(rel_diff(twice, semigroup_contour(f, P, C2)) <= 1e-8);

    ContourSpec tiny;
    tiny.t = 1e-4;
    // S(t) f = f - t A f + O(t²)
    RealField near = semigroup_contour(f, P, tiny);
    RealField Af = op_A(f, P);
    CHECK(max_abs(near - f) <= 1.01 * tiny.t * max_abs(Af));
    CHECK(max_abs(near - f + tiny.t * Af) <= tiny.t * tiny.t * max_abs(op_A(Af, P)));
    RealField low = single_mode(g, {1, 0, 0});
    CHECK(max_abs(semigroup_contour(low, unperturbed(g), tiny) - low) <= 1e-4 * max_abs(low));
}

TEST_CASE("contour and exponential integrator agree") {
    Grid g(16, 2 * pi);
    PerturbedOperator P(taylor_green(g, 0.2));
    RealField f = solenoidal(g, 3, 17);
    for (double t : {0.1, 0.5}) {
        CAPTURE(t);
        ContourSpec C;
        C.t = t;
        RealField ref = semigroup_contour(f, P, C);
        CHECK(rel_diff(semigroup_etd(t, f, P, t / 512), ref) <= 1e-6);
    }
}

TEST_CASE("exponential integrator is second order") {
    Grid g(16, 2 * pi);
    PerturbedOperator P(taylor_green(g, 0.5));
    RealField f = solenoidal(g, 3, 19);
    const double t = 0.2;
    RealField fine = semigroup_etd(t, f, P, t / 256);
    double e1 = max_abs(semigroup_etd(t, f, P, t / 16) - fine);
    double e2 = max_abs(semigroup_etd(t, f, P, t / 32) - fine);
    CHECK(std::abs(e1 / e2 - 4.0) <= 1.2);
    CHECK(etd_stability_bound(P) > 0.0);
    CHECK(std::isinf(etd_stability_bound(unperturbed(g))));

    PerturbedOperator wild(taylor_green(g, 200.0));
    expect_kind(ErrorKind::Unstable, [&] { semigroup_etd(2.0, f, wild, 0.05); });
}

TEST_CASE("semigroup decay exponents") {
    SemigroupOptions exact;
    exact.method = SemigroupMethod::etd;
    exact.etd_steps = 1;
    {
        Grid g(32, 2 * pi);
        PerturbedOperator P0 = unperturbed(g);
        auto probes = probe_family(g, 15);
        const std::vector<double> times{0.00625, 0.0125, 0.025, 0.05, 0.1};
        auto smooth = semigroup_decay_check(P0, probes, 0.0, 1.0, times, exact);
        CHECK(std::abs(smooth.slope) <= 0.15);
        auto growth = semigroup_decay_check(P0, probes, 1.0, 0.0, times, exact);
        CHECK(std::abs(growth.slope) <= 0.15);
        CHECK(growth.quantity == "semigroup_minus_identity");
    }
    Grid g(16, 2 * pi);
    PerturbedOperator P(taylor_green(g, 0.2));
    auto probes = probe_family(g, 5);
    const std::vector<double> times{0.0125, 0.025, 0.05, 0.1};
    SemigroupOptions etd;
    etd.method = SemigroupMethod::etd;
    etd.etd_steps = 32;
    for (auto [a, s] : {std::pair{0.0, 0.0}, std::pair{-0.5, 0.5}, std::pair{1.0, 0.0}}) {
        CAPTURE(a);
        CAPTURE(s);
        CHECK(std::abs(semigroup_decay_check(P, probes, a, s, times, etd).slope) <= 0.15);
    }
}

TEST_CASE("differentiability exponents") {
    SemigroupOptions exact;
    exact.method = SemigroupMethod::etd;
    exact.etd_steps = 1;
    {
        Grid g(32, 2 * pi);
        PerturbedOperator P0 = unperturbed(g);
        auto probes = probe_family(g, 15);
        const std::vector<double> times{0.00625, 0.0125, 0.025, 0.05, 0.1};
        for (double sigma : {-1.5, -2.5, -3.5}) {
            CAPTURE(sigma);
            auto r = differentiability_check(P0, probes, 0.5, sigma, times, exact);
            CHECK(std::abs(r.slope - r.expected) <= 0.2);
        }
    }
    Grid g(16, 2 * pi);
    PerturbedOperator P(taylor_green(g, 0.2));
    auto probes = probe_family(g, 5);
    SemigroupOptions etd;
    etd.method = SemigroupMethod::etd;
    etd.etd_steps = 32;
    auto r = differentiability_check(P, probes, 0.5, -3.5, {0.005, 0.01, 0.02, 0.04, 0.08}, etd);
    CHECK(std::abs(r.slope - 1.0) <= 0.2);
    expect_kind(ErrorKind::InvalidExponents, [&] { differentiability_check(P, probes, 0.5, -1.0, {0.01, 0.02}); });
}
