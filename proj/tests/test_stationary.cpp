#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

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

using Vec = std::array<double, 3>;

double dot3(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// polarisation of single_mode for the wavenumbers used below
Vec mode_direction(std::array<int, 3> m) {
    if (m[1] == 0 && m[2] == 0) return {0.0, 1.0, 0.0};
    double nx = m[1], ny = -m[0], n = std::hypot(nx, ny);
    return {nx / n, ny / n, 0.0};
}

RealField random_solenoidal(const Grid& g, int kmax, std::uint64_t seed) {
    return random_band_limited(g, Rank::vector, kmax, seed, true);
}

}  // namespace

TEST_CASE("u0 from force") {
    Grid g(16, 2 * pi);
    RealField zero(g, Rank::vector);
    CHECK(max_abs(u0_from_force(ForceSpec::explicit_force(zero))) == 0.0);

    RealField v = random_solenoidal(g, 3, 7);
    RealField F = laplacian(v);
    F *= -1.0;
    CHECK(max_abs(u0_from_force(ForceSpec::explicit_force(F)) - v) <= 1e-10 * max_abs(v));

    // single divergence-free mode: -Δ^{-1} is 1/|k|², ℙ is the identity
    std::array<int, 3> m{1, 2, 0};
    RealField Fm = single_mode(g, m, 3.0);
    RealField u = u0_from_force(ForceSpec::explicit_force(Fm));
    double k2 = 5.0;  // L = 2π
    RealField expect = single_mode(g, m, 3.0 / k2);
    CHECK(max_abs(u - expect) <= 1e-13);

    // a gradient is removed entirely
    RealField grad = gradient(random_band_limited(g, Rank::scalar, 3, 9));
    CHECK(max_abs(u0_from_force(grad)) <= 1e-13 * max_abs(grad));

    RealField shifted = Fm;
    for (double& x : shifted.component(2)) x += 0.5;
    expect_kind(ErrorKind::NonZeroMean, [&] { u0_from_force(shifted); });
}

TEST_CASE("bilinear term on a pair of single modes") {
    Grid g(16, 2 * pi);
    RealField zero(g, Rank::vector);
    RealField V = random_solenoidal(g, 3, 11);
    CHECK(max_abs(bilinear_B(zero, V)) == 0.0);

    // U = cos(k1.x) e1, V = cos(k2.x) e2. The product splits onto k± = k1 ± k2:
    //   ∇·(U⊗V)_i = -½ e2_i Σ± (k±·e1) sin(k±.x)
    // and Δ^{-1}ℙ gives ½ (k±·e1)/|k±|² ℙ_{k±} e2 sin(k±.x).
    std::array<int, 3> m1{1, 0, 0}, m2{0, 1, 1};
    Vec e1 = mode_direction(m1), e2 = mode_direction(m2);
    RealField U = single_mode(g, m1), W = single_mode(g, m2);
    RealField B = bilinear_B(U, W);
    RealField expect(g, Rank::vector);
    for (int sign : {1, -1}) {
        Vec k{double(m1[0] + sign * m2[0]), double(m1[1] + sign * m2[1]), double(m1[2] + sign * m2[2])};
        double kk = dot3(k, k);
        double coef = 0.5 * dot3(k, e1) / kk;
        Vec p{};
        for (int i = 0; i < 3; ++i) p[i] = e2[i] - k[i] * dot3(k, e2) / kk;
        for (std::size_t n = 0; n < g.size(); ++n) {
            auto ijk = g.unflat(n);
            double ph = k[0] * g.coord(ijk[0]) + k[1] * g.coord(ijk[1]) + k[2] * g.coord(ijk[2]);
            for (int c = 0; c < 3; ++c) expect.at(c, n) += coef * p[c] * std::sin(ph);
        }
    }
    CHECK(max_abs(expect) > 0.1);
    CHECK(max_abs(B - expect) <= 1e-13);

    // spectral support is exactly {±(k1+k2), ±(k1-k2)}
    SpectralField Bh = forward_transform(B);
    for (std::size_t n = 0; n < g.size(); ++n) {
        auto ijk = g.unflat(n);
        std::array<int, 3> mm{g.mode(ijk[0]), g.mode(ijk[1]), g.mode(ijk[2])};
        bool on = false;
        for (int s1 : {1, -1})
            for (int s2 : {1, -1})
                on = on || (mm[0] == s1 * (m1[0] + s2 * m2[0]) && mm[1] == s1 * (m1[1] + s2 * m2[1]) &&
                            mm[2] == s1 * (m1[2] + s2 * m2[2]));
        if (!on)
            for (int c = 0; c < 3; ++c) CHECK(std::abs(Bh.at(c, n)) <= 1e-14);
    }
    expect_kind(ErrorKind::GridMismatch, [&] { bilinear_B(U, single_mode(Grid(8, 2 * pi), m1)); });
}

TEST_CASE("bilinear term is bilinear and solenoidal") {
    Grid g(16, 2 * pi);
    RealField U = random_solenoidal(g, 3, 21), W = random_solenoidal(g, 3, 22), V = random_solenoidal(g, 3, 23);
    const double a = 1.7, b = -0.6;
    RealField comb = a * U + b * W;
    RealField lhs = bilinear_B(comb, V);
    RealField rhs = a * bilinear_B(U, V) + b * bilinear_B(W, V);
    CHECK(max_abs(lhs - rhs) <= 1e-12 * max_abs(rhs));
    CHECK(divergence_norm(lhs) <= 1e-10);
    for (double m : component_means(lhs)) CHECK(std::abs(m) <= 1e-14 * max_abs(lhs));
}

TEST_CASE("empirical bilinear constant") {
    Grid g32(32, 2 * pi), g48(48, 2 * pi);
    double c32 = calibrate_bilinear_constant(g32);
    double c48 = calibrate_bilinear_constant(g48);
    CHECK(c32 > 0.0);
    CHECK(std::abs(c48 - c32) <= 0.1 * c32);
    // the bound holds on pairs outside the calibration set
    RealField U = random_solenoidal(g32, 3, 31), V = random_solenoidal(g32, 2, 32);
    double lhs = vnorm_operator(bilinear_B(U, V)).value;
    CHECK(lhs <= 2.0 * c32 * vnorm_operator(U).value * vnorm_operator(V).value);
}

TEST_CASE("manufactured force") {
    Grid g(16, 2 * pi);
    RealField zero(g, Rank::vector);
    CHECK(max_abs(manufacture_force(zero).F) == 0.0);

    // u·∇u is a gradient for a Beltrami field, so F = -ΔU*
    RealField b = beltrami(g, 0.8, 1);
    ForceSpec F = manufacture_force(b);
    RealField lap = laplacian(b);
    lap *= -1.0;
    CHECK(max_abs(F.F - lap) <= 1e-12 * max_abs(lap));
    CHECK(F.kind == ForceSpec::Kind::manufactured);
    CHECK(divergence_norm(F.F) <= 1e-10);

    RealField bad = gradient(random_band_limited(g, Rank::scalar, 2, 5));
    expect_kind(ErrorKind::NotSolenoidal, [&] { manufacture_force(bad); });
}

TEST_CASE("zero force converges in one step") {
    Grid g(16, 2 * pi);
    auto r = picard_solve(ForceSpec::explicit_force(RealField(g, Rank::vector)));
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.iterations == 1);
    CHECK(max_abs(r.U) == 0.0);
    CHECK(smallness_report(ForceSpec::explicit_force(RealField(g, Rank::vector)), 0.5).delta == 0.0);
}

TEST_CASE("manufactured Taylor-Green flow is recovered") {
    Grid g(32, 2 * pi);
    for (double amp : {0.1, 0.5, 1.0}) {
        CAPTURE(amp);
        RealField u = taylor_green(g, amp);
        ForceSpec F = manufacture_force(u);
        CHECK(residual(u, F).integral <= 1e-10);
        CHECK(residual(u, F).momentum <= 1e-10);
        auto r = picard_solve(F);
        REQUIRE(r.status == SolveStatus::Converged);
        CHECK(max_abs(r.U - u) <= 1e-8);
        CHECK(r.bound_holds);
        CHECK(r.norm_U <= 2.4 * r.norm_U0);
        CHECK(divergence_norm(r.U) <= 1e-10);
        CHECK(r.residual <= 10 * 1e-10 * r.norm_U0);
        CHECK(r.contraction_ratios.back() < 1.0);
        CHECK_NOTHROW(require_converged(r));
    }
}

TEST_CASE("residual of the linear approximation") {
    Grid g(32, 2 * pi);
    ForceSpec F = ForceSpec::mollified_singular(g, 2.0, g.length() / 16);
    RealField U0 = u0_from_force(F);
    double expect = spectral_l2(forward_transform(bilinear_B(U0, U0)));
    CHECK(std::abs(residual(U0, F).integral - expect) <= 1e-12 * expect);
}

TEST_CASE("amplitude sweep has a contraction crossover") {
    Grid g(32, 2 * pi);
    const double core = g.length() / 16;
    double C = calibrate_bilinear_constant(g);
    std::vector<SolveStatus> status;
    std::vector<double> ratio, delta;
    for (double a : {4.0, 16.0, 64.0, 256.0}) {
        ForceSpec F = ForceSpec::mollified_singular(g, a, core);
        auto r = picard_solve(F);
        status.push_back(r.status);
        ratio.push_back(r.contraction_ratios.back());
        delta.push_back(smallness_report(F, C).delta);
        if (r.status == SolveStatus::Converged) {
            CHECK(r.bound_holds);
            CHECK(r.residual <= 10 * 1e-10 * r.norm_U0);
        }
    }
    CHECK(status.front() == SolveStatus::Converged);
    CHECK(status.back() == SolveStatus::NoContraction);
    auto first_fail = std::find_if(status.begin(), status.end(),
                                   [](SolveStatus s) { return s != SolveStatus::Converged; });
    CHECK(std::all_of(first_fail, status.end(), [](SolveStatus s) { return s != SolveStatus::Converged; }));
    for (std::size_t i = 1; i < ratio.size(); ++i) {
        CHECK(ratio[i] > ratio[i - 1]);
        CHECK(delta[i] > delta[i - 1]);
    }
    expect_kind(ErrorKind::NoContraction, [&] {
        require_converged(picard_solve(ForceSpec::mollified_singular(g, 256.0, core)));
    });
    PicardOptions capped;
    capped.max_iter = 3;
    auto r = picard_solve(ForceSpec::mollified_singular(g, 64.0, core), capped);
    CHECK(r.status == SolveStatus::MaxIter);
    expect_kind(ErrorKind::NoConvergence, [&] { require_converged(r); });
}

TEST_CASE("smallness report is homogeneous") {
    Grid g(32, 2 * pi);
    const double core = g.length() / 16;
    auto a = smallness_report(ForceSpec::mollified_singular(g, 3.0, core), 0.5);
    auto b = smallness_report(ForceSpec::mollified_singular(g, 6.0, core), 0.5);
    CHECK(std::abs(b.delta / a.delta - 2.0) <= 0.2);
    CHECK(a.predicted_contraction == doctest::Approx(4 * 0.5 * a.delta));
}

TEST_CASE("uniqueness in the small ball") {
    Grid g(32, 2 * pi);
    ForceSpec F = ForceSpec::mollified_singular(g, 16.0, g.length() / 16);
    const double tol = 1e-10;
    auto from_u0 = picard_solve(F);
    PicardOptions zero_start;
    zero_start.start = RealField(g, Rank::vector);
    auto from_zero = picard_solve(F, zero_start);
    PicardOptions other_start;
    other_start.start = 1.5 * from_u0.U0 + (0.1 * max_abs(from_u0.U0)) * random_solenoidal(g, 3, 41);
    auto from_other = picard_solve(F, other_start);
    REQUIRE(from_u0.status == SolveStatus::Converged);
    REQUIRE(from_zero.status == SolveStatus::Converged);
    REQUIRE(from_other.status == SolveStatus::Converged);
    double scale = max_abs(from_u0.U);
    CHECK(max_abs(from_zero.U - from_u0.U) <= 10 * tol * scale);
    CHECK(max_abs(from_other.U - from_u0.U) <= 10 * tol * scale);
}

TEST_CASE("scaling covariance") {
    Grid g(32, 2 * pi);
    for (double amp : {0.3, 0.8}) {
        CAPTURE(amp);
        ForceSpec F = manufacture_force(taylor_green(g, amp));
        auto r = picard_solve(F);
        auto rl = picard_solve(ForceSpec::explicit_force(dilate_periodic(F.F, 8.0)));
        REQUIRE(r.status == SolveStatus::Converged);
        REQUIRE(rl.status == SolveStatus::Converged);
        CHECK(max_abs(rl.U - dilate_periodic(r.U, 2.0)) <= 1e-6 * max_abs(r.U));
    }
}

TEST_CASE("iterate log") {
    Grid g(16, 2 * pi);
    auto r = picard_solve(manufacture_force(taylor_green(g, 0.5)));
    std::string csv = r.iterate_log_csv();
    CHECK(csv.rfind("k,vnorm_ball,increment,ratio\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.iterate_norms.size()) + 1);
    CHECK(to_string(SolveStatus::NoContraction) == "NoContraction");
    PicardOptions bad;
    bad.tol = 0.0;
    expect_kind(ErrorKind::InvalidConfig, [&] { picard_solve(manufacture_force(taylor_green(g, 0.5)), bad); });
}
