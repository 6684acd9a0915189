// Acceptance run: one PASS/FAIL line per criterion, at the stated tolerances.
// Usage: acceptance [criterion numbers...]   (default: all)
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "critflow/capacity.hpp"
#include "critflow/characterization.hpp"
#include "critflow/experiment.hpp"
#include "critflow/norms.hpp"
#include "critflow/profiles.hpp"
#include "critflow/spectral.hpp"
#include "critflow/stationary.hpp"
#include "../test_util.hpp"

using namespace critflow;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

// Collects named checks; a criterion passes when all of them do.
struct Checks {
    std::vector<std::string> failed;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    }
    void within(const std::string& what, double value, double lo, double hi) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s=%.4g", what.c_str(), value);
        notes.push_back(buf);
        std::snprintf(buf, sizeof buf, "%s=%.6g not in [%.6g, %.6g]", what.c_str(), value, lo, hi);
        expect(std::isfinite(value) && value >= lo && value <= hi, buf);
    }
    void at_most(const std::string& what, double value, double hi) { within(what, value, -INFINITY, hi); }
    // every summary row of a scenario run
    void summary(const ReportBundle& b, const std::string& prefix = "") {
        for (const auto& r : b.summary) within(prefix + r.check, r.value, r.lower, r.upper);
    }
};

ReportBundle scenario(const std::string& id, const std::vector<std::string>& sets) {
    ExperimentConfig cfg(id);
    for (const auto& s : sets) cfg.set_assignment(s);
    return run_scenario(cfg);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
double r2_of(const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }

// ---------------------------------------------------------------------------

void spectral_core(Checks& c) {
    Grid g(16, 5.0);
    auto f = testutil::random_field(g, Rank::vector, 3);
    c.at_most("roundtrip", max_abs(inverse_transform(forward_transform(f)) - f) / max_abs(f), 1e-12);

    Grid g4(4, 1.7);
    auto s = testutil::random_field(g4, Rank::scalar, 11);
    std::vector<cplx> x(s.data().begin(), s.data().end());
    auto ref = testutil::direct_dft(g4, x, -1);
    auto S = forward_transform(s);
    double err = 0.0;
    for (std::size_t i = 0; i < g4.size(); ++i) err = std::max(err, std::abs(S.at(0, i) - ref[i]));
    c.at_most("dft_n4", err, 1e-12);

    Grid gl(16, 2 * pi);
    auto w = subtract_mean(testutil::random_field(gl, Rank::vector, 4));
    auto Pw = leray_project(w);
    c.at_most("leray_idempotence", max_abs(leray_project(Pw) - Pw) / max_abs(Pw), 1e-12);
    auto PW = forward_transform(Pw);
    c.at_most("leray_divergence", divergence_norm(PW) / spectral_l2(PW), 1e-10);

    auto h = random_band_limited(gl, Rank::scalar, 5, 77);
    RealField acc = h;
    for (int j = 0; j < 3; ++j) acc += riesz_transform(riesz_transform(h, j), j);
    c.at_most("riesz_sum", max_abs(acc) / max_abs(h), 1e-10);
}

void capacity(Checks& c) {
    c.summary(scenario("capacity-suite", {"grid.N=64", "grid.L=1", "capacity.characterization=0"}));
    Grid g(64, 1.0);
    const double h = g.spacing();
    auto A = CompactMask::ball(g, 3 * h, {-4 * h, 0, 0});
    auto B = CompactMask::ball(g, 3 * h, {4 * h, 0, 0});
    auto small = CompactMask::ball(g, 2 * h, {-4 * h, 0, 0});
    CapacityOptions opt;
    const double ca = capacity_compact(A, opt).value, cb = capacity_compact(B, opt).value;
    const double cs = capacity_compact(small, opt).value, cu = capacity_compact(A.united(B), opt).value;
    c.at_most("monotone_small_in_A", cs - ca, opt.tol);
    c.at_most("monotone_A_in_union", ca - cu, opt.tol);
    c.at_most("subadditive", cu - ca - cb, opt.tol);
}

RealField ball_density(const Grid& g, double r, double l) {
    return sample_scalar(g, [&](const Point& x) { return r2_of(x) <= r * r * l * l * (1 + 1e-9) ? 1.0 / (l * l) : 0.0; });
}

void characterization(Checks& c) {
    Grid g(64, 1.0);
    const double h = g.spacing();
    std::vector<std::pair<std::string, std::function<RealField(double)>>> family{
        {"ball_2h", [&](double l) { return ball_density(g, 2 * h, l); }},
        {"ball_4h", [&](double l) { return ball_density(g, 4 * h, l); }},
        {"ball_6h", [&](double l) { return ball_density(g, 6 * h, l); }},
        {"annulus", [&](double l) {
             return sample_scalar(g, [&](const Point& x) {
                 double r = std::sqrt(r2_of(x)) / l;
                 return r >= 3 * h && r <= 6 * h ? 1.0 / (l * l) : 0.0;
             });
         }},
        {"two_balls", [&](double l) {
             return sample_scalar(g, [&](const Point& x) {
                 Point a{x[0] / l - 4 * h, x[1] / l, x[2] / l}, b{x[0] / l + 4 * h, x[1] / l, x[2] / l};
                 return r2_of(a) <= 9 * h * h || r2_of(b) <= 9 * h * h ? 1.0 / (l * l) : 0.0;
             });
         }},
    };
    for (auto& [name, make] : family) {
        CharConstants a = char_constants(make(1.0)), d = char_constants(make(2.0));
        c.within(name + "_max_over_min", a.max() / a.min(), 1.0, 50.0);
        const double drift = std::max({rel(d.A1, a.A1), rel(d.A2, a.A2), rel(d.A3, a.A3), rel(d.A4, a.A4)});
        c.at_most(name + "_dilation_drift", drift, 0.15);
    }
}

void norm_estimators(Checks& c) {
    NormOptions whole;
    whole.domain = PotentialDomain::whole_space;
    Grid g(32, 1.0);
    RealField f = critical_profile(g, 2 * g.spacing(), 0.25);
    double hom = 0.0;
    for (double s : {-3.0, 0.25, 7.5}) {
        RealField sf = f;
        sf *= s;
        hom = std::max({hom, rel(vnorm_ball(sf).value, std::abs(s) * vnorm_ball(f).value),
                        rel(vnorm_operator(sf).value, std::abs(s) * vnorm_operator(f).value)});
    }
    c.at_most("homogeneity", hom, 1e-10);

    Grid g64(64, 1.0);
    double scaling = 0.0;
    for (auto& m : regression_family(g64))
        scaling = std::max(scaling, rel(vnorm_ball(dilate_about_centre(m.field, 2.0)).value, vnorm_ball(m.field).value));
    c.at_most("scaling_invariance", scaling, 0.10);

    double worst = 1.0;
    for (auto& m : regression_family(g)) {
        double op = vnorm_operator(m.field, whole).value, x = xnorm_iterates(m.field, 4, whole).value;
        worst = std::max({worst, op / x, x / op});
    }
    c.within("xnorm_vs_operator", worst, 1.0, 5.0);
}

void stationary(Checks& c) {
    c.summary(scenario("manufactured", {"grid.N=32"}), "manufactured.");
    c.summary(scenario("singular-force", {}), "singular.");
    Grid g(32, 2 * pi);
    double worst = 0.0;
    for (double amp : {0.3, 0.8}) {
        ForceSpec F = manufacture_force(taylor_green(g, amp));
        auto r = picard_solve(F);
        auto rl = picard_solve(ForceSpec::explicit_force(dilate_periodic(F.F, 8.0)));
        require_converged(r);
        require_converged(rl);
        worst = std::max(worst, max_abs(rl.U - dilate_periodic(r.U, 2.0)) / max_abs(r.U));
    }
    c.at_most("scaling_covariance", worst, 1e-6);
}

void resolvent(Checks& c) {
    c.summary(scenario("resolvent-scan", {"grid.N=32", "resolvent.probe_jmax=10",
                                          "resolvent.smoothing_magnitudes=1,2,4,8,16,32,64,128,256"}));
}

void semigroup(Checks& c) { c.summary(scenario("semigroup-suite", {})); }

void stability(Checks& c) {
    c.summary(scenario("stability-sweep", {"grid.N=32", "grid.L=12.566370614359172"}));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void determinism(Checks& c) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
        {"manufactured", {"grid.N=16"}},
        {"singular-force", {"grid.N=16", "singular.amplitudes=4,64"}},
        {"capacity-suite", {"grid.N=32"}},
        {"resolvent-scan", {"grid.N=16", "resolvent.magnitudes=1,4,16", "resolvent.smoothing_magnitudes=1,4,16"}},
        {"semigroup-suite", {"grid.N=16", "semigroup.etd_steps=64", "semigroup.times=0.1"}},
        {"stability-sweep", {"grid.N=16", "stability.dt=0.01", "stability.checkpoints=6"}},
    };
    const fs::path root = fs::temp_directory_path() / ("critflow_acceptance_" + std::to_string(::getpid()));
    for (const auto& [id, sets] : runs) {
        std::size_t files = 0, differing = 0;
        for (const char* pass : {"a", "b"}) write_report(scenario(id, sets), root / pass, false);
        for (auto& e : fs::recursive_directory_iterator(root / "a" / id)) {
            if (!e.is_regular_file()) continue;
            ++files;
            if (slurp(e.path()) != slurp(root / "b" / id / fs::relative(e.path(), root / "a" / id))) ++differing;
        }
        c.notes.push_back(id + ":" + std::to_string(files) + "_files");
        c.expect(files > 1 && differing == 0, id + ": " + std::to_string(differing) + " of " +
                                                  std::to_string(files) + " files differ");
    }
    fs::remove_all(root);
}

struct Criterion {
    int id;
    const char* name;
    void (*run)(Checks&);
};

const Criterion criteria[] = {
    {1, "spectral core", spectral_core},
    {2, "capacity", capacity},
    {3, "characterization comparability", characterization},
    {4, "norm estimators", norm_estimators},
    {5, "stationary solver", stationary},
    {6, "resolvent", resolvent},
    {7, "semigroup", semigroup},
    {8, "stability", stability},
    {9, "determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& cr : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), cr.id) == selected.end()) continue;
        Checks c;
        auto t0 = std::chrono::steady_clock::now();
        try {
            cr.run(c);
        } catch (const std::exception& e) {
            c.failed.push_back(std::string("error: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = c.failed.empty();
        failures += !ok;
        std::printf("criterion %d (%s): %s  [%.0f s]\n", cr.id, cr.name, ok ? "PASS" : "FAIL", secs);
        std::string detail;
        for (const auto& n : (ok ? c.notes : c.failed)) detail += (detail.empty() ? "" : "; ") + n;
        std::printf("    %s\n", detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
