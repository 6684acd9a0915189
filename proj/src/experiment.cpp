#include "critflow/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "critflow/capacity.hpp"
#include "critflow/characterization.hpp"
#include "critflow/io.hpp"
#include "critflow/perturbed.hpp"
#include "critflow/profiles.hpp"
#include "critflow/spectral.hpp"
#include "critflow/stability.hpp"
#include "critflow/stationary.hpp"

#ifndef CRITFLOW_VERSION
#define CRITFLOW_VERSION "unknown"
#endif

namespace critflow {

namespace {

constexpr double pi = std::numbers::pi;

enum class Type { integer, real, reals, word, words, seed, path };

struct KeyInfo {
    const char* key;
    Type type;
    const char* value;
    std::vector<std::string> choices = {};  // word / words only
};

const std::vector<KeyInfo>& registry() {
    static const std::vector<KeyInfo> keys{
        {"seed", Type::seed, "1"},
        {"grid.N", Type::integer, "32"},
        {"grid.L", Type::real, "6.283185307179586"},
        {"force.kind", Type::word, "taylor_green", {"taylor_green", "beltrami", "random", "mollified_singular"}},
        {"force.amplitude", Type::real, "0.1"},
        {"force.core", Type::real, "0"},
        {"force.kmax", Type::integer, "3"},
        {"picard.tol", Type::real, "1e-10"},
        {"picard.max_iter", Type::integer, "200"},
        {"picard.bound_slack", Type::real, "0.2"},
        {"manufactured.max_error", Type::real, "1e-8"},
        {"singular.amplitudes", Type::reals, "4,16,64,256"},
        {"capacity.radius", Type::real, "0"},
        {"capacity.mask", Type::path, ""},
        {"capacity.tol", Type::real, "1e-8"},
        {"capacity.ball_tol", Type::real, "0.1"},
        {"capacity.ratio_tol", Type::real, "0.1"},
        {"capacity.characterization", Type::integer, "1"},
        {"capacity.comparability", Type::real, "50"},
        {"frozen.amplitude", Type::real, "0.05"},
        {"resolvent.tol", Type::real, "1e-10"},
        {"resolvent.max_terms", Type::integer, "200"},
        {"resolvent.angles", Type::reals, "2.356194490192345,-2.356194490192345"},
        {"resolvent.magnitudes", Type::reals, "1,2,4,8,16,32,64,128,256"},
        {"resolvent.decay_tol", Type::real, "0.1"},
        {"resolvent.certificate", Type::real, "1e-8"},
        {"resolvent.pairs", Type::words, "0:1,0:0.5,-0.5:0.5"},
        {"resolvent.smoothing_L", Type::real, "6.283185307179586"},
        {"resolvent.smoothing_angle", Type::real, "1.5707963267948966"},
        {"resolvent.smoothing_magnitudes", Type::reals, "1,2,4,8,16,32,64"},
        {"resolvent.probe_jmax", Type::integer, "5"},
        {"resolvent.smoothing_tol", Type::real, "0.15"},
        {"semigroup.times", Type::reals, "0.1,0.5"},
        {"semigroup.theta", Type::real, "1.1780972450961724"},
        {"semigroup.theta_alt", Type::real, "1.3089969389957472"},
        {"semigroup.etd_steps", Type::integer, "512"},
        {"semigroup.heat_tol", Type::real, "1e-8"},
        {"semigroup.etd_tol", Type::real, "1e-6"},
        {"semigroup.theta_tol", Type::real, "1e-7"},
        {"semigroup.composition_tol", Type::real, "1e-8"},
        {"semigroup.decay_pairs", Type::words, "0:0,-0.5:0.5,1:0"},
        {"semigroup.differentiability", Type::word, "0.5:-3.5"},
        {"stability.epsilons", Type::reals, "0.01,0.005"},
        {"stability.dt", Type::real, "0.005"},
        {"stability.sigmas", Type::reals, "0,0.25,0.5,0.75"},
        {"stability.alphas", Type::reals, "-1,-0.5,0"},
        {"stability.sigma0", Type::real, "0.75"},
        {"stability.sigma1", Type::real, "0.25"},
        {"stability.window_lo", Type::real, "0"},
        {"stability.window_hi", Type::real, "0"},
        {"stability.horizon", Type::real, "0"},
        {"stability.checkpoints", Type::integer, "16"},
        {"stability.schemes", Type::words, "perturbed_semigroup,heat_duhamel", {"perturbed_semigroup", "heat_duhamel"}},
        {"stability.profile", Type::word, "broadband", {"broadband", "beltrami"}},
        {"stability.krylov_tol", Type::real, "1e-12"},
        {"stability.scheme_tol", Type::real, "1e-5"},
        {"stability.exponent_tol", Type::real, "0.15"},
        {"stability.ratio_tol", Type::real, "0.25"},
        {"stability.calibration_slack", Type::real, "2"},
        {"stability.snapshots", Type::integer, "1"},
    };
    return keys;
}

struct Scenario {
    std::string id;
    std::string description;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::function<void(const ExperimentConfig&, ReportBundle&)> run;
};

const std::vector<Scenario>& scenarios();

const KeyInfo* find_key(const std::string& key) {
    for (const auto& k : registry())
        if (key == k.key) return &k;
    return nullptr;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    fail(ErrorKind::InvalidConfig, "key '" + key + "' = '" + value + "': " + why);
}

double parse_real(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        bad_value(key, s, "not a number");
    }
    if (used != s.size() || !std::isfinite(v)) bad_value(key, s, "not a finite number");
    return v;
}

long long parse_int(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        bad_value(key, s, "not an integer");
    }
    if (used != s.size()) bad_value(key, s, "not an integer");
    return v;
}

void check_value(const KeyInfo& k, const std::string& v) {
    switch (k.type) {
        case Type::integer: parse_int(k.key, v); break;
        case Type::real: parse_real(k.key, v); break;
        case Type::reals:
            if (split(v, ',').empty()) bad_value(k.key, v, "empty list");
            for (const auto& p : split(v, ',')) parse_real(k.key, p);
            break;
        case Type::word:
        case Type::words: {
            auto parts = k.type == Type::word ? std::vector<std::string>{v} : split(v, ',');
            if (parts.empty() || parts[0].empty()) bad_value(k.key, v, "empty value");
            if (!k.choices.empty())
                for (const auto& p : parts)
                    if (std::find(k.choices.begin(), k.choices.end(), p) == k.choices.end())
                        bad_value(k.key, v, "unknown choice '" + p + "'");
            break;
        }
        case Type::seed:
            if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
                bad_value(k.key, v, "seed must be an unsigned integer");
            try {
                (void)std::stoull(v);
            } catch (const std::exception&) {
                bad_value(k.key, v, "seed does not fit in 64 bits");
            }
            break;
        case Type::path: break;
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        std::string what = e.what();
        std::string prefix = std::string(to_string(e.kind())) + ": ";
        if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
        throw Error(e.kind(), stage + ": " + what);
    }
}

// quantity,value table used by several scenarios
struct Table {
    std::string header;
    std::string body;

    explicit Table(std::string h) : header(std::move(h)) {}
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) body += (i ? "," : "") + cells[i];
        body += "\n";
    }
    std::string csv() const { return header + "\n" + body; }
};

Grid scenario_grid(const ExperimentConfig& cfg) { return Grid(cfg.integer("grid.N"), cfg.real("grid.L")); }

RealField make_flow(const ExperimentConfig& cfg, const Grid& g) {
    const std::string kind = cfg.get("force.kind");
    const double amp = cfg.real("force.amplitude");
    if (kind == "taylor_green") return taylor_green(g, amp);
    if (kind == "beltrami") return beltrami(g, amp);
    if (kind == "random") {
        RealField u = random_band_limited(g, Rank::vector, cfg.integer("force.kmax"), cfg.seed(), true);
        u *= amp / max_abs(pointwise_magnitude(u));
        return u;
    }
    fail(ErrorKind::InvalidConfig, "force.kind '" + kind + "' does not name a manufactured flow");
}

double core_of(const ExperimentConfig& cfg, const Grid& g) {
    double c = cfg.real("force.core");
    return c > 0.0 ? c : g.length() / 16;
}

ForceSpec make_force(const ExperimentConfig& cfg, const Grid& g) {
    if (cfg.get("force.kind") == "mollified_singular")
        return ForceSpec::mollified_singular(g, cfg.real("force.amplitude"), core_of(cfg, g));
    return manufacture_force(make_flow(cfg, g));
}

PicardOptions picard_options(const ExperimentConfig& cfg) {
    PicardOptions o;
    o.tol = cfg.real("picard.tol");
    o.max_iter = cfg.integer("picard.max_iter");
    o.bound_slack = cfg.real("picard.bound_slack");
    return o;
}

ResolventOptions resolvent_options(const ExperimentConfig& cfg) {
    ResolventOptions o;
    o.tol = cfg.real("resolvent.tol");
    o.max_terms = cfg.integer("resolvent.max_terms");
    return o;
}

StabilityConfig stability_config(const ExperimentConfig& cfg) {
    StabilityConfig s;
    s.sigma0 = cfg.real("stability.sigma0");
    s.sigma1 = cfg.real("stability.sigma1");
    s.sigmas = cfg.reals("stability.sigmas");
    s.alphas = cfg.reals("stability.alphas");
    s.dt = cfg.real("stability.dt");
    s.window_lo = cfg.real("stability.window_lo");
    s.window_hi = cfg.real("stability.window_hi");
    s.horizon = cfg.real("stability.horizon");
    s.checkpoints = cfg.integer("stability.checkpoints");
    s.krylov_tol = cfg.real("stability.krylov_tol");
    s.scheme_tol = cfg.real("stability.scheme_tol");
    s.epsilon = cfg.reals("stability.epsilons").front();
    return s;
}

std::pair<double, double> parse_pair(const std::string& p) {
    auto c = p.find(':');
    if (c == std::string::npos) bad_value("pair", p, "expected a:b");
    return {parse_real("pair", p.substr(0, c)), parse_real("pair", p.substr(c + 1))};
}

// ---- scenarios -------------------------------------------------------------

void run_manufactured(const ExperimentConfig& cfg, ReportBundle& b) {
    Grid g = scenario_grid(cfg);
    RealField u_star = staged("force", [&] { return make_flow(cfg, g); });
    ForceSpec F = staged("force", [&] { return manufacture_force(u_star); });
    b.fields.emplace_back("u_star.vfld", u_star);
    b.fields.emplace_back("force.vfld", F.F);
    StationarySolveResult r = staged("solve", [&] {
        StationarySolveResult s = picard_solve(F, picard_options(cfg));
        b.tables.emplace_back("iterates.csv", s.iterate_log_csv());
        require_converged(s);
        return s;
    });
    b.fields.emplace_back("U.vfld", r.U);
    Residual res = residual(r.U, F);
    const double err = max_abs(r.U - u_star);
    const double bound = r.norm_U / r.norm_U0;
    Table t("quantity,value");
    t.row({"max_error", fmt(err)});
    t.row({"norm_U", fmt(r.norm_U)});
    t.row({"norm_U0", fmt(r.norm_U0)});
    t.row({"bound_ratio", fmt(bound)});
    t.row({"residual_integral", fmt(res.integral)});
    t.row({"residual_momentum", fmt(res.momentum)});
    t.row({"iterations", std::to_string(r.iterations)});
    b.tables.emplace_back("solution.csv", t.csv());
    b.expect("max_error", err, 0.0, cfg.real("manufactured.max_error"), "solution.csv:max_error");
    b.expect("bound_ratio", bound, 0.0, 2.0 * (1.0 + cfg.real("picard.bound_slack")), "solution.csv:bound_ratio");
}

void run_singular_force(const ExperimentConfig& cfg, ReportBundle& b) {
    Grid g = scenario_grid(cfg);
    const double core = core_of(cfg, g);
    b.manifest.emplace_back("resolved.force.core", fmt(core));
    const double C = staged("calibration", [&] { return calibrate_bilinear_constant(g); });
    std::vector<double> amps = cfg.reals("singular.amplitudes");
    std::sort(amps.begin(), amps.end());
    Table sweep("amplitude,delta,predicted_contraction,status,iterations,norm_U,norm_U0,bound_holds,last_ratio");
    Table norms("amplitude," + NormReport::csv_header());
    bool failed_once = false, monotone = true;
    int bound_failures = 0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const std::string stage = "amplitude " + fmt(amps[i]);
        ForceSpec F = staged(stage, [&] { return ForceSpec::mollified_singular(g, amps[i], core); });
        SmallnessReport s = staged(stage, [&] { return smallness_report(F, C); });
        StationarySolveResult r = staged(stage, [&] { return picard_solve(F, picard_options(cfg)); });
        const bool ok = r.status == SolveStatus::Converged;
        if (ok && failed_once) monotone = false;
        if (!ok) failed_once = true;
        if (ok && !r.bound_holds) ++bound_failures;
        double last = r.contraction_ratios.empty() ? 0.0 : r.contraction_ratios.back();
        sweep.row({fmt(amps[i]), fmt(s.delta), fmt(s.predicted_contraction), to_string(r.status),
                   std::to_string(r.iterations), fmt(r.norm_U), fmt(r.norm_U0), ok && r.bound_holds ? "1" : "0",
                   fmt(last)});
        if (ok) {
            b.fields.emplace_back("U_" + std::to_string(i) + ".vfld", r.U);
            for (Estimator e : {Estimator::ball_sup, Estimator::operator_power}) {
                NormReport n = staged(stage, [&] { return vnorm_alpha(r.U, 0.0, e); });
                norms.body += fmt(amps[i]) + "," + n.csv_row() + "\n";
            }
        }
    }
    b.tables.emplace_back("sweep.csv", sweep.csv());
    b.tables.emplace_back("norms.csv", norms.csv());
    Table t("quantity,value");
    t.row({"bilinear_constant", fmt(C)});
    t.row({"crossover_monotone", monotone ? "1" : "0"});
    t.row({"bound_failures", std::to_string(bound_failures)});
    b.tables.emplace_back("crossover.csv", t.csv());
    b.expect("crossover_monotone", monotone ? 1.0 : 0.0, 1.0, 1.0, "crossover.csv:crossover_monotone");
    b.expect("bound_failures", bound_failures, 0.0, 0.0, "crossover.csv:bound_failures");
}

void run_capacity_suite(const ExperimentConfig& cfg, ReportBundle& b) {
    Grid g = scenario_grid(cfg);
    const double r = cfg.real("capacity.radius") > 0.0 ? cfg.real("capacity.radius") : g.length() / 8;
    b.manifest.emplace_back("resolved.capacity.radius", fmt(r));
    CapacityOptions opt;
    opt.tol = cfg.real("capacity.tol");
    Table t("set,radius,capacity,analytic,iterations,residual");
    auto solve = [&](const std::string& name, const CompactMask& K, double radius) {
        CapacityResult c = staged("capacity " + name, [&] { return capacity_compact(K, opt); });
        t.row({name, radius > 0 ? fmt(radius) : "", fmt(c.value), radius > 0 ? fmt(capacity_ball(radius).value) : "",
               std::to_string(c.iterations), fmt(c.residual)});
        return c.value;
    };
    const double big = solve("ball", CompactMask::ball(g, r), r);
    const double small = solve("half_ball", CompactMask::ball(g, r / 2), r / 2);
    if (!cfg.get("capacity.mask").empty()) {
        CompactMask K = staged("mask", [&] { return load_mask(cfg.get("capacity.mask"), g.length()); });
        require_same_grid(K.grid(), g);
        solve("mask", K, 0.0);
    }
    b.tables.emplace_back("capacity.csv", t.csv());
    Table q("quantity,value");
    const double ball_ratio = big / capacity_ball(r).value;
    const double dilation = big / small;
    q.row({"ball_ratio", fmt(ball_ratio)});
    q.row({"dilation_ratio", fmt(dilation)});
    q.row({"monotone_gap", fmt(big - small)});

    if (cfg.integer("capacity.characterization") != 0) {
        const double h = g.spacing();
        auto ball_density = [&](double rad) {
            return sample_scalar(g, [&](const Point& x) {
                return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= rad * rad * (1 + 1e-9) ? 1.0 : 0.0;
            });
        };
        std::vector<std::pair<std::string, RealField>> family;
        family.emplace_back("ball_2h", ball_density(2 * h));
        family.emplace_back("ball_4h", ball_density(4 * h));
        family.emplace_back("ball_6h", ball_density(6 * h));
        family.emplace_back("annulus", sample_scalar(g, [&](const Point& x) {
                                double rr = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                                return rr >= 3 * h && rr <= 6 * h ? 1.0 : 0.0;
                            }));
        family.emplace_back("two_balls", sample_scalar(g, [&](const Point& x) {
                                double a = (x[0] - 4 * h) * (x[0] - 4 * h) + x[1] * x[1] + x[2] * x[2];
                                double c = (x[0] + 4 * h) * (x[0] + 4 * h) + x[1] * x[1] + x[2] * x[2];
                                return a <= 9 * h * h || c <= 9 * h * h ? 1.0 : 0.0;
                            }));
        Table ch("density,A1,A2,A3,A4,max_over_min");
        double worst = 0.0;
        for (auto& [name, nu] : family) {
            CharConstants c = staged("characterization " + name, [&] { return char_constants(nu); });
            double ratio = c.max() / c.min();
            worst = std::max(worst, ratio);
            ch.row({name, fmt(c.A1), fmt(c.A2), fmt(c.A3), fmt(c.A4), fmt(ratio)});
        }
        b.tables.emplace_back("characterization.csv", ch.csv());
        q.row({"worst_comparability", fmt(worst)});
        b.expect("worst_comparability", worst, 1.0, cfg.real("capacity.comparability"),
                 "summary_capacity.csv:worst_comparability");
    }
    b.tables.emplace_back("summary_capacity.csv", q.csv());
    const double bt = cfg.real("capacity.ball_tol"), rt = cfg.real("capacity.ratio_tol");
    b.expect("ball_ratio", ball_ratio, 1.0 - bt, 1.0 + bt, "summary_capacity.csv:ball_ratio");
    b.expect("dilation_ratio", dilation, 2.0 * (1.0 - rt), 2.0 * (1.0 + rt), "summary_capacity.csv:dilation_ratio");
    b.expect("monotone_gap", big - small, -opt.tol, INFINITY, "summary_capacity.csv:monotone_gap");
}

void run_resolvent_scan(const ExperimentConfig& cfg, ReportBundle& b) {
    Grid g = scenario_grid(cfg);
    const ResolventOptions ropt = resolvent_options(cfg);
    PerturbedOperator P = staged("operator", [&] { return PerturbedOperator(taylor_green(g, cfg.real("frozen.amplitude"))); });
    RealField f = single_mode(g, {1, 1, 0});
    const auto mags = cfg.reals("resolvent.magnitudes");
    const double tol = cfg.real("resolvent.decay_tol");
    Table cert("angle,magnitude,terms,residual");
    double worst_cert = 0.0;
    const auto angles = cfg.reals("resolvent.angles");
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const std::string name = "decay_" + std::to_string(i) + ".csv";
        ScanResult s = staged("decay scan", [&] { return resolvent_decay_scan(P, f, angles[i], mags, ropt); });
        b.tables.emplace_back(name, s.csv());
        b.expect("decay_slope_" + std::to_string(i), s.slope, -1.0 - tol, -1.0 + tol, name + ":fitted");
        SpectralField fh = forward_transform(f);
        for (double m : mags) {
            ResolventResult r = staged("certificate", [&] {
                return resolvent_apply(SectorPoint(std::polar(m, angles[i])), fh, P, ropt);
            });
            worst_cert = std::max(worst_cert, r.residual);
            cert.row({fmt(angles[i]), fmt(m), std::to_string(r.terms), fmt(r.residual)});
        }
    }
    b.tables.emplace_back("certificates.csv", cert.csv());
    b.expect("worst_certificate", worst_cert, 0.0, cfg.real("resolvent.certificate"), "certificates.csv:residual");

    Grid gs(g.n(), cfg.real("resolvent.smoothing_L"));
    PerturbedOperator Ps = staged("operator", [&] { return PerturbedOperator(taylor_green(gs, cfg.real("frozen.amplitude"))); });
    auto probes = probe_family(gs, cfg.integer("resolvent.probe_jmax"));
    const double st = cfg.real("resolvent.smoothing_tol");
    const auto pairs = cfg.words("resolvent.pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [a, s] = parse_pair(pairs[i]);
        const std::string name = "smoothing_" + std::to_string(i) + ".csv";
        ScanResult sc = staged("smoothing scan " + pairs[i], [&] {
            return smoothing_scan(Ps, probes, a, s, cfg.real("resolvent.smoothing_angle"),
                                  cfg.reals("resolvent.smoothing_magnitudes"), ropt);
        });
        b.tables.emplace_back(name, sc.csv());
        b.expect("smoothing_slope_" + pairs[i], sc.slope, sc.expected - st, sc.expected + st, name + ":fitted");
    }
}

double rel_max(const RealField& a, const RealField& b) { return max_abs(a - b) / max_abs(b); }

void run_semigroup_suite(const ExperimentConfig& cfg, ReportBundle& b) {
    Grid g = scenario_grid(cfg);
    const ResolventOptions ropt = resolvent_options(cfg);
    PerturbedOperator P0(RealField(g, Rank::vector));
    PerturbedOperator P = staged("operator", [&] { return PerturbedOperator(taylor_green(g, cfg.real("frozen.amplitude"))); });
    RealField f = random_band_limited(g, Rank::vector, 3, cfg.seed(), true);
    ContourSpec C;
    C.theta = cfg.real("semigroup.theta");
    const auto times = cfg.reals("semigroup.times");
    Table t("check,t,value");

    auto heat = [&](double time) {
        SpectralField F = forward_transform(f);
        const auto& k2 = g.k2();
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < g.size(); ++i) F.at(c, i) *= std::exp(-k2[i] * time);
        return inverse_transform(F);
    };
    double worst_heat = 0.0, worst_etd = 0.0;
    for (double time : times) {
        C.t = time;
        double e0 = staged("heat check", [&] { return rel_max(semigroup_contour(f, P0, C, ropt), heat(time)); });
        worst_heat = std::max(worst_heat, e0);
        t.row({"contour_vs_heat", fmt(time), fmt(e0)});
        RealField S = staged("contour", [&] { return semigroup_contour(f, P, C, ropt); });
        RealField E = staged("etd", [&] { return semigroup_etd(time, f, P, time / cfg.integer("semigroup.etd_steps")); });
        double e1 = rel_max(S, E);
        worst_etd = std::max(worst_etd, e1);
        t.row({"contour_vs_etd", fmt(time), fmt(e1)});
        b.fields.emplace_back("semigroup_" + fmt(time) + ".vfld", S);
    }
    const double t0 = times.front();
    C.t = t0;
    RealField base = staged("contour", [&] { return semigroup_contour(f, P, C, ropt); });
    ContourSpec Calt = C;
    Calt.theta = cfg.real("semigroup.theta_alt");
    double theta_gap = staged("theta check", [&] { return rel_max(semigroup_contour(f, P, Calt, ropt), base); });
    t.row({"theta_independence", fmt(t0), fmt(theta_gap)});
    ContourSpec C2 = C;
    C2.t = 2 * t0;
    double comp = staged("composition", [&] {
        return rel_max(semigroup_contour(base, P, C, ropt), semigroup_contour(f, P, C2, ropt));
    });
    t.row({"composition", fmt(t0), fmt(comp)});
    b.tables.emplace_back("semigroup.csv", t.csv());

    // exponents in the short-time window, where the torus has not yet taken over
    auto probes = probe_family(g, cfg.integer("resolvent.probe_jmax"));
    SemigroupOptions etd;
    etd.method = SemigroupMethod::etd;
    etd.etd_steps = 32;
    const double hi = 0.1 * g.length() * g.length() / (4 * pi * pi);
    std::vector<double> window;
    for (double s = hi; s > hi / 10; s /= 2) window.insert(window.begin(), s);
    const double xt = cfg.real("resolvent.smoothing_tol");
    const auto decay_pairs = cfg.words("semigroup.decay_pairs");
    for (std::size_t i = 0; i < decay_pairs.size(); ++i) {
        const std::string& p = decay_pairs[i];
        auto [a, s] = parse_pair(p);
        ScanResult sc = staged("decay " + p, [&] { return semigroup_decay_check(P, probes, a, s, window, etd); });
        const std::string name = "semigroup_decay_" + std::to_string(i) + ".csv";
        b.tables.emplace_back(name, sc.csv());
        b.expect("decay_exponent_" + p, sc.slope, -xt, xt, name + ":fitted");
    }
    {
        auto [s, sigma] = parse_pair(cfg.get("semigroup.differentiability"));
        ScanResult sc = staged("differentiability", [&] { return differentiability_check(P, probes, s, sigma, window, etd); });
        b.tables.emplace_back("differentiability.csv", sc.csv());
        b.expect("differentiability_exponent", sc.slope, sc.expected - 0.2, sc.expected + 0.2,
                 "differentiability.csv:fitted");
    }
    b.expect("contour_vs_heat", worst_heat, 0.0, cfg.real("semigroup.heat_tol"), "semigroup.csv:contour_vs_heat");
    b.expect("contour_vs_etd", worst_etd, 0.0, cfg.real("semigroup.etd_tol"), "semigroup.csv:contour_vs_etd");
    b.expect("theta_independence", theta_gap, 0.0, cfg.real("semigroup.theta_tol"), "semigroup.csv:theta_independence");
    b.expect("composition", comp, 0.0, cfg.real("semigroup.composition_tol"), "semigroup.csv:composition");
}

void run_stability_sweep(const ExperimentConfig& cfg, ReportBundle& b) {
    Grid g = scenario_grid(cfg);
    StabilityConfig scfg = stability_config(cfg);
    b.manifest.emplace_back("resolved.stability.window_lo", fmt(scfg.fit_lo()));
    b.manifest.emplace_back("resolved.stability.window_hi", fmt(scfg.fit_hi(g)));
    b.manifest.emplace_back("resolved.stability.horizon", fmt(scfg.end_time(g)));
    ForceSpec F = staged("force", [&] { return make_force(cfg, g); });
    StationarySolveResult sol = staged("stationary", [&] {
        StationarySolveResult r = picard_solve(F, picard_options(cfg));
        require_converged(r);
        return r;
    });
    b.fields.emplace_back("U.vfld", sol.U);
    PerturbedOperator P = staged("operator", [&] { return PerturbedOperator(sol.U); });

    ExperimentOptions opt;
    opt.schemes.clear();
    for (const auto& s : cfg.words("stability.schemes"))
        opt.schemes.push_back(s == "heat_duhamel" ? MildScheme::heat_duhamel : MildScheme::perturbed_semigroup);
    PerturbationGenerator gen = cfg.get("stability.profile") == "beltrami" ? beltrami_perturbation()
                                                                            : broadband_perturbation(cfg.seed());
    const auto eps = cfg.reals("stability.epsilons");
    const double slack = cfg.real("stability.calibration_slack");
    const double dt = scfg.dt;
    std::vector<double> lyapunov(eps.size(), 0.0);
    for (std::size_t i = 0; i < eps.size(); ++i) {
        scfg.epsilon = eps[i];
        const std::string tag = std::to_string(i);
        StabilityReport rep = staged("epsilon " + fmt(eps[i]), [&] { return stability_experiment(P, gen, scfg, opt); });
        const std::string report = "report_" + tag + ".csv";
        b.tables.emplace_back(report, rep.summary_csv());
        for (const auto& tr : rep.traces) b.tables.emplace_back("trace_" + tag + "_" + to_string(tr.scheme) + ".csv", tr.csv());
        if (cfg.integer("stability.snapshots") != 0 && !rep.traces.empty())
            for (std::size_t k = 0; k < rep.traces[0].snapshots.size(); ++k)
                b.fields.emplace_back("snap_" + tag + "_" + std::to_string(k) + ".vfld", rep.traces[0].snapshots[k]);

        const std::string pre = "eps" + tag + "_";
        if (rep.traces.size() > 1)
            b.expect(pre + "scheme_gap", rep.scheme_gap, 0.0, scfg.scheme_tol, report + ":scheme_gap");
        b.expect(pre + "max_divergence", rep.max_divergence, 0.0, 1e-9, report + ":max_divergence");
        b.expect(pre + "max_residual", rep.max_residual, 0.0, 10.0 * (dt * dt + scfg.krylov_tol),
                 report + ":max_residual");
        for (std::size_t s = 0; s < rep.decay.size(); ++s) {
            const auto& d = rep.decay[s];
            if (std::abs(d.sigma - 0.5) < 1e-12) {
                const double et = cfg.real("stability.exponent_tol");
                b.expect(pre + "exponent_0.5", d.exponent, -0.25 - et, -0.25 + et, report + ":decay_exponent,0.5");
            }
            if (d.sigma == 0.0) lyapunov[i] = d.sup;
            double cal = rep.calibration[s] * rep.norm_w0;
            b.expect(pre + "calibrated_sup_" + fmt(d.sigma), cal > 0 ? d.sup / cal : 0.0, 0.0, slack,
                     report + ":decay_sup," + fmt(d.sigma) + "/(calibration," + fmt(d.sigma) + "*norm_w0)");
        }
        for (std::size_t a = 0; a < rep.attainment.size(); ++a) {
            double cal = rep.attainment_calibration[a] * rep.norm_w0;
            b.expect(pre + "attainment_" + fmt(scfg.alphas[a]), cal > 0 ? rep.attainment[a] / cal : 0.0, 0.0, slack,
                     report + ":attainment," + std::to_string(a) + "/(attainment_calibration," +
                         std::to_string(a) + "*norm_w0)");
        }
    }
    const double rt = cfg.real("stability.ratio_tol");
    for (std::size_t i = 0; i < eps.size(); ++i)
        for (std::size_t j = 0; j < eps.size(); ++j)
            if (std::abs(eps[i] - 2.0 * eps[j]) <= 1e-12 * eps[i] && lyapunov[j] > 0.0)
                b.expect("halving_ratio_" + std::to_string(i) + "_" + std::to_string(j), lyapunov[i] / lyapunov[j],
                         2.0 * (1 - rt), 2.0 * (1 + rt),
                         "report_" + std::to_string(i) + ".csv+report_" + std::to_string(j) + ".csv:decay_sup,0");
}

const std::vector<Scenario>& scenarios() {
    static const std::vector<Scenario> list{
        {"manufactured", "solve for a manufactured stationary flow and compare with it", {}, run_manufactured},
        {"singular-force", "amplitude sweep of the mollified critical force, with norms",
         {{"force.kind", "mollified_singular"}, {"picard.max_iter", "60"}}, run_singular_force},
        {"capacity-suite", "obstacle capacities of balls, dilation ratio, trace-inequality constants",
         {{"grid.N", "64"}, {"grid.L", "1"}}, run_capacity_suite},
        {"resolvent-scan", "resolvent decay along rays and smoothing exponents",
         {{"grid.N", "16"}, {"grid.L", "25.132741228718345"}}, run_resolvent_scan},
        {"semigroup-suite", "contour semigroup against the heat multiplier and ETD",
         {{"grid.N", "16"}}, run_semigroup_suite},
        {"stability-sweep", "mild-solution evolution of small perturbations and their decay functionals",
         {{"grid.N", "16"}, {"grid.L", "12.566370614359172"}}, run_stability_sweep},
    };
    return list;
}

const Scenario& find_scenario(const std::string& id) {
    for (const auto& s : scenarios())
        if (s.id == id) return s;
    std::string known;
    for (const auto& s : scenarios()) known += (known.empty() ? "" : ", ") + s.id;
    fail(ErrorKind::InvalidConfig, "unknown scenario '" + id + "' (known: " + known + ")");
}

std::string timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace

ExperimentConfig::ExperimentConfig(const std::string& id) : scenario_(find_scenario(id).id) {
    for (const auto& k : registry()) values_[k.key] = k.value;
    for (const auto& [k, v] : find_scenario(id).overrides) values_[k] = v;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const KeyInfo* info = find_key(key);
    if (!info) fail(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
    std::string v = trim(value);
    check_value(*info, v);
    values_[key] = v;
}

void ExperimentConfig::set_assignment(const std::string& a) {
    auto eq = a.find('=');
    if (eq == std::string::npos) fail(ErrorKind::InvalidConfig, "expected key=value, got '" + a + "'");
    set(trim(a.substr(0, eq)), a.substr(eq + 1));
}

void ExperimentConfig::merge_text(const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::InvalidConfig, origin + ":" + std::to_string(n) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "scenario") {
            if (value != scenario_)
                fail(ErrorKind::InvalidConfig, origin + ":" + std::to_string(n) + ": config is for scenario '" +
                                                   value + "', not '" + scenario_ + "'");
            continue;
        }
        try {
            set(key, value);
        } catch (const Error& e) {
            fail(e.kind(), origin + ":" + std::to_string(n) + ": " + std::string(e.what()).substr(15));
        }
    }
}

void ExperimentConfig::merge_file(const std::filesystem::path& path) {
    auto bytes = read_bytes(path);
    merge_text(std::string(bytes.begin(), bytes.end()), path.string());
}

const std::string& ExperimentConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
    return it->second;
}

double ExperimentConfig::real(const std::string& key) const { return parse_real(key, get(key)); }

int ExperimentConfig::integer(const std::string& key) const { return static_cast<int>(parse_int(key, get(key))); }

std::uint64_t ExperimentConfig::seed() const { return std::stoull(get("seed")); }

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& p : split(get(key), ',')) out.push_back(parse_real(key, p));
    return out;
}

std::vector<std::string> ExperimentConfig::words(const std::string& key) const { return split(get(key), ','); }

void ExperimentConfig::validate() const {
    const int n = integer("grid.N");
    require(n >= 8 && n <= 256 && n % 2 == 0, ErrorKind::InvalidConfig, "grid.N must be even and in [8, 256]");
    require(real("grid.L") > 0.0, ErrorKind::InvalidConfig, "grid.L must be positive");
    require(real("force.amplitude") >= 0.0, ErrorKind::InvalidConfig, "force.amplitude must be >= 0");
    require(real("force.core") >= 0.0, ErrorKind::InvalidConfig, "force.core must be >= 0");
    require(integer("picard.max_iter") >= 1 && real("picard.tol") > 0.0, ErrorKind::InvalidConfig,
            "picard settings must be positive");
    for (double a : reals("singular.amplitudes"))
        require(a > 0.0, ErrorKind::InvalidConfig, "singular.amplitudes must be positive");
    require(real("resolvent.tol") > 0.0 && integer("resolvent.max_terms") >= 1, ErrorKind::InvalidConfig,
            "resolvent settings must be positive");
    for (double m : reals("resolvent.magnitudes"))
        require(m > 0.0, ErrorKind::InvalidConfig, "resolvent.magnitudes must be positive");
    for (double a : reals("resolvent.angles"))
        staged("resolvent.angles", [&] { SectorPoint(std::polar(1.0, a)); });
    for (const auto& p : words("resolvent.pairs")) parse_pair(p);
    for (const auto& p : words("semigroup.decay_pairs")) parse_pair(p);
    parse_pair(get("semigroup.differentiability"));
    require(integer("resolvent.probe_jmax") >= 1, ErrorKind::InvalidConfig, "resolvent.probe_jmax must be >= 1");
    for (double t : reals("semigroup.times"))
        require(t > 0.0, ErrorKind::InvalidConfig, "semigroup.times must be positive");
    require(integer("semigroup.etd_steps") >= 1, ErrorKind::InvalidConfig, "semigroup.etd_steps must be >= 1");
    for (double e : reals("stability.epsilons"))
        require(e >= 0.0, ErrorKind::InvalidConfig, "stability.epsilons must be >= 0");
    staged("stability", [&] { stability_config(*this).validate(); });
    if (scenario_ == "manufactured")
        require(get("force.kind") != "mollified_singular", ErrorKind::InvalidConfig,
                "manufactured needs a smooth force.kind");
}

std::string ExperimentConfig::text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

std::vector<std::string> scenario_ids() {
    std::vector<std::string> out;
    for (const auto& s : scenarios()) out.push_back(s.id);
    return out;
}

std::string scenario_description(const std::string& id) { return find_scenario(id).description; }

bool ReportBundle::passed() const {
    return std::all_of(summary.begin(), summary.end(), [](const SummaryRow& r) { return r.pass; });
}

std::string ReportBundle::summary_csv() const {
    std::string out = "check,value,lower,upper,pass,source\n";
    for (const auto& r : summary)
        out += r.check + "," + fmt(r.value) + "," + fmt(r.lower) + "," + fmt(r.upper) + "," + (r.pass ? "1" : "0") +
               "," + (r.source.find(',') == std::string::npos ? r.source : "\"" + r.source + "\"") + "\n";
    return out;
}

void ReportBundle::expect(const std::string& check, double value, double lower, double upper,
                          const std::string& source) {
    summary.push_back({check, value, lower, upper, std::isfinite(value) && value >= lower && value <= upper, source});
}

void run_scenario(const ExperimentConfig& cfg, ReportBundle& bundle) {
    bundle.scenario = cfg.scenario();
    bundle.manifest.emplace_back("scenario", cfg.scenario());
    bundle.manifest.emplace_back("code_version", code_version());
    for (const auto& [k, v] : cfg.values()) bundle.manifest.emplace_back(k, v);
    staged("config", [&] { cfg.validate(); });
    find_scenario(cfg.scenario()).run(cfg, bundle);
}

ReportBundle run_scenario(const ExperimentConfig& cfg) {
    ReportBundle b;
    run_scenario(cfg, b);
    return b;
}

std::vector<std::filesystem::path> write_report(const ReportBundle& bundle, const std::filesystem::path& dir,
                                                bool with_timestamp) {
    namespace fs = std::filesystem;
    require(!bundle.scenario.empty(), ErrorKind::InvalidConfig, "bundle has no scenario");
    const fs::path target = dir / bundle.scenario;
    const fs::path tmp = dir / ("." + bundle.scenario + ".tmp");
    std::vector<fs::path> rel;
    try {
        fs::create_directories(dir);
        fs::remove_all(tmp);
        fs::create_directories(tmp);
        std::string manifest;
        for (const auto& [k, v] : bundle.manifest) manifest += k + " = " + v + "\n";
        if (with_timestamp) manifest += "timestamp = " + timestamp() + "\n";
        write_text(tmp / "manifest.txt", manifest);
        rel.emplace_back("manifest.txt");
        if (!bundle.summary.empty()) {
            write_text(tmp / "summary.csv", bundle.summary_csv());
            rel.emplace_back("summary.csv");
        }
        for (const auto& [name, csv] : bundle.tables) {
            write_text(tmp / name, csv);
            rel.emplace_back(name);
        }
        if (!bundle.fields.empty()) fs::create_directories(tmp / "fields");
        for (const auto& [name, f] : bundle.fields) {
            save_field(tmp / "fields" / name, f);
            rel.push_back(fs::path("fields") / name);
        }
        fs::remove_all(target);
        fs::rename(tmp, target);
    } catch (const fs::filesystem_error& e) {
        fail(ErrorKind::IoError, std::string("writing report: ") + e.what());
    }
    std::vector<fs::path> out;
    for (const auto& r : rel) out.push_back(target / r);
    return out;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::NoConvergence:
        case ErrorKind::NoContraction:
        case ErrorKind::SeriesDiverges:
        case ErrorKind::IterateBlowup:
        case ErrorKind::Unstable:
        case ErrorKind::SchemesDisagree:
            return exit_numerical;
        default:
            return exit_usage;
    }
}

std::string code_version() { return CRITFLOW_VERSION; }

}  // namespace critflow
