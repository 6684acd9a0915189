#include "critflow/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "critflow/profiles.hpp"
#include "critflow/spectral.hpp"

namespace critflow {

namespace {

constexpr double pi = std::numbers::pi;

cplx dot(const SpectralField& a, const SpectralField& b) {
    cplx s = 0.0;
    const auto& x = a.data();
    const auto& y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
    return s;
}

// ℙ∇·(w⊗w), dealiased like every other product.
SpectralField transport(const SpectralField& W) {
    RealField w = inverse_transform(W);
    return leray_project(tensor_divergence(dealiased_tensor_product_spectral(w, w)));
}

SpectralField minus_A(const SpectralField& x, const PerturbedOperator& P) {
    SpectralField out = laplacian(x);
    if (P.max_speed() != 0.0) out -= op_B(x, P);
    return out;
}

// Krylov vector for the augmented operator [[L, ηW], [0, J]].
struct Aug {
    SpectralField x;
    std::vector<cplx> s;
};

cplx dot(const Aug& a, const Aug& b) {
    cplx r = dot(a.x, b.x);
    for (std::size_t i = 0; i < a.s.size(); ++i) r += std::conj(a.s[i]) * b.s[i];
    return r;
}

void axpy(Aug& y, cplx c, const Aug& x) {
    y.x.axpy(c, x.x);
    for (std::size_t i = 0; i < y.s.size(); ++i) y.s[i] += c * x.s[i];
}

void scale(Aug& y, cplx c) {
    y.x *= c;
    for (auto& v : y.s) v *= c;
}

// Σ_k τ^k φ_k(τL) v[k], L = -A. The φ-functions come from the exponential of
// the augmented operator, which is approximated by Arnoldi with the usual
// a posteriori estimate β |[exp(τ H̄)]_{m+1,1}|.
SpectralField phi_combination(double tau, const std::vector<SpectralField>& v, const PerturbedOperator& P,
                              double tol, int max_dim) {
    const Grid& g = P.grid();
    std::vector<const SpectralField*> w;  // w_1 .. w_p
    for (std::size_t k = 1; k < v.size(); ++k) w.push_back(&v[k]);
    while (!w.empty() && spectral_l2(*w.back()) == 0.0) w.pop_back();
    const std::size_t p = w.size();

    double wmax = 0.0;
    for (auto* wk : w) wmax = std::max(wmax, spectral_l2(*wk));
    const double v0n = spectral_l2(v[0]);
    const double eta = p == 0 ? 1.0 : (v0n > 0.0 ? v0n / wmax : 1.0 / wmax);

    auto apply = [&](const Aug& a) {
        Aug out{minus_A(a.x, P), std::vector<cplx>(p, 0.0)};
        // column j of W holds w_{p-j}
        for (std::size_t j = 0; j < p; ++j)
            if (a.s[j] != 0.0) out.x.axpy(eta * a.s[j], *w[p - 1 - j]);
        for (std::size_t i = 0; i + 1 < p; ++i) out.s[i] = a.s[i + 1];
        return out;
    };

    Aug b{v[0], std::vector<cplx>(p, 0.0)};
    if (p > 0) b.s[p - 1] = 1.0 / eta;
    const double beta = std::sqrt(dot(b, b).real());
    if (beta == 0.0) return SpectralField(g, Rank::vector);

    std::vector<Aug> V;
    V.push_back(b);
    scale(V[0], 1.0 / beta);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(max_dim + 1, max_dim);
    for (int j = 0; j < max_dim; ++j) {
        Aug q = apply(V[j]);
        for (int i = 0; i <= j; ++i) {
            H(i, j) = dot(V[i], q);
            axpy(q, -H(i, j), V[i]);
        }
        double hn = std::sqrt(dot(q, q).real());
        H(j + 1, j) = hn;
        const int m = j + 1;
        Eigen::MatrixXcd Hb = Eigen::MatrixXcd::Zero(m + 1, m + 1);
        Hb.topLeftCorner(m, m) = tau * H.topLeftCorner(m, m);
        Hb(m, m - 1) = tau * hn;
        Eigen::MatrixXcd E = Hb.exp();
        const bool breakdown = hn <= 1e-14 * beta;
        const double err = beta * std::abs(E(m, 0));
        if (breakdown || (m >= 2 && err <= tol * beta)) {
            SpectralField out(g, Rank::vector);
            for (int i = 0; i < m; ++i) out.axpy(beta * E(i, 0), V[i].x);
            return out;
        }
        scale(q, 1.0 / hn);
        V.push_back(std::move(q));
    }
    fail(ErrorKind::NoConvergence, "Krylov exponential did not reach tolerance in " + std::to_string(max_dim) +
                                       " dimensions (tau = " + std::to_string(tau) + ")");
}

double phi1(double z) {
    if (std::abs(z) < 1e-4) return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
}
double phi2(double z) {
    if (std::abs(z) < 1e-3) return 0.5 + z / 6.0 + z * z / 24.0;
    return (std::expm1(z) - z) / (z * z);
}

// Diagonal ETD2RK factors for L = Δ.
struct HeatFactors {
    std::vector<double> e, p1, p2;

    HeatFactors(const Grid& g, double h) : e(g.size()), p1(g.size()), p2(g.size()) {
        const auto& k2 = g.k2();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double z = -k2[i] * h;
            e[i] = std::exp(z);
            p1[i] = h * phi1(z);
            p2[i] = h * phi2(z);
        }
    }

    static SpectralField apply(const SpectralField& a, const std::vector<double>& d) {
        SpectralField out(a.grid(), a.rank());
        for (int c = 0; c < a.components(); ++c) {
            auto src = a.component(c);
            auto dst = out.component(c);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = d[i] * src[i];
        }
        return out;
    }
};

class Stepper {
public:
    Stepper(const PerturbedOperator& P, double h, MildScheme scheme, const StabilityConfig& cfg)
        : P_(P), h_(h), scheme_(scheme), cfg_(cfg), heat_(P.grid(), h) {}

    SpectralField step(const SpectralField& u) const {
        if (scheme_ == MildScheme::heat_duhamel) {
            SpectralField Nu = forcing(u);
            SpectralField a = HeatFactors::apply(u, heat_.e);
            a += HeatFactors::apply(Nu, heat_.p1);
            SpectralField Na = forcing(a);
            Na -= Nu;
            a += HeatFactors::apply(Na, heat_.p2);
            return a;
        }
        SpectralField Nu = forcing(u);
        SpectralField a = phi_combination(h_, {u, Nu}, P_, cfg_.krylov_tol, cfg_.krylov_max_dim);
        SpectralField d = forcing(a);
        d -= Nu;
        d *= 1.0 / h_;
        return phi_combination(h_, {u, Nu, d}, P_, cfg_.krylov_tol, cfg_.krylov_max_dim);
    }

private:
    // Nonlinear part of the split: everything the exponential factor leaves out.
    SpectralField forcing(const SpectralField& u) const {
        SpectralField out = transport(u);
        if (scheme_ == MildScheme::heat_duhamel && P_.max_speed() != 0.0) out += op_B(u, P_);
        out *= -1.0;
        return out;
    }

    const PerturbedOperator& P_;
    double h_;
    MildScheme scheme_;
    const StabilityConfig& cfg_;
    HeatFactors heat_;
};

bool in_window(double t, double lo, double hi) { return t >= lo * (1 - 1e-12) && t <= hi * (1 + 1e-12); }

double vnorm(const RealField& f, double order, const NormOptions& opt) {
    return vnorm_alpha(f, order, Estimator::ball_sup, opt).value;
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

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(MildScheme s) {
    return s == MildScheme::perturbed_semigroup ? "perturbed_semigroup" : "heat_duhamel";
}

void StabilityConfig::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, what); };
    if (!(sigma0 > 0.5 && sigma0 < 1.0)) bad("sigma0 must lie in (1/2, 1)");
    if (!(sigma1 > 0.0 && sigma1 < 0.5)) bad("sigma1 must lie in (0, 1/2)");
    if (sigmas.empty()) bad("sigma list is empty");
    for (double s : sigmas)
        if (!(s >= -1.0 && s <= sigma0)) bad("sigma " + fmt(s) + " outside [-1, sigma0]");
    for (double a : alphas)
        if (!(a >= -1.0 && a <= 0.0)) bad("alpha " + fmt(a) + " outside [-1, 0]");
    if (!(std::isfinite(epsilon) && epsilon >= 0.0)) bad("epsilon must be finite and >= 0");
    if (!(dt > 0.0 && std::isfinite(dt))) bad("dt must be positive");
    if (checkpoints < 2 && checkpoint_times.empty()) bad("need at least two checkpoints");
    if (!(krylov_tol > 0.0) || krylov_max_dim < 2) bad("invalid Krylov settings");
    if (window_lo < 0.0 || (window_hi > 0.0 && window_hi <= window_lo)) bad("fit window is empty");
    if (horizon < 0.0) bad("horizon must be >= 0");
}

double StabilityConfig::fit_lo() const { return window_lo > 0.0 ? window_lo : 10.0 * dt; }

double StabilityConfig::fit_hi(const Grid& g) const {
    return window_hi > 0.0 ? window_hi : 0.1 * g.length() * g.length() / (4.0 * pi * pi);
}

double StabilityConfig::end_time(const Grid& g) const { return horizon > 0.0 ? horizon : fit_hi(g); }

std::vector<double> StabilityConfig::schedule(const Grid& g) const {
    validate();
    std::vector<double> out;
    if (!checkpoint_times.empty()) {
        for (double t : checkpoint_times) {
            double n = std::round(t / dt);
            if (!(t > 0.0) || n < 1 || std::abs(n * dt - t) > 1e-9 * t)
                fail(ErrorKind::InvalidConfig, "checkpoint " + fmt(t) + " is not a positive multiple of dt");
            if (!out.empty() && t <= out.back()) fail(ErrorKind::InvalidConfig, "checkpoints must increase");
            out.push_back(n * dt);
        }
        return out;
    }
    const double end = end_time(g);
    const long last = std::max(1L, std::lround(end / dt));
    std::set<long> steps;
    for (int i = 0; i < checkpoints; ++i) {
        double f = static_cast<double>(i) / (checkpoints - 1);
        steps.insert(std::max(1L, std::lround(std::pow(static_cast<double>(last), f))));
    }
    for (long n : steps) out.push_back(n * dt);
    return out;
}

double EvolutionTrace::weighted(std::size_t s, std::size_t i) const {
    return std::pow(times[i], 0.5 * sigmas[s]) * raw[s][i];
}

std::size_t EvolutionTrace::sigma_index(double sigma) const {
    for (std::size_t s = 0; s < sigmas.size(); ++s)
        if (std::abs(sigmas[s] - sigma) < 1e-12) return s;
    fail(ErrorKind::InvalidConfig, "sigma " + fmt(sigma) + " was not recorded");
}

std::string EvolutionTrace::csv() const {
    std::string out = "t,sigma,weighted_norm,raw_norm,scheme,estimator\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t s = 0; s < sigmas.size(); ++s)
            out += fmt(times[i]) + "," + fmt(sigmas[s]) + "," + fmt(weighted(s, i)) + "," + fmt(raw[s][i]) + "," +
                   to_string(scheme) + "," + to_string(estimator) + "\n";
    return out;
}

RealField mild_step(const RealField& w, const PerturbedOperator& P, double dt, MildScheme scheme,
                    const StabilityConfig& cfg) {
    require_same_grid(w.grid(), P.grid());
    require_rank(w.rank(), Rank::vector, "perturbation must be a vector field");
    require(dt > 0.0, ErrorKind::InvalidConfig, "dt must be positive");
    Stepper st(P, dt, scheme, cfg);
    return inverse_transform(st.step(forward_transform(w)));
}

EvolutionTrace evolve_mild(const RealField& w0, const PerturbedOperator& P, const StabilityConfig& cfg,
                           MildScheme scheme) {
    require_same_grid(w0.grid(), P.grid());
    require_rank(w0.rank(), Rank::vector, "perturbation must be a vector field");
    const Grid& g = P.grid();
    SpectralField u = forward_transform(w0);
    require_mean_zero(u, "initial perturbation");
    if (divergence_norm(u) > 1e-10 * std::max(spectral_l2(u), 1e-300))
        fail(ErrorKind::NotSolenoidal, "initial perturbation is not divergence-free");

    const std::vector<double> times = cfg.schedule(g);
    std::vector<long> marks;
    for (double t : times) marks.push_back(std::lround(t / cfg.dt));

    EvolutionTrace tr(w0);
    tr.scheme = scheme;
    tr.dt = cfg.dt;
    tr.sigmas = cfg.sigmas;
    tr.raw.assign(cfg.sigmas.size(), {});
    tr.norms = cfg.norms;

    Stepper st(P, cfg.dt, scheme, cfg);
    SpectralField prev = u, cur = u;
    std::size_t next_mark = 0;
    const long total = marks.back() + 1;
    for (long n = 0; n < total; ++n) {
        SpectralField nxt = st.step(cur);
        const double before = spectral_l2(cur), after = spectral_l2(nxt);
        if (!std::isfinite(after) || after > 2.0 * before)
            fail(ErrorKind::Unstable, to_string(scheme) + " step " + std::to_string(n + 1) + " at dt " +
                                          fmt(cfg.dt) + ": norm " + fmt(before) + " -> " + fmt(after));
        if (next_mark < marks.size() && n == marks[next_mark]) {
            RealField w = inverse_transform(cur);
            tr.times.push_back(times[next_mark]);
            for (std::size_t s = 0; s < cfg.sigmas.size(); ++s) tr.raw[s].push_back(vnorm(w, cfg.sigmas[s], cfg.norms));
            tr.divergence.push_back(divergence_norm(cur) / std::max(before, 1e-300));
            SpectralField rhs = op_A(cur, P);
            rhs += transport(cur);
            SpectralField r = nxt - prev;
            r *= 1.0 / (2.0 * cfg.dt);
            r += rhs;
            // central differences miss dt²/6 ∂³w, and ∂³w ≈ -A³w for small w
            double scale = spectral_l2(op_A(op_A(op_A(cur, P), P), P));
            tr.residual.push_back(scale > 0.0 ? spectral_l2(r) / scale : 0.0);
            tr.snapshots.push_back(std::move(w));
            ++next_mark;
        }
        prev = std::move(cur);
        cur = std::move(nxt);
    }
    return tr;
}

DecayFunctional decay_functionals(const EvolutionTrace& trace, double sigma, double lo, double hi) {
    const std::size_t s = trace.sigma_index(sigma);
    DecayFunctional d;
    d.sigma = sigma;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        if (!in_window(trace.times[i], lo, hi)) continue;
        d.sup = std::max(d.sup, trace.weighted(s, i));
        x.push_back(trace.times[i]);
        y.push_back(trace.raw[s][i]);
    }
    d.points = static_cast<int>(x.size());
    require(x.size() >= 2, ErrorKind::InvalidConfig,
            "fit window [" + fmt(lo) + ", " + fmt(hi) + "] holds fewer than two checkpoints");
    bool all_zero = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
    d.exponent = all_zero ? 0.0 : loglog_slope(x, y);
    return d;
}

double initial_attainment_check(const EvolutionTrace& trace, double alpha, double lo, double hi) {
    require(alpha >= -1.0 && alpha <= 0.0, ErrorKind::InvalidExponents, "attainment needs alpha in [-1, 0]");
    require(!trace.snapshots.empty(), ErrorKind::InvalidConfig, "trace holds no snapshots");
    double sup = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        if (!in_window(trace.times[i], lo, hi)) continue;
        RealField d = trace.snapshots[i] - trace.w0;
        require_mean_zero(forward_transform(d), "w(t) - w0");
        sup = std::max(sup, std::pow(trace.times[i], 0.5 * alpha) * vnorm(d, alpha, trace.norms));
        ++used;
    }
    require(used > 0, ErrorKind::InvalidConfig, "attainment window holds no checkpoints");
    return sup;
}

double heat_calibration(const RealField& w0, double sigma, const std::vector<double>& times,
                        const NormOptions& opt) {
    double n0 = vnorm(w0, 0.0, opt);
    if (n0 == 0.0) return 0.0;
    SpectralField W = forward_transform(w0);
    double sup = 0.0;
    for (double t : times) {
        HeatFactors hf(w0.grid(), t);
        RealField w = inverse_transform(HeatFactors::apply(W, hf.e));
        sup = std::max(sup, std::pow(t, 0.5 * sigma) * vnorm(w, sigma, opt));
    }
    return sup / n0;
}

double heat_attainment_calibration(const RealField& w0, double alpha, const std::vector<double>& times,
                                   const NormOptions& opt) {
    double n0 = vnorm(w0, 0.0, opt);
    if (n0 == 0.0) return 0.0;
    SpectralField W = forward_transform(w0);
    double sup = 0.0;
    for (double t : times) {
        HeatFactors hf(w0.grid(), t);
        RealField d = inverse_transform(HeatFactors::apply(W, hf.e)) - w0;
        sup = std::max(sup, std::pow(t, 0.5 * alpha) * vnorm(d, alpha, opt));
    }
    return sup / n0;
}

double uniqueness_check(const EvolutionTrace& a, const EvolutionTrace& b, const StabilityConfig& cfg, bool check) {
    require(a.times == b.times, ErrorKind::InvalidConfig, "traces have different checkpoints");
    double gap = 0.0;
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        double diff = rms(a.snapshots[i] - b.snapshots[i]);
        double ref = rms(b.snapshots[i]);
        if (diff == 0.0) continue;
        gap = std::max(gap, ref > 0.0 ? diff / ref : INFINITY);
    }
    if (check && gap > cfg.scheme_tol)
        fail(ErrorKind::SchemesDisagree, "schemes differ by " + fmt(gap) + " (threshold " + fmt(cfg.scheme_tol) + ")");
    return gap;
}

PerturbationGenerator broadband_perturbation(std::uint64_t seed) {
    return [seed](const Grid& g) { return random_broadband(g, 3.0, seed); };
}

PerturbationGenerator beltrami_perturbation(int m) {
    return [m](const Grid& g) { return beltrami(g, 1.0, m); };
}

RealField scaled_perturbation(const PerturbationGenerator& gen, const Grid& g, double epsilon,
                              const NormOptions& opt) {
    RealField p = gen(g);
    require_rank(p.rank(), Rank::vector, "perturbation profile must be a vector field");
    require_same_grid(p.grid(), g);
    double n = vnorm(p, 0.0, opt);
    require(n > 0.0, ErrorKind::InvalidField, "perturbation profile is zero");
    p *= epsilon / n;
    return p;
}

std::string StabilityReport::summary_csv() const {
    std::string out = "quantity,parameter,value\n";
    auto row = [&](const std::string& q, const std::string& p, double v) { out += q + "," + p + "," + fmt(v) + "\n"; };
    row("epsilon", "", epsilon);
    row("norm_w0", "", norm_w0);
    row("norm_U", "", norm_U);
    row("scheme_gap", "", scheme_gap);
    for (std::size_t i = 0; i < decay.size(); ++i) {
        row("decay_sup", fmt(decay[i].sigma), decay[i].sup);
        row("decay_exponent", fmt(decay[i].sigma), decay[i].exponent);
        row("calibration", fmt(decay[i].sigma), calibration[i]);
    }
    for (std::size_t i = 0; i < attainment.size(); ++i) {
        row("attainment", fmt(i), attainment[i]);
        row("attainment_calibration", fmt(i), attainment_calibration[i]);
    }
    row("max_residual", "", max_residual);
    row("max_divergence", "", max_divergence);
    row("unstable", "", unstable ? 1.0 : 0.0);
    row("decaying", "", decaying ? 1.0 : 0.0);
    return out;
}

StabilityReport stability_experiment(const PerturbedOperator& P, const PerturbationGenerator& gen,
                                     const StabilityConfig& cfg, const ExperimentOptions& opt) {
    staged("config", [&] { cfg.validate(); });
    require(!opt.schemes.empty(), ErrorKind::InvalidConfig, "config: no scheme selected");
    const Grid& g = P.grid();
    StabilityReport rep;
    rep.epsilon = cfg.epsilon;
    rep.norm_U = vnorm(P.U(), 0.0, cfg.norms);
    RealField w0 = staged("perturbation", [&] { return scaled_perturbation(gen, g, cfg.epsilon, cfg.norms); });
    rep.norm_w0 = vnorm(w0, 0.0, cfg.norms);

    for (MildScheme s : opt.schemes) {
        try {
            rep.traces.push_back(staged("evolve " + to_string(s), [&] { return evolve_mild(w0, P, cfg, s); }));
        } catch (const Error& e) {
            if (!opt.catch_unstable || e.kind() != ErrorKind::Unstable) throw;
            rep.unstable = true;
            rep.decaying = false;
            rep.note = e.what();
            return rep;
        }
    }
    const EvolutionTrace& tr = rep.traces.front();
    const double lo = cfg.fit_lo(), hi = cfg.fit_hi(g);
    std::vector<double> window;
    for (double t : tr.times)
        if (in_window(t, lo, hi)) window.push_back(t);

    staged("functionals", [&] {
        for (double s : cfg.sigmas) {
            rep.decay.push_back(decay_functionals(tr, s, lo, hi));
            rep.calibration.push_back(heat_calibration(w0, s, window, cfg.norms));
        }
        for (double a : cfg.alphas) {
            rep.attainment.push_back(initial_attainment_check(tr, a, tr.times.front(), hi));
            std::vector<double> early;
            for (double t : tr.times)
                if (t <= hi * (1 + 1e-12)) early.push_back(t);
            rep.attainment_calibration.push_back(heat_attainment_calibration(w0, a, early, cfg.norms));
        }
    });
    if (rep.traces.size() > 1)
        rep.scheme_gap = staged("uniqueness", [&] { return uniqueness_check(rep.traces[0], rep.traces[1], cfg, false); });
    for (const auto& t : rep.traces) {
        for (double r : t.residual) rep.max_residual = std::max(rep.max_residual, r);
        for (double d : t.divergence) rep.max_divergence = std::max(rep.max_divergence, d);
    }
    std::size_t s0 = tr.sigma_index(cfg.sigmas.front());
    std::vector<double> in;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        if (in_window(tr.times[i], lo, hi)) in.push_back(tr.raw[s0][i]);
    rep.decaying = in.size() >= 2 && in.back() < in.front();
    if (!rep.decaying && cfg.epsilon > 0.0) rep.note = "trace does not decay in the fit window";
    if (cfg.epsilon == 0.0) rep.decaying = true;
    return rep;
}

StabilityReport stability_experiment(const ForceSpec& F, const PerturbationGenerator& gen, const StabilityConfig& cfg,
                                     const ExperimentOptions& opt) {
    StationarySolveResult sol = staged("stationary", [&] {
        StationarySolveResult r = picard_solve(F, opt.picard);
        require_converged(r);
        return r;
    });
    PerturbedOperator P = staged("operator", [&] { return PerturbedOperator(sol.U); });
    StabilityReport rep = stability_experiment(P, gen, cfg, opt);
    rep.stationary_status = sol.status;
    return rep;
}

double epsilon_crossover(const PerturbedOperator& P, const PerturbationGenerator& gen, StabilityConfig cfg,
                         const std::vector<double>& epsilons) {
    ExperimentOptions opt;
    opt.schemes = {MildScheme::heat_duhamel};
    opt.catch_unstable = true;
    std::vector<double> sorted = epsilons;
    std::sort(sorted.begin(), sorted.end());
    double best = 0.0;
    for (double e : sorted) {
        cfg.epsilon = e;
        StabilityReport r = stability_experiment(P, gen, cfg, opt);
        if (!r.unstable && r.decaying) best = e;
        else break;
    }
    return best;
}

}  // namespace critflow
