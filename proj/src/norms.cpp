#include "critflow/norms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "critflow/spectral.hpp"
#include "power_iteration.hpp"

namespace critflow {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double log_overflow_guard = 690.0;

BallFamily family_for(const Grid& g, const NormOptions& opt) {
    BallFamily fam = opt.balls;
    if (fam.radii.empty()) fam.radii = dyadic_radii(g);
    return fam;
}

std::string family_params(const BallFamily& fam) {
    std::ostringstream os;
    os << "radii=" << fam.radii.size() << ";rmin=" << fam.radii.front() << ";rmax=" << fam.radii.back()
       << ";stride=" << fam.stride;
    return os.str();
}

// |f| for vector and tensor fields, |f| for scalars too.
RealField magnitude(const RealField& f) { return pointwise_magnitude(f); }

RealField power_of(RealField a, double p) {
    for (double& v : a.data()) v = std::pow(std::abs(v), p);
    return a;
}

// sup over the family of ∫_B q / cap(B), q a nonnegative density.
double capacity_sup(const RealField& q, const BallFamily& fam) {
    return ball_supremum(q, fam, [](double r) { return 1.0 / (4.0 * pi * r); }).value;
}

std::vector<double> to_vector(const RealField& f) { return {f.data().begin(), f.data().end()}; }

RealField from_vector(const Grid& g, const std::vector<double>& v) {
    RealField out(g, Rank::scalar);
    std::copy(v.begin(), v.end(), out.data().begin());
    return out;
}

// Nonnegative I_1 q for q >= 0. On the torus the zero-mean potential is
// shifted by the mass times the kernel minimum and clipped at 0.
RealField positive_potential(const RealField& q, PotentialDomain domain) {
    if (domain == PotentialDomain::whole_space) {
        RealField out = apply_riesz(q, 1.0, domain);
        for (double& v : out.data()) v = std::max(v, 0.0);
        return out;
    }
    const Grid& g = q.grid();
    auto rp = riesz_potential(q, 1.0);
    const double mass = rp.subtracted_mean[0] * std::pow(g.length(), 3);
    const double shift = -mass * torus_kernel_minimum(g, 1.0);
    for (double& v : rp.potential.data()) v = std::max(v + shift, 0.0);
    return rp.potential;
}

}  // namespace

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::ball_sup: return "ball_sup";
        case Estimator::operator_power: return "operator_power";
        case Estimator::x_iterate: return "x_iterate";
    }
    return "unknown";
}

std::string NormReport::csv_header() { return "estimator,alpha,value,converged,params"; }

std::string NormReport::csv_row() const {
    char num[64];
    std::string row = to_string(estimator) + ",";
    std::snprintf(num, sizeof num, "%.17g", alpha);
    row += num;
    row += ",";
    std::snprintf(num, sizeof num, "%.17g", value);
    row += num;
    row += converged ? ",1,\"" : ",0,\"";
    for (char c : params) {
        if (c == '"') row += '"';
        row += c;
    }
    row += "\"";
    return row;
}

NormReport morrey_norm(const RealField& f, double p, double lambda, const NormOptions& opt) {
    require(std::isfinite(p) && p >= 1.0 && lambda > 0.0 && lambda <= 3.0, ErrorKind::InvalidExponents,
            "morrey_norm needs p >= 1 and 0 < lambda <= 3");
    BallFamily fam = family_for(f.grid(), opt);
    RealField q = power_of(magnitude(f), p);
    double s = ball_supremum(q, fam, [&](double r) { return std::pow(r, lambda - 3.0); }).value;
    NormReport rep;
    rep.value = std::pow(s, 1.0 / p);
    rep.estimator = Estimator::ball_sup;
    std::ostringstream os;
    os << "norm=morrey;p=" << p << ";lambda=" << lambda << ";" << family_params(fam);
    rep.params = os.str();
    return rep;
}

NormReport vnorm_ball(const RealField& f, const NormOptions& opt) {
    BallFamily fam = family_for(f.grid(), opt);
    RealField q = power_of(magnitude(f), 2.0);
    NormReport rep;
    rep.value = std::sqrt(capacity_sup(q, fam));
    rep.estimator = Estimator::ball_sup;
    rep.params = family_params(fam);
    return rep;
}

NormReport vnorm_operator(const RealField& f, const NormOptions& opt) {
    const Grid& g = f.grid();
    RealField a = magnitude(f);
    NormReport rep;
    rep.estimator = Estimator::operator_power;
    std::ostringstream os;
    os << "domain=" << to_string(opt.domain) << ";tol=" << opt.tol << ";max_iter=" << opt.max_iter;
    if (max_abs(a) == 0.0) {
        rep.params = os.str();
        return rep;
    }
    std::vector<double> weight = to_vector(a);
    std::vector<double> weight2(weight.size());
    for (std::size_t i = 0; i < weight.size(); ++i) weight2[i] = weight[i] * weight[i];

    detail::PowerResult res;
    if (opt.domain == PotentialDomain::periodic) {
        // T*T v = I_1 (|f|² I_1 v) on mean-zero v
        auto apply = [&](const std::vector<double>& v) {
            RealField x = riesz_potential(from_vector(g, v), 1.0).potential;
            for (std::size_t i = 0; i < weight2.size(); ++i) x.data()[i] *= weight2[i];
            return to_vector(riesz_potential(x, 1.0).potential);
        };
        res = detail::power_iterate(weight, apply, opt.max_iter, opt.tol, "vnorm_operator");
    } else {
        // TT* v = |f| I_2 (|f| v)
        auto apply = [&](const std::vector<double>& v) {
            RealField x = from_vector(g, v);
            for (std::size_t i = 0; i < weight.size(); ++i) x.data()[i] *= weight[i];
            RealField y = apply_riesz(x, 2.0, PotentialDomain::whole_space);
            for (std::size_t i = 0; i < weight.size(); ++i) y.data()[i] *= weight[i];
            return to_vector(y);
        };
        res = detail::power_iterate(weight, apply, opt.max_iter, opt.tol, "vnorm_operator");
    }
    rep.value = std::sqrt(std::max(res.value, 0.0));
    rep.iterations = res.iterations;
    os << ";iterations=" << res.iterations;
    rep.params = os.str();
    return rep;
}

NormReport xnorm_iterates(const RealField& u, int depth, const NormOptions& opt) {
    require(depth >= 0 && depth <= 8, ErrorKind::InvalidConfig, "x-norm depth must lie in [0, 8]");
    const Grid& g = u.grid();
    BallFamily fam = family_for(g, opt);
    NormReport rep;
    rep.estimator = Estimator::x_iterate;
    RealField w = magnitude(u);
    double mx = max_abs(w);
    int argmax = 0;
    if (mx > 0.0) {
        double ell = std::log(mx);
        w *= 1.0 / mx;
        double best = 0.0;
        for (int n = 0; n <= depth; ++n) {
            RealField q = power_of(w, 2.0);
            double m = std::sqrt(capacity_sup(q, fam) * 4.0 * pi);  // ||w||_{M^{2,2}}
            if (m == 0.0) break;
            double log_norm = ell + std::log(m);
            if (log_norm > log_overflow_guard)
                fail(ErrorKind::IterateBlowup, "x-norm iterate " + std::to_string(n) +
                                                   " overflows (log norm " + std::to_string(log_norm) + ")");
            double rooted = std::exp(log_norm / std::ldexp(1.0, n));
            rep.history.push_back(rooted);
            if (rooted > best) {
                best = rooted;
                argmax = n;
            }
            rep.iterations = n;
            if (n == depth) break;
            RealField next = positive_potential(q, opt.domain);
            double nm = max_abs(next);
            if (nm == 0.0) break;
            ell = 2.0 * ell + std::log(nm);
            next *= 1.0 / nm;
            w = std::move(next);
        }
        rep.value = best;
    }
    std::ostringstream os;
    os << "depth=" << depth << ";argmax=" << argmax << ";domain=" << to_string(opt.domain) << ";"
       << family_params(fam);
    rep.params = os.str();
    return rep;
}

NormReport vnorm_alpha(const RealField& f, double alpha, Estimator est, const NormOptions& opt) {
    require(std::isfinite(alpha) && alpha >= -2.0 && alpha <= 1.0, ErrorKind::InvalidExponents,
            "vnorm_alpha needs alpha in [-2, 1]");
    RealField h = alpha == 0.0 ? f : fractional_laplacian(f, alpha);
    NormReport rep;
    switch (est) {
        case Estimator::ball_sup: rep = vnorm_ball(h, opt); break;
        case Estimator::operator_power: rep = vnorm_operator(h, opt); break;
        case Estimator::x_iterate: rep = xnorm_iterates(h, opt.depth, opt); break;
    }
    rep.alpha = alpha;
    return rep;
}

double sobolev_embedding_constant(const RealField& f, double p, double alpha, const NormOptions& opt) {
    require(std::isfinite(p) && p > 1.0 && alpha > 0.0 && alpha * p < 2.0, ErrorKind::InvalidExponents,
            "need p > 1 and 0 < alpha < 2/p");
    BallFamily fam = family_for(f.grid(), opt);
    RealField a = magnitude(f);
    if (max_abs(a) == 0.0) return 0.0;
    const double q = 2.0 * p / (2.0 - alpha * p);
    RealField ia = apply_riesz(a, alpha, opt.domain);
    double lhs = std::pow(capacity_sup(power_of(ia, q), fam), 1.0 / q);
    double rhs = std::pow(capacity_sup(power_of(a, p), fam), 1.0 / p);
    return lhs / rhs;
}

double holder_product_check(const RealField& f, const RealField& g, double sigma, double s1, double s2,
                            Estimator est, const NormOptions& opt) {
    require(sigma > 0.0 && sigma < 1.0 && s1 >= 0.0 && s1 < 1.0 && s2 >= 0.0 && s2 < 1.0 &&
                std::abs(sigma + s1 + s2 - 1.0) <= 1e-12,
            ErrorKind::InvalidExponents, "need sigma in (0,1), s1, s2 in [0,1), sigma + s1 + s2 = 1");
    require_same_grid(f.grid(), g.grid());
    const Grid& grid = f.grid();
    const int cf = f.components(), cg = g.components();
    require(cf == cg && (f.rank() == Rank::scalar || f.rank() == Rank::vector), ErrorKind::RankMismatch,
            "holder_product_check needs two scalars or two vectors");
    RealField prod(grid, f.rank() == Rank::scalar ? Rank::scalar : Rank::tensor);
    for (int i = 0; i < cf; ++i)
        for (int j = 0; j < cg; ++j) {
            auto out = prod.component(f.rank() == Rank::scalar ? 0 : tensor_index(i, j));
            auto a = f.component(i);
            auto b = g.component(j);
            for (std::size_t n = 0; n < out.size(); ++n) out[n] = a[n] * b[n];
        }
    double rf = vnorm_alpha(f, s1, est, opt).value;
    double rg = vnorm_alpha(g, s2, est, opt).value;
    if (rf == 0.0 || rg == 0.0) return 0.0;
    double lhs = vnorm_alpha(subtract_mean(prod), -sigma, est, opt).value;
    return lhs / (rf * rg);
}

double maximal_bound_ratio(const RealField& f, const NormOptions& opt) {
    BallFamily fam = family_for(f.grid(), opt);
    RealField a = magnitude(f);
    if (max_abs(a) == 0.0) return 0.0;
    RealField mf = maximal_function(a, fam.radii);
    return capacity_sup(power_of(mf, 2.0), fam) / capacity_sup(power_of(a, 2.0), fam);
}

}  // namespace critflow
