#include "critflow/stationary.hpp"

#include <cmath>
#include <cstdio>

#include "critflow/profiles.hpp"
#include "critflow/spectral.hpp"

namespace critflow {

namespace {

SpectralField b_spectral(const RealField& U, const RealField& V) {
    return inverse_laplacian(leray_project(tensor_divergence(dealiased_tensor_product_spectral(U, V))));
}

void require_solenoidal(const RealField& v, const char* what) {
    require_rank(v.rank(), Rank::vector, "expected a vector field");
    const double scale = std::max(rms(v), 1e-300);
    if (divergence_norm(v) > 1e-10 * std::max(scale, 1.0))
        fail(ErrorKind::NotSolenoidal, std::string(what) + " is not divergence-free (|div| = " +
                                           std::to_string(divergence_norm(v)) + ")");
}

}  // namespace

std::string to_string(ForceSpec::Kind k) {
    switch (k) {
        case ForceSpec::Kind::manufactured: return "manufactured";
        case ForceSpec::Kind::mollified_singular: return "mollified_singular";
        case ForceSpec::Kind::explicit_field: return "explicit";
    }
    return "unknown";
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::NoContraction: return "NoContraction";
        case SolveStatus::MaxIter: return "MaxIter";
    }
    return "unknown";
}

ForceSpec ForceSpec::mollified_singular(const Grid& g, double amplitude, double core) {
    require(std::isfinite(amplitude) && core > 0.0, ErrorKind::InvalidConfig,
            "mollified_singular needs a finite amplitude and a positive core scale");
    RealField raw(g, Rank::vector);
    RealField bump = gaussian_density(g, core);
    auto src = bump.component(0);
    std::copy(src.begin(), src.end(), raw.component(0).begin());
    raw = subtract_mean(raw);
    raw *= amplitude;
    ForceSpec f(Kind::mollified_singular, leray_project(raw));
    f.amplitude = amplitude;
    f.core = core;
    return f;
}

ForceSpec ForceSpec::explicit_force(const RealField& F) {
    require_rank(F.rank(), Rank::vector, "force must be a vector field");
    ForceSpec f(Kind::explicit_field, leray_project(F));
    return f;
}

ForceSpec manufacture_force(const RealField& u_star) {
    require_solenoidal(u_star, "manufactured velocity");
    SpectralField U = forward_transform(u_star);
    require_mean_zero(U, "manufactured velocity");
    SpectralField rhs = laplacian(U);
    rhs *= -1.0;
    rhs += tensor_divergence(dealiased_tensor_product_spectral(u_star, u_star));
    ForceSpec f(ForceSpec::Kind::manufactured, inverse_transform(leray_project(rhs)));
    f.u_star = u_star;
    return f;
}

RealField u0_from_force(const RealField& F) {
    require_rank(F.rank(), Rank::vector, "force must be a vector field");
    SpectralField u = inverse_laplacian(leray_project(forward_transform(F)));
    u *= -1.0;
    return inverse_transform(u);
}

RealField u0_from_force(const ForceSpec& force) { return u0_from_force(force.F); }

RealField bilinear_B(const RealField& U, const RealField& V) {
    require_rank(U.rank(), Rank::vector, "bilinear_B needs vector fields");
    require_rank(V.rank(), Rank::vector, "bilinear_B needs vector fields");
    require_same_grid(U.grid(), V.grid());
    return inverse_transform(b_spectral(U, V));
}

std::string StationarySolveResult::iterate_log_csv() const {
    std::string out = "k,vnorm_ball,increment,ratio\n";
    char line[160];
    for (std::size_t k = 0; k < iterate_norms.size(); ++k) {
        double inc = k < increments.size() ? increments[k] : NAN;
        double ratio = k >= 1 && k < increments.size() ? contraction_ratios[k - 1] : NAN;
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", k, iterate_norms[k], inc, ratio);
        out += line;
    }
    return out;
}

StationarySolveResult picard_solve(const ForceSpec& force, const PicardOptions& opt) {
    require(opt.tol > 0.0 && opt.max_iter >= 1 && opt.divergence_run >= 1, ErrorKind::InvalidConfig,
            "picard_solve needs tol > 0, max_iter >= 1, divergence_run >= 1");
    RealField U0 = u0_from_force(force);
    StationarySolveResult r{U0, U0, {}, {}, {}};
    r.norm_U0 = vnorm_ball(r.U0, opt.norms).value;
    if (opt.start) {
        require_same_grid(opt.start->grid(), r.U0.grid());
        r.U = *opt.start;
    }
    RealField x = r.U;
    r.iterate_norms.push_back(vnorm_ball(x, opt.norms).value);
    const double scale = r.norm_U0;
    int run = 0;
    for (int k = 1; k <= opt.max_iter; ++k) {
        RealField next = bilinear_B(x, x);
        next += r.U0;
        RealField diff = next - x;
        x = std::move(next);
        r.iterations = k;
        if (!x.all_finite()) {
            r.status = SolveStatus::NoContraction;
            break;
        }
        double inc = vnorm_ball(diff, opt.norms).value;
        r.increments.push_back(inc);
        r.iterate_norms.push_back(vnorm_ball(x, opt.norms).value);
        if (r.increments.size() >= 2) {
            double prev = r.increments[r.increments.size() - 2];
            double ratio = prev > 0.0 ? inc / prev : 0.0;
            r.contraction_ratios.push_back(ratio);
            run = ratio > 1.0 ? run + 1 : 0;
        }
        if (inc <= opt.tol * scale) {
            r.status = SolveStatus::Converged;
            break;
        }
        if (run >= opt.divergence_run) {
            r.status = SolveStatus::NoContraction;
            break;
        }
    }
    r.U = std::move(x);
    if (r.U.all_finite()) {
        r.norm_U = r.iterate_norms.back();
        r.residual = residual(r.U, force).integral;
    } else {
        r.norm_U = INFINITY;
        r.residual = INFINITY;
    }
    r.bound_holds = r.status == SolveStatus::Converged &&
                    r.norm_U <= 2.0 * r.norm_U0 * (1.0 + opt.bound_slack);
    return r;
}

void require_converged(const StationarySolveResult& r) {
    if (r.status == SolveStatus::Converged) return;
    if (r.status == SolveStatus::NoContraction)
        fail(ErrorKind::NoContraction, "Picard iteration stopped contracting after " +
                                           std::to_string(r.iterations) + " steps");
    fail(ErrorKind::NoConvergence, "Picard iteration hit the cap of " + std::to_string(r.iterations) + " steps");
}

Residual residual(const RealField& U, const ForceSpec& force) {
    require_same_grid(U.grid(), force.F.grid());
    Residual out;
    RealField integral = U - bilinear_B(U, U);
    integral -= u0_from_force(force);
    out.integral = spectral_l2(forward_transform(integral));

    SpectralField Uh = forward_transform(U);
    SpectralField mom = laplacian(Uh);
    mom *= -1.0;
    mom += tensor_divergence(dealiased_tensor_product_spectral(U, U));
    mom -= forward_transform(force.F);
    // ℙ needs a mean-zero argument; only the mean of U can leak in here
    mom.at(0, 0) = mom.at(1, 0) = mom.at(2, 0) = 0.0;
    out.momentum = spectral_l2(leray_project(mom));
    return out;
}

double calibrate_bilinear_constant(const Grid& g, const NormOptions& opt) {
    std::vector<RealField> fam;
    fam.push_back(taylor_green(g, 1.0));
    fam.push_back(beltrami(g, 1.0, 1));
    fam.push_back(random_band_limited(g, Rank::vector, 2, 101, true));
    fam.push_back(ForceSpec::mollified_singular(g, 1.0, g.length() / 16).F);
    fam.back() = u0_from_force(fam.back());
    std::vector<double> norms;
    for (auto& f : fam) norms.push_back(vnorm_operator(f, opt).value);
    double best = 0.0;
    for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = 0; j < fam.size(); ++j) {
            double b = vnorm_operator(bilinear_B(fam[i], fam[j]), opt).value;
            best = std::max(best, b / (norms[i] * norms[j]));
        }
    return best;
}

SmallnessReport smallness_report(const ForceSpec& force, double bilinear_constant, const NormOptions& opt) {
    SmallnessReport r;
    r.delta = vnorm_operator(u0_from_force(force), opt).value;
    r.bilinear_constant = bilinear_constant;
    r.predicted_contraction = 4.0 * bilinear_constant * r.delta;
    return r;
}

}  // namespace critflow
