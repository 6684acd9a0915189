#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "critflow/field.hpp"

namespace critflow {

// A f = -Δf + B f,  B f = ℙ∇·(U⊗f + f⊗U), linearised about a frozen
// divergence-free mean-zero U. Products are dealiased like the solver's.
class PerturbedOperator {
public:
    explicit PerturbedOperator(RealField U);

    const RealField& U() const { return U_; }
    const Grid& grid() const { return U_.grid(); }
    double max_speed() const { return max_speed_; }

private:
    RealField U_;
    double max_speed_ = 0.0;
};

SpectralField op_B(const SpectralField& f, const PerturbedOperator& P);
RealField op_B(const RealField& f, const PerturbedOperator& P);
SpectralField op_A(const SpectralField& f, const PerturbedOperator& P);
RealField op_A(const RealField& f, const PerturbedOperator& P);

constexpr double default_sector_angle = std::numbers::pi / 4;

// λ in S_γ = {|arg λ| >= γ}; construction throws InvalidConfig otherwise.
struct SectorPoint {
    SectorPoint(cplx lambda, double gamma = default_sector_angle);
    cplx lambda;
    double gamma;
};

struct ResolventOptions {
    double tol = 1e-10;   // certified ||(λ - A) g - f|| <= tol ||f|| (spectral L2)
    int max_terms = 200;
    int growth_run = 3;   // consecutive growing terms before SeriesDiverges
};

struct ResolventResult {
    SpectralField g;
    int terms = 0;
    double residual = 0.0;  // relative, from the explicit check
};

// (λ - A)^{-1} f = Σ_n [R_0 B]^n R_0 f with R_0 the multiplier 1/(λ - |k|²).
// The residual after n terms is exactly -B(term_n), which drives truncation;
// the final answer is re-checked by applying λ - A.
ResolventResult resolvent_apply(const SectorPoint& z, const SpectralField& f, const PerturbedOperator& P,
                                const ResolventOptions& opt = {});
ComplexField resolvent_apply(const SectorPoint& z, const RealField& f, const PerturbedOperator& P,
                             const ResolventOptions& opt = {});

// Rays λ = r e^{±iϑ}, r >= 1/t, and the arc |λ| = 1/t through -1/t.
struct ContourSpec {
    double t = 1.0;
    double theta = 3 * std::numbers::pi / 8;
    double r_max = 0.0;      // 0: chosen so that exp(-t r_max cos ϑ) < 1e-16
    int ray_nodes = 64;
    int arc_nodes = 32;      // on the half arc ϑ..π
    bool use_symmetry = true;

    double ray_end() const;
    ContourSpec doubled() const;
};

// e^{-At} f = (1/2πi) ∫_Γ e^{-λt} (λ - A)^{-1} f dλ, Γ counterclockwise
// around the spectrum. With use_symmetry only the upper half is evaluated
// and the result is Im(J)/π, real by construction.
RealField semigroup_contour(const RealField& f, const PerturbedOperator& P, const ContourSpec& C,
                            const ResolventOptions& opt = {});
// Full contour without the symmetry shortcut; the imaginary part measures
// the quadrature asymmetry.
ComplexField semigroup_contour_full(const RealField& f, const PerturbedOperator& P, const ContourSpec& C,
                                    const ResolventOptions& opt = {});

// ETD2RK for ∂_t g = Δg - B g: exact heat factor, second-order Duhamel
// correction for B. Throws Unstable once the field grows by 1e8 or stops
// being finite.
RealField semigroup_etd(double t, const RealField& f, const PerturbedOperator& P, double dt);
// Heuristic explicit limit 1 / (2 max|U| k_max) on the retained band.
double etd_stability_bound(const PerturbedOperator& P);

struct ScanResult {
    std::string quantity;
    std::vector<double> x;       // |λ| or t
    std::vector<double> values;
    double slope = 0.0;          // least squares in log-log
    double expected = 0.0;
    double window_lo = 0.0, window_hi = 0.0;

    // x,value,fitted,window_lo,window_hi
    std::string csv() const;
};

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ||R(λ) f|| (ball estimator on |·|) along λ = |λ| e^{i angle}.
ScanResult resolvent_decay_scan(const PerturbedOperator& P, const RealField& f, double angle,
                                const std::vector<double>& magnitudes, const ResolventOptions& opt = {});

// max over probes of ||(-Δ)^{σ/2} R(λ) (-Δ)^{-α/2} p|| / ||p||. The probe
// maximum stands in for the operator norm.
ScanResult smoothing_scan(const PerturbedOperator& P, const std::vector<RealField>& probes, double alpha,
                          double sigma, double angle, const std::vector<double>& magnitudes,
                          const ResolventOptions& opt = {});

enum class SemigroupMethod { contour, etd };

struct SemigroupOptions {
    SemigroupMethod method = SemigroupMethod::contour;
    double theta = 3 * std::numbers::pi / 8;
    int etd_steps = 64;          // per requested time
    ResolventOptions resolvent;
};

RealField apply_semigroup(double t, const RealField& f, const PerturbedOperator& P, const SemigroupOptions& opt = {});

// Normalised t^{(σ-α)/2} max_p ||(-Δ)^{σ/2} S(t) (-Δ)^{-α/2} p|| / ||p||,
// S = e^{-At} for α <= σ and e^{-At} - 1 otherwise. The fitted slope should
// be flat.
ScanResult semigroup_decay_check(const PerturbedOperator& P, const std::vector<RealField>& probes, double alpha,
                                 double sigma, const std::vector<double>& times,
                                 const SemigroupOptions& opt = {});

// max_p ||(-Δ)^{σ/2} [(e^{-At} - 1)/t + A] (-Δ)^{-s/2} p|| / ||p|| against t;
// expected slope (s - σ)/2 - 1.
ScanResult differentiability_check(const PerturbedOperator& P, const std::vector<RealField>& probes, double s,
                                   double sigma, const std::vector<double>& times,
                                   const SemigroupOptions& opt = {});

}  // namespace critflow
