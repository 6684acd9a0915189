#pragma once

#include <optional>
#include <string>
#include <vector>

#include "critflow/norms.hpp"

namespace critflow {

// Divergence-free, mean-zero representative of the force; only ℙF enters.
struct ForceSpec {
    enum class Kind { manufactured, mollified_singular, explicit_field };
    ForceSpec(Kind k, RealField force) : kind(k), F(std::move(force)) {}

    Kind kind;
    RealField F;
    std::optional<RealField> u_star;  // manufactured only
    double amplitude = 0.0;           // mollified_singular only
    double core = 0.0;

    // amplitude * ℙ(unit-mass Gaussian of width `core` times e_1, minus its mean)
    static ForceSpec mollified_singular(const Grid& g, double amplitude, double core);
    // ℙF; F must be mean-zero.
    static ForceSpec explicit_force(const RealField& F);
};

std::string to_string(ForceSpec::Kind k);

// F = ℙ(-ΔU* + ∇·(U*⊗U*)), with the same dealiased product the solver uses,
// so U* is an exact fixed point. Throws NotSolenoidal for divergent U*.
ForceSpec manufacture_force(const RealField& u_star);

// U_0 = -Δ^{-1} ℙ F.
RealField u0_from_force(const ForceSpec& force);
RealField u0_from_force(const RealField& F);

// B(U, V) = Δ^{-1} ℙ ∇·(U ⊗ V), dealiased.
RealField bilinear_B(const RealField& U, const RealField& V);

enum class SolveStatus { Converged, NoContraction, MaxIter };
std::string to_string(SolveStatus s);

struct PicardOptions {
    double tol = 1e-10;           // increment (ball estimator) relative to ||U_0||
    int max_iter = 200;
    int divergence_run = 5;       // consecutive increment ratios > 1 before NoContraction
    double bound_slack = 0.2;     // ||U|| <= 2 ||U_0|| (1 + slack)
    std::optional<RealField> start;  // x_0, default U_0
    NormOptions norms;
};

struct StationarySolveResult {
    RealField U;
    RealField U0;
    std::vector<double> iterate_norms;       // vnorm_ball(x_k), k = 0, 1, ...
    std::vector<double> increments;          // vnorm_ball(x_{k+1} - x_k)
    std::vector<double> contraction_ratios;  // increments[k] / increments[k-1]
    double residual = 0.0;                   // integral-form residual of the final U
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIter;
    double norm_U = 0.0;                     // ball estimator, final
    double norm_U0 = 0.0;
    bool bound_holds = false;                // ||U|| <= 2 ||U_0|| (1 + slack), on Converged

    // k,vnorm_ball,increment,ratio
    std::string iterate_log_csv() const;
};

// x_{k+1} = B(x_k, x_k) + U_0. Failures are reported through `status`.
StationarySolveResult picard_solve(const ForceSpec& force, const PicardOptions& opt = {});
// Throws NoContraction or NoConvergence unless the solve converged.
void require_converged(const StationarySolveResult& r);

struct Residual {
    double integral = 0.0;  // ||U - B(U,U) - U_0|| spectral L2
    double momentum = 0.0;  // ||ℙ(-ΔU + ∇·(U⊗U) - F)|| spectral L2
};
Residual residual(const RealField& U, const ForceSpec& force);

// Largest ||B(U,V)|| / (||U|| ||V||) over a fixed set of solenoidal pairs
// (operator estimator): the empirical bilinear constant.
double calibrate_bilinear_constant(const Grid& g, const NormOptions& opt = {});

struct SmallnessReport {
    double delta = 0.0;                  // vnorm_operator((-Δ)^{-1} ℙF)
    double bilinear_constant = 0.0;
    double predicted_contraction = 0.0;  // 4 C δ
};
SmallnessReport smallness_report(const ForceSpec& force, double bilinear_constant,
                                 const NormOptions& opt = {});

}  // namespace critflow
