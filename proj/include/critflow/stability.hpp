#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "critflow/norms.hpp"
#include "critflow/perturbed.hpp"
#include "critflow/stationary.hpp"

namespace critflow {

// Mild solutions of ∂_t w + A w + ℙ∇·(w⊗w) = 0, w = u - U.
//   perturbed_semigroup: exponential factor e^{-A h} (Krylov), Duhamel term ℙ∇·(w⊗w)
//   heat_duhamel:        exponential factor e^{Δh} (exact), Duhamel term B w + ℙ∇·(w⊗w)
// Both march with Cox-Matthews ETD2RK, so they agree to O(dt²).
enum class MildScheme { perturbed_semigroup, heat_duhamel };
std::string to_string(MildScheme s);

struct StabilityConfig {
    double sigma0 = 0.75;
    double sigma1 = 0.25;
    std::vector<double> sigmas{0.0, 0.25, 0.5, 0.75};
    std::vector<double> alphas{-1.0, -0.5, 0.0};
    double epsilon = 1e-2;
    double dt = 5e-3;
    double window_lo = 0.0;          // 0: 10 dt
    double window_hi = 0.0;          // 0: 0.1 L² / 4π²
    double horizon = 0.0;            // 0: window_hi
    int checkpoints = 16;            // geometric in t, snapped to the step grid
    std::vector<double> checkpoint_times;  // overrides checkpoints when set
    double krylov_tol = 1e-12;
    int krylov_max_dim = 40;
    double scheme_tol = 1e-5;        // uniqueness_check threshold
    NormOptions norms;

    void validate() const;
    double fit_lo() const;
    double fit_hi(const Grid& g) const;
    double end_time(const Grid& g) const;
    // Checkpoint times actually used, all multiples of dt.
    std::vector<double> schedule(const Grid& g) const;
};

struct EvolutionTrace {
    explicit EvolutionTrace(RealField initial) : w0(std::move(initial)) {}

    MildScheme scheme = MildScheme::heat_duhamel;
    Estimator estimator = Estimator::ball_sup;
    double dt = 0.0;
    std::vector<double> sigmas;
    std::vector<double> times;                 // checkpoints, strictly increasing, > 0
    std::vector<std::vector<double>> raw;      // raw[s][i] = ||(-Δ)^{σ_s/2} w(t_i)||
    std::vector<RealField> snapshots;          // w(t_i)
    std::vector<double> divergence;            // spectral div of w(t_i), relative to rms
    // ||(w_{n+1} - w_{n-1})/2dt + A w_n + ℙ∇·(w_n⊗w_n)|| / ||A³ w_n||, which
    // should stay below a small multiple of dt²
    std::vector<double> residual;
    RealField w0;
    NormOptions norms;

    double weighted(std::size_t s, std::size_t i) const;
    std::size_t sigma_index(double sigma) const;   // InvalidConfig if absent
    // t,sigma,weighted_norm,raw_norm,scheme,estimator
    std::string csv() const;
};

// pre: w0 divergence-free, mean zero. Unstable when the L² norm doubles in a
// step or stops being finite.
EvolutionTrace evolve_mild(const RealField& w0, const PerturbedOperator& P, const StabilityConfig& cfg,
                           MildScheme scheme);

// One step of the chosen scheme (exposed for order tests).
RealField mild_step(const RealField& w, const PerturbedOperator& P, double dt, MildScheme scheme,
                    const StabilityConfig& cfg = {});

struct DecayFunctional {
    double sigma = 0.0;
    double sup = 0.0;        // sup over the window of t^{σ/2} ||(-Δ)^{σ/2} w||
    double exponent = 0.0;   // fitted slope of ||(-Δ)^{σ/2} w|| against t in the window
    int points = 0;
};

DecayFunctional decay_functionals(const EvolutionTrace& trace, double sigma, double lo, double hi);

// sup over checkpoints in [lo, hi] of t^{α/2} ||(-Δ)^{α/2}(w(t) - w0)||.
double initial_attainment_check(const EvolutionTrace& trace, double alpha, double lo, double hi);

// Same functionals for the free heat flow of w0, computed with exact
// multipliers; these set the calibration constants.
double heat_calibration(const RealField& w0, double sigma, const std::vector<double>& times,
                        const NormOptions& opt = {});
double heat_attainment_calibration(const RealField& w0, double alpha, const std::vector<double>& times,
                                   const NormOptions& opt = {});

// max over checkpoints of ||w_a - w_b|| / ||w_b|| (spectral L²). Throws
// SchemesDisagree above cfg.scheme_tol unless `check` is false.
double uniqueness_check(const EvolutionTrace& a, const EvolutionTrace& b, const StabilityConfig& cfg,
                        bool check = true);

// Unit profile generator; the experiment rescales so that ||w0||_V = ε.
using PerturbationGenerator = std::function<RealField(const Grid&)>;
// Random-phase solenoidal field with |ŵ(k)|² ~ |k|^{-3}: every ||(-Δ)^{σ/2} e^{tΔ} w0||
// then scales like t^{-σ/2} between the grid and box scales.
PerturbationGenerator broadband_perturbation(std::uint64_t seed);
PerturbationGenerator beltrami_perturbation(int m = 1);

RealField scaled_perturbation(const PerturbationGenerator& gen, const Grid& g, double epsilon,
                              const NormOptions& opt = {});

struct StabilityReport {
    double epsilon = 0.0;
    double norm_w0 = 0.0;            // ||w0||_V
    double norm_U = 0.0;
    SolveStatus stationary_status = SolveStatus::Converged;
    std::vector<EvolutionTrace> traces;   // one per scheme run
    double scheme_gap = 0.0;              // 0 when only one scheme ran
    std::vector<DecayFunctional> decay;   // per cfg.sigmas, first trace
    std::vector<double> calibration;      // heat_calibration per σ
    std::vector<double> attainment;       // per cfg.alphas
    std::vector<double> attainment_calibration;
    double max_residual = 0.0;
    double max_divergence = 0.0;
    bool unstable = false;
    bool decaying = true;                 // σ = 0 norm smaller at window end than start
    std::string note;

    std::string summary_csv() const;  // quantity,parameter,value
};

struct ExperimentOptions {
    std::vector<MildScheme> schemes{MildScheme::perturbed_semigroup, MildScheme::heat_duhamel};
    PicardOptions picard;
    bool catch_unstable = false;      // record Unstable in the report instead of throwing
};

// solve U -> build A -> w0 = ε·profile -> evolve -> functionals and residuals.
// Stage errors are rethrown with the stage name prefixed.
StabilityReport stability_experiment(const ForceSpec& F, const PerturbationGenerator& gen,
                                     const StabilityConfig& cfg, const ExperimentOptions& opt = {});
// Same pipeline from a given frozen field.
StabilityReport stability_experiment(const PerturbedOperator& P, const PerturbationGenerator& gen,
                                     const StabilityConfig& cfg, const ExperimentOptions& opt = {});

// Largest ε of the list whose run is stable and decaying (heat_duhamel only);
// 0 when none is.
double epsilon_crossover(const PerturbedOperator& P, const PerturbationGenerator& gen, StabilityConfig cfg,
                         const std::vector<double>& epsilons);

}  // namespace critflow
