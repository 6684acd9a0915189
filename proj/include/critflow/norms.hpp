#pragma once

#include <string>
#include <vector>

#include "critflow/potential.hpp"

namespace critflow {

enum class Estimator { ball_sup, operator_power, x_iterate };
std::string to_string(Estimator e);

struct NormReport {
    double value = 0.0;
    Estimator estimator = Estimator::ball_sup;
    double alpha = 0.0;
    std::string params;              // opaque key=value list, ';'-separated
    bool converged = true;
    int iterations = 0;              // power iterations or x-depth reached
    std::vector<double> history;     // x_iterate: ||w_n||^{1/2^n} per level

    static std::string csv_header();
    // estimator,alpha,value,converged,"params"
    std::string csv_row() const;
};

struct NormOptions {
    BallFamily balls;                                // empty radii: grid default
    PotentialDomain domain = PotentialDomain::periodic;
    int max_iter = 500;
    double tol = 1e-6;
    int depth = 4;                                   // x_iterate levels beyond w_0
};

// (sup r^{λ-3} ∫_B |f|^p)^{1/p} over the ball family; vector fields use |f|.
NormReport morrey_norm(const RealField& f, double p, double lambda, const NormOptions& opt = {});

// (sup ∫_B |f|² / 4πr)^{1/2}: the ball-capacity monitor.
NormReport vnorm_ball(const RealField& f, const NormOptions& opt = {});

// ||T|| for T g = |f| I_1 g on L², by power iteration on T*T (periodic) or
// TT* = |f| I_2 |f| (whole space). Start vector |f| normalised.
NormReport vnorm_operator(const RealField& f, const NormOptions& opt = {});

// sup_n ||w_n||_{M^{2,2}}^{1/2^n}, w_0 = |u|, w_{n+1} = I_1(w_n²), n <= depth.
// Iterates are kept as exp(l_n) * w_hat with max w_hat = 1 so that only the
// log scale can overflow; log ||w_n|| > 690 raises IterateBlowup.
NormReport xnorm_iterates(const RealField& u, int depth, const NormOptions& opt = {});

// ||(-Δ)^{α/2} f|| with the chosen estimator, α in [-2, 1].
NormReport vnorm_alpha(const RealField& f, double alpha, Estimator est, const NormOptions& opt = {});

// Capacitary Sobolev ratio over the ball family, q = 2p/(2 - αp):
//   sup [∫_B |I_α f|^q / cap B]^{1/q}  /  sup [∫_B |f|^p / cap B]^{1/p}.
double sobolev_embedding_constant(const RealField& f, double p, double alpha,
                                  const NormOptions& opt = {});

// ||f ⊗ g||_{V_{-σ}} / (||f||_{V_{s1}} ||g||_{V_{s2}}), σ + s1 + s2 = 1,
// all with the same estimator. The product is mean-subtracted before the
// negative-order potential.
double holder_product_check(const RealField& f, const RealField& g, double sigma, double s1, double s2,
                            Estimator est = Estimator::ball_sup, const NormOptions& opt = {});

// sup_B ∫_B (Mf)² / cap B  over  sup_B ∫_B f² / cap B, Mf over the family radii.
double maximal_bound_ratio(const RealField& f, const NormOptions& opt = {});

}  // namespace critflow
