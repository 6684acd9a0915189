#pragma once

#include <string>

#include "critflow/potential.hpp"

namespace critflow {

// Settings for the four trace-inequality constants of a density ν.
struct CharFamily {
    BallFamily balls;         // ball masks for A3 and A4 (empty radii: grid default)
    int max_iter = 500;       // power iterations for A1 and A2
    double tol = 1e-6;        // Rayleigh-quotient relative change
    std::string descriptor = "dyadic balls";
};

struct CharConstants {
    double A1 = 0.0;  // sup ∫u²dν / ∫|∇u|², finite-difference Dirichlet form
    double A2 = 0.0;  // ||g -> √ν I_1 g||², spectral Riesz potential
    double A3 = 0.0;  // sup over balls ν(B) / cap(B)
    double A4 = 0.0;  // sqrt(sup over balls ∫_B (I_1 ν)² / cap(B))
    int iterations_A1 = 0;
    int iterations_A2 = 0;
    std::string family;

    double max() const;
    double min() const;
};

// ν must be a nonnegative scalar density supported in the central cube.
CharConstants char_constants(const RealField& nu, CharFamily family = {});

}  // namespace critflow
