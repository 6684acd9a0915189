#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "critflow/field.hpp"

namespace critflow {

// Sampled ball family: dyadic radii and a centre stride.
struct BallFamily {
    std::vector<double> radii;
    int stride = 2;
};

// {2h, 4h, ...} up to and including L/4.
std::vector<double> dyadic_radii(const Grid& g);
BallFamily default_balls(const Grid& g);

// Periodic ball sums S_r(x) = sum of q over nodes within distance r of x,
// computed by FFT convolution with the discrete ball indicator.
class BallScan {
public:
    BallScan(const Grid& g, std::vector<double> radii);

    const std::vector<double>& radii() const { return radii_; }
    std::size_t lattice_count(std::size_t r) const { return counts_[r]; }
    // Quadrature weight turning a node sum into an integral over B_r:
    // vol(B_r) / count, which makes constants integrate exactly.
    double weight(std::size_t r) const;

    // Node sums for every radius; q must be scalar.
    std::vector<std::vector<double>> sums(const RealField& q) const;

private:
    Grid grid_;
    std::vector<double> radii_;
    std::vector<std::size_t> counts_;
    std::vector<std::shared_ptr<const std::vector<cplx>>> kernels_;
};

struct BallSup {
    double value = 0.0;
    double radius = 0.0;
    std::size_t centre = 0;
};

// sup over family centres and radii of weight(r) * integral_{B_r(x)} q.
BallSup ball_supremum(const RealField& q, const BallFamily& family,
                      const std::function<double(double)>& weight);

struct RieszPotential {
    RealField potential;
    std::vector<double> subtracted_mean;  // per component
};

// (-Δ)^{-γ/2} applied to the mean-zero part, γ in (0, 3).
RieszPotential riesz_potential(const RealField& f, double gamma);
// c(3, γ) = Γ((3-γ)/2) / (2^γ π^{3/2} Γ(γ/2)), the whole-space kernel constant.
double riesz_kernel_constant(double gamma);
// Minimum over nodes of the zero-mean periodic kernel of (-Δ)^{-γ/2}. For
// f >= 0 of mass m, I_γ(f - mean) - m * minimum is nonnegative.
double torus_kernel_minimum(const Grid& g, double gamma);

// Whole-space Riesz potential c(3,γ)|x|^{γ-3} * f of box data, computed by
// zero-padded (Hockney) convolution on a doubled grid. The singular self
// cell uses the exact cell average of the kernel.
class FreeSpacePotential {
public:
    FreeSpacePotential(const Grid& g, double gamma);
    RealField apply(const RealField& f) const;
    double gamma() const { return gamma_; }

private:
    Grid grid_;
    Grid padded_;
    double gamma_;
    std::shared_ptr<const std::vector<cplx>> kernel_hat_;
};

// Which Riesz potential an estimator uses: the periodic mean-zero operator
// or the zero-padded whole-space convolution (for data in the central cube).
enum class PotentialDomain { periodic, whole_space };
std::string to_string(PotentialDomain d);

// I_γ f on the chosen domain (scalar f). Whole-space kernels are cached per grid.
RealField apply_riesz(const RealField& f, double gamma, PotentialDomain domain);

// Pointwise sup over radii of ball averages of |f| at every node.
RealField maximal_function(const RealField& f, const std::vector<double>& radii);

// Pointwise ratio I_α f / (||f||_{M^{p,βp}}^{α/β} (Mf)^{(β-α)/β}), maximised over nodes.
// Potential, Morrey norm and Mf are whole-space (zero-padded), radii 2h .. L/2;
// only nodes whose largest sampled ball contains all of f are scanned.
double adams_constant(const RealField& f, double alpha, double beta, double p);

}  // namespace critflow
