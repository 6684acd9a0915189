#pragma once

#include <vector>

#include "critflow/field.hpp"
#include "critflow/multiplier.hpp"

namespace critflow {

// Transforms. Forward carries 1/N^3 so the zero mode is the mean.
SpectralField forward_transform(const RealField& f);
SpectralField forward_transform(const ComplexField& f);
// Rejects spectra whose inverse has an imaginary part above 1e-9 relative.
RealField inverse_transform(const SpectralField& F);
ComplexField inverse_transform_complex(const SpectralField& F);

SpectralField apply_multiplier(const SpectralField& F, const MultiplierSymbol& m);
RealField apply_multiplier(const RealField& f, const MultiplierSymbol& m);

// Spectral-space operators. Every operator also has a physical overload that
// round-trips through the transforms.
SpectralField fractional_laplacian(const SpectralField& F, double alpha);
SpectralField riesz_transform(const SpectralField& F, int axis);
SpectralField leray_project(const SpectralField& V);
SpectralField inverse_laplacian(const SpectralField& F);
SpectralField laplacian(const SpectralField& F);
SpectralField gradient(const SpectralField& F);          // scalar -> vector
SpectralField divergence(const SpectralField& V);        // vector -> scalar
SpectralField tensor_divergence(const SpectralField& T); // (div T)_i = sum_j d_j T_ji

RealField fractional_laplacian(const RealField& f, double alpha);
RealField riesz_transform(const RealField& f, int axis);
RealField leray_project(const RealField& v);
RealField inverse_laplacian(const RealField& f);
RealField laplacian(const RealField& f);
RealField gradient(const RealField& f);
RealField divergence(const RealField& v);
RealField tensor_divergence(const RealField& T);

// Zero every mode with some |m_i| > N/3.
void dealias(SpectralField& F);
bool retained_by_dealiasing(const Grid& g, std::size_t idx);

// Physical outer product (u ⊗ v)_ij = u_i v_j followed by two-thirds truncation.
SpectralField dealiased_tensor_product_spectral(const RealField& u, const RealField& v);
RealField dealiased_tensor_product(const RealField& u, const RealField& v);

// Norms and helpers.
double spectral_l2(const SpectralField& F);  // sqrt(sum |c|^2), equals the RMS of the field
double rms(const RealField& f);              // sqrt(mean of sum_c f_c^2)
double max_abs(const RealField& f);
std::vector<double> component_means(const RealField& f);
double max_abs_mean(const SpectralField& F);
RealField subtract_mean(const RealField& f);
RealField pointwise_magnitude(const RealField& f);  // Euclidean / Frobenius per node
RealField pointwise_magnitude(const ComplexField& f);
double divergence_norm(const RealField& v);         // spectral L2 of div v
double divergence_norm(const SpectralField& V);

// Throws NonZeroMean if any component mean exceeds tol relative to the field size.
void require_mean_zero(const SpectralField& F, const char* what, double tol = 1e-12);

}  // namespace critflow
