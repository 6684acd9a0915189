#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "critflow/field.hpp"

namespace critflow {

// Field builders shared by tests, scenarios and the regression family.
// Compact profiles are centred on the box centre (node N/2 per axis).

using Point = std::array<double, 3>;

// Scalar field from a function of the offset x - centre.
RealField sample_scalar(const Grid& g, const std::function<double(const Point&)>& fn);
// Vector field from a function of the node coordinate x (not offset).
RealField sample_vector(const Grid& g, const std::function<Point(const Point&)>& fn);

// Smooth radial cutoff: 1 on [0, 1/2], 0 on [1, inf), C-infinity in between.
double smooth_cutoff(double s);

RealField gaussian_bump(const Grid& g, double width, double amplitude = 1.0);
// Unit mass (discrete sum times h^3 equals 1) Gaussian density.
RealField gaussian_density(const Grid& g, double width);
// amplitude / sqrt(|x|^2 + core^2) times smooth_cutoff(|x| / cutoff): the
// mollified critical |x|^{-1} profile. Dilation by lambda maps
// (core, cutoff) to (core, cutoff) / lambda exactly.
RealField critical_profile(const Grid& g, double core, double cutoff, double amplitude = 1.0);
RealField ball_indicator(const Grid& g, double radius);

// Random band-limited field: Gaussian coefficients on |m_i| <= kmax,
// Hermitian, mean zero. Vector fields are Leray-projected when solenoidal.
RealField random_band_limited(const Grid& g, Rank rank, int kmax, std::uint64_t seed,
                              bool solenoidal = false);
// Random-phase solenoidal field with |w_hat(k)|^2 ~ |k|^{-spectral_slope},
// supported on the dealiased band, scaled to unit RMS.
RealField random_broadband(const Grid& g, double spectral_slope, std::uint64_t seed);

// Divergence-free periodic flows.
RealField taylor_green(const Grid& g, double amplitude);
// ABC flow on wavenumber shell m: curl u = (2 pi m / L) u, so u.grad u is a gradient.
RealField beltrami(const Grid& g, double amplitude, int m = 1);
// Single divergence-free mode cos(k.x) e with k = 2 pi m / L and e ⟂ m.
RealField single_mode(const Grid& g, std::array<int, 3> m, double amplitude = 1.0);
// Probe family used for empirical operator norms: single modes along
// (j,0,0), (j,j,0), (j,j,j) for j = 1 .. jmax.
std::vector<RealField> probe_family(const Grid& g, int jmax);

// The fixed regression family for estimator comparisons, all supported in
// the central cube (so grid-commensurate dilates stay exact):
//   critical core 2h / 4h with cutoff L/4, Gaussian bump width L/20,
//   ball indicator radius L/10, and two Gaussian bumps L/6 apart.
struct NamedField {
    std::string name;
    RealField field;
};
std::vector<NamedField> regression_family(const Grid& g);

// Grid-commensurate dilation by 2 about the box centre:
// out(x) = factor * f(2 (x - c) + c), an exact node relabelling; nodes whose
// preimage leaves the box are zero (no periodic images).
RealField dilate_about_centre(const RealField& f, double factor);
// Same about the origin (for periodic fields): out(x) = factor * f(2x).
RealField dilate_periodic(const RealField& f, double factor);

}  // namespace critflow
