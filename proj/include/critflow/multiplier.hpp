#pragma once

#include <array>
#include <functional>
#include <optional>

#include "critflow/grid.hpp"

namespace critflow {

using Mat3c = std::array<std::array<cplx, 3>, 3>;

// Fourier multiplier: a scalar symbol acts componentwise, a matrix symbol maps
// vector fields to vector fields. The zero mode is handled separately through
// zero_mode_value (scalar case) since homogeneous symbols are singular there.
class MultiplierSymbol {
public:
    using ScalarFn = std::function<cplx(const Wavevector&)>;
    using MatrixFn = std::function<Mat3c(const Wavevector&)>;

    static MultiplierSymbol scalar(ScalarFn fn, std::optional<double> homogeneity = std::nullopt,
                                   cplx zero_mode_value = 0.0);
    static MultiplierSymbol matrix(MatrixFn fn, std::optional<double> homogeneity = std::nullopt);

    // Common symbols.
    static MultiplierSymbol identity();
    static MultiplierSymbol fractional(double alpha);  // |k|^alpha
    static MultiplierSymbol inverse_laplacian();       // -1/|k|^2
    static MultiplierSymbol riesz(int axis);           // i k_j / |k|
    static MultiplierSymbol derivative(int axis);      // i k_j
    static MultiplierSymbol leray();                   // I - k k^T / |k|^2

    bool is_matrix() const { return static_cast<bool>(matrix_); }
    std::optional<double> homogeneity() const { return homogeneity_; }
    cplx zero_mode_value() const { return zero_mode_; }

    cplx eval(const Wavevector& w) const;
    Mat3c eval_matrix(const Wavevector& w) const;

    // (this ∘ other): apply `other` first. Homogeneities add when both are known.
    MultiplierSymbol compose(const MultiplierSymbol& other) const;

private:
    ScalarFn scalar_;
    MatrixFn matrix_;
    std::optional<double> homogeneity_;
    cplx zero_mode_ = 0.0;
};

}  // namespace critflow
