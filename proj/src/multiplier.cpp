#include "critflow/multiplier.hpp"

#include <cmath>

#include "critflow/error.hpp"

namespace critflow {

MultiplierSymbol MultiplierSymbol::scalar(ScalarFn fn, std::optional<double> homogeneity,
                                          cplx zero_mode_value) {
    MultiplierSymbol s;
    s.scalar_ = std::move(fn);
    s.homogeneity_ = homogeneity;
    s.zero_mode_ = zero_mode_value;
    return s;
}

MultiplierSymbol MultiplierSymbol::matrix(MatrixFn fn, std::optional<double> homogeneity) {
    MultiplierSymbol s;
    s.matrix_ = std::move(fn);
    s.homogeneity_ = homogeneity;
    return s;
}

MultiplierSymbol MultiplierSymbol::identity() {
    return scalar([](const Wavevector&) { return cplx(1.0); }, 0.0, 1.0);
}

MultiplierSymbol MultiplierSymbol::fractional(double alpha) {
    return scalar([alpha](const Wavevector& w) { return cplx(std::pow(w.norm, alpha)); }, alpha);
}

MultiplierSymbol MultiplierSymbol::inverse_laplacian() {
    return scalar([](const Wavevector& w) { return cplx(-1.0 / (w.norm * w.norm)); }, -2.0);
}

MultiplierSymbol MultiplierSymbol::riesz(int axis) {
    require(axis >= 0 && axis < 3, ErrorKind::InvalidConfig, "axis must be 0, 1 or 2");
    return scalar(
        [axis](const Wavevector& w) {
            double n2 = 0.0;
            for (double c : w.k_odd) n2 += c * c;
            if (n2 == 0.0) return cplx(0.0);
            return cplx(0.0, w.k_odd[axis] / std::sqrt(n2));
        },
        0.0);
}

MultiplierSymbol MultiplierSymbol::derivative(int axis) {
    require(axis >= 0 && axis < 3, ErrorKind::InvalidConfig, "axis must be 0, 1 or 2");
    return scalar([axis](const Wavevector& w) { return cplx(0.0, w.k_odd[axis]); }, 1.0);
}

MultiplierSymbol MultiplierSymbol::leray() {
    return matrix(
        [](const Wavevector& w) {
            Mat3c p{};
            double n2 = 0.0;
            for (double c : w.k_odd) n2 += c * c;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    p[a][b] = (a == b ? 1.0 : 0.0) -
                              (n2 > 0.0 ? w.k_odd[a] * w.k_odd[b] / n2 : 0.0);
            return p;
        },
        0.0);
}

cplx MultiplierSymbol::eval(const Wavevector& w) const {
    require(!is_matrix(), ErrorKind::RankMismatch, "matrix symbol evaluated as scalar");
    return scalar_(w);
}

Mat3c MultiplierSymbol::eval_matrix(const Wavevector& w) const {
    if (is_matrix()) return matrix_(w);
    Mat3c m{};
    cplx s = scalar_(w);
    for (int a = 0; a < 3; ++a) m[a][a] = s;
    return m;
}

MultiplierSymbol MultiplierSymbol::compose(const MultiplierSymbol& other) const {
    std::optional<double> h;
    if (homogeneity_ && other.homogeneity_) h = *homogeneity_ + *other.homogeneity_;
    if (!is_matrix() && !other.is_matrix()) {
        auto a = scalar_, b = other.scalar_;
        return scalar([a, b](const Wavevector& w) { return a(w) * b(w); }, h,
                      zero_mode_ * other.zero_mode_);
    }
    MultiplierSymbol self = *this, rhs = other;
    return matrix(
        [self, rhs](const Wavevector& w) {
            Mat3c a = self.eval_matrix(w), b = rhs.eval_matrix(w), c{};
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
            return c;
        },
        h);
}

}  // namespace critflow
