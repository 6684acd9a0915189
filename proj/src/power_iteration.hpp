#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "critflow/error.hpp"

namespace critflow::detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct PowerResult {
    double value = 0.0;
    int iterations = 0;
};

// Top eigenvalue of a symmetric positive semidefinite operator, stopping when
// successive Rayleigh quotients agree to tol (relative).
template <typename Apply>
PowerResult power_iterate(std::vector<double> v, Apply&& apply, int max_iter, double tol,
                          const char* what) {
    double nv = std::sqrt(dot(v, v));
    if (nv == 0.0) return {};
    for (double& x : v) x /= nv;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> w = apply(v);
        double rq = dot(v, w);
        double nw = std::sqrt(dot(w, w));
        if (nw == 0.0) return {0.0, it};
        for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / nw;
        if (it > 1 && std::abs(rq - prev) <= tol * std::abs(rq)) return {rq, it};
        prev = rq;
    }
    fail(ErrorKind::NoConvergence, std::string(what) + ": power iteration did not settle in " +
                                       std::to_string(max_iter) + " steps");
}

}  // namespace critflow::detail
