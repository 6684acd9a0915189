#include "critflow/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace critflow {

namespace {

template <typename Fn>
void for_each_mode(const Grid& g, Fn&& fn) {
    const int n = g.n();
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k, ++idx) fn(idx, i, j, k);
}

double field_scale(const SpectralField& F) { return spectral_l2(F); }

std::size_t mirror(const Grid& g, std::size_t idx) {
    auto ijk = g.unflat(idx);
    const int n = g.n();
    return g.flat((n - ijk[0]) % n, (n - ijk[1]) % n, (n - ijk[2]) % n);
}

// Make the spectrum of a real field exactly Hermitian so that every
// Hermitian-preserving multiplier keeps it exactly Hermitian.
void symmetrize(SpectralField& F) {
    const Grid& g = F.grid();
    for (int c = 0; c < F.components(); ++c) {
        auto d = F.component(c);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            std::size_t p = mirror(g, idx);
            if (p < idx) continue;
            if (p == idx) {
                d[idx] = d[idx].real();
                continue;
            }
            cplx avg = 0.5 * (d[idx] + std::conj(d[p]));
            d[idx] = avg;
            d[p] = std::conj(avg);
        }
    }
}

double hermitian_defect(const SpectralField& F) {
    const Grid& g = F.grid();
    double defect = 0.0, scale = 0.0;
    for (int c = 0; c < F.components(); ++c) {
        auto d = F.component(c);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            scale = std::max(scale, std::abs(d[idx]));
            defect = std::max(defect, std::abs(d[idx] - std::conj(d[mirror(g, idx)])));
        }
    }
    return scale > 0.0 ? defect / scale : 0.0;
}

}  // namespace

// ---------------------------------------------------------------- transforms

SpectralField forward_transform(const RealField& f) {
    require(f.all_finite(), ErrorKind::InvalidField, "non-finite sample in field");
    const Grid& g = f.grid();
    SpectralField out(g, f.rank());
    std::vector<cplx> buf(g.size());
    for (int c = 0; c < f.components(); ++c) {
        auto src = f.component(c);
        std::copy(src.begin(), src.end(), buf.begin());
        g.forward(buf.data(), out.component(c).data());
    }
    symmetrize(out);
    return out;
}

SpectralField forward_transform(const ComplexField& f) {
    require(f.all_finite(), ErrorKind::InvalidField, "non-finite sample in field");
    const Grid& g = f.grid();
    SpectralField out(g, f.rank());
    for (int c = 0; c < f.components(); ++c)
        g.forward(f.component(c).data(), out.component(c).data());
    return out;
}

ComplexField inverse_transform_complex(const SpectralField& F) {
    require(F.all_finite(), ErrorKind::InvalidField, "non-finite coefficient");
    const Grid& g = F.grid();
    ComplexField out(g, F.rank());
    for (int c = 0; c < F.components(); ++c)
        g.inverse(F.component(c).data(), out.component(c).data());
    return out;
}

RealField inverse_transform(const SpectralField& F) {
    double defect = hermitian_defect(F);
    if (defect > 1e-9)
        fail(ErrorKind::AsymmetricSpectrum,
             "spectrum violates Hermitian symmetry by " + std::to_string(defect));
    ComplexField z = inverse_transform_complex(F);
    RealField out(F.grid(), F.rank());
    for (std::size_t i = 0; i < z.data().size(); ++i) out.data()[i] = z.data()[i].real();
    return out;
}

// ---------------------------------------------------------------- multipliers

SpectralField apply_multiplier(const SpectralField& F, const MultiplierSymbol& m) {
    const Grid& g = F.grid();
    SpectralField out(g, F.rank());
    if (m.is_matrix()) {
        require_rank(F.rank(), Rank::vector, "matrix symbol needs a vector field");
        for_each_mode(g, [&](std::size_t idx, int, int, int) {
            if (idx == 0) return;
            Mat3c s = m.eval_matrix(g.wavevector(idx));
            for (int a = 0; a < 3; ++a) {
                cplx acc = 0.0;
                for (int b = 0; b < 3; ++b) acc += s[a][b] * F.at(b, idx);
                out.at(a, idx) = acc;
            }
        });
        return out;
    }
    auto h = m.homogeneity();
    if (h && *h < 0.0) require_mean_zero(F, "negative-order multiplier");
    for_each_mode(g, [&](std::size_t idx, int, int, int) {
        cplx s = idx == 0 ? m.zero_mode_value() : m.eval(g.wavevector(idx));
        for (int c = 0; c < F.components(); ++c) out.at(c, idx) = s * F.at(c, idx);
    });
    return out;
}

RealField apply_multiplier(const RealField& f, const MultiplierSymbol& m) {
    return inverse_transform(apply_multiplier(forward_transform(f), m));
}

void require_mean_zero(const SpectralField& F, const char* what, double tol) {
    double mean = max_abs_mean(F);
    double scale = field_scale(F);
    if (mean > tol * scale && mean > 1e-300)
        fail(ErrorKind::NonZeroMean, std::string(what) + ": field mean " + std::to_string(mean) +
                                         " is not zero");
}

SpectralField fractional_laplacian(const SpectralField& F, double alpha) {
    require(std::isfinite(alpha) && alpha >= -4.0 && alpha <= 4.0, ErrorKind::UnsupportedOrder,
            "fractional order must lie in [-4, 4]");
    if (alpha < 0.0) require_mean_zero(F, "fractional_laplacian");
    const Grid& g = F.grid();
    const auto& k2 = g.k2();
    SpectralField out(g, F.rank());
    const double e = 0.5 * alpha;
    for (std::size_t idx = 1; idx < g.size(); ++idx) {
        double s = alpha == 0.0 ? 1.0 : std::pow(k2[idx], e);
        for (int c = 0; c < F.components(); ++c) out.at(c, idx) = s * F.at(c, idx);
    }
    return out;
}

SpectralField riesz_transform(const SpectralField& F, int axis) {
    require_mean_zero(F, "riesz_transform");
    return apply_multiplier(F, MultiplierSymbol::riesz(axis));
}

SpectralField leray_project(const SpectralField& V) {
    require_rank(V.rank(), Rank::vector, "leray_project needs a vector field");
    require_mean_zero(V, "leray_project");
    const Grid& g = V.grid();
    SpectralField out(g, Rank::vector);
    for_each_mode(g, [&](std::size_t idx, int i, int j, int k) {
        if (idx == 0) return;
        double kv[3] = {g.odd_wavenumber(i), g.odd_wavenumber(j), g.odd_wavenumber(k)};
        double n2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
        cplx v[3] = {V.at(0, idx), V.at(1, idx), V.at(2, idx)};
        if (n2 == 0.0) {
            for (int a = 0; a < 3; ++a) out.at(a, idx) = v[a];
            return;
        }
        cplx kd = (kv[0] * v[0] + kv[1] * v[1] + kv[2] * v[2]) / n2;
        for (int a = 0; a < 3; ++a) out.at(a, idx) = v[a] - kv[a] * kd;
    });
    return out;
}

SpectralField inverse_laplacian(const SpectralField& F) {
    require_mean_zero(F, "inverse_laplacian");
    const Grid& g = F.grid();
    const auto& k2 = g.k2();
    SpectralField out(g, F.rank());
    for (std::size_t idx = 1; idx < g.size(); ++idx)
        for (int c = 0; c < F.components(); ++c) out.at(c, idx) = -F.at(c, idx) / k2[idx];
    return out;
}

SpectralField laplacian(const SpectralField& F) {
    const Grid& g = F.grid();
    const auto& k2 = g.k2();
    SpectralField out(g, F.rank());
    for (std::size_t idx = 0; idx < g.size(); ++idx)
        for (int c = 0; c < F.components(); ++c) out.at(c, idx) = -k2[idx] * F.at(c, idx);
    return out;
}

SpectralField gradient(const SpectralField& F) {
    require_rank(F.rank(), Rank::scalar, "gradient needs a scalar field");
    const Grid& g = F.grid();
    SpectralField out(g, Rank::vector);
    for_each_mode(g, [&](std::size_t idx, int i, int j, int k) {
        cplx f = F.at(0, idx);
        out.at(0, idx) = cplx(0.0, g.odd_wavenumber(i)) * f;
        out.at(1, idx) = cplx(0.0, g.odd_wavenumber(j)) * f;
        out.at(2, idx) = cplx(0.0, g.odd_wavenumber(k)) * f;
    });
    return out;
}

SpectralField divergence(const SpectralField& V) {
    require_rank(V.rank(), Rank::vector, "divergence needs a vector field");
    const Grid& g = V.grid();
    SpectralField out(g, Rank::scalar);
    for_each_mode(g, [&](std::size_t idx, int i, int j, int k) {
        out.at(0, idx) = cplx(0.0, 1.0) * (g.odd_wavenumber(i) * V.at(0, idx) +
                                           g.odd_wavenumber(j) * V.at(1, idx) +
                                           g.odd_wavenumber(k) * V.at(2, idx));
    });
    return out;
}

SpectralField tensor_divergence(const SpectralField& T) {
    require_rank(T.rank(), Rank::tensor, "tensor_divergence needs a tensor field");
    const Grid& g = T.grid();
    SpectralField out(g, Rank::vector);
    for_each_mode(g, [&](std::size_t idx, int i, int j, int k) {
        double kv[3] = {g.odd_wavenumber(i), g.odd_wavenumber(j), g.odd_wavenumber(k)};
        for (int a = 0; a < 3; ++a) {
            cplx acc = 0.0;
            for (int b = 0; b < 3; ++b) acc += kv[b] * T.at(tensor_index(b, a), idx);
            out.at(a, idx) = cplx(0.0, 1.0) * acc;
        }
    });
    return out;
}

RealField fractional_laplacian(const RealField& f, double alpha) {
    return inverse_transform(fractional_laplacian(forward_transform(f), alpha));
}
RealField riesz_transform(const RealField& f, int axis) {
    return inverse_transform(riesz_transform(forward_transform(f), axis));
}
RealField leray_project(const RealField& v) {
    return inverse_transform(leray_project(forward_transform(v)));
}
RealField inverse_laplacian(const RealField& f) {
    return inverse_transform(inverse_laplacian(forward_transform(f)));
}
RealField laplacian(const RealField& f) {
    return inverse_transform(laplacian(forward_transform(f)));
}
RealField gradient(const RealField& f) {
    return inverse_transform(gradient(forward_transform(f)));
}
RealField divergence(const RealField& v) {
    return inverse_transform(divergence(forward_transform(v)));
}
RealField tensor_divergence(const RealField& T) {
    return inverse_transform(tensor_divergence(forward_transform(T)));
}

// ---------------------------------------------------------------- products

bool retained_by_dealiasing(const Grid& g, std::size_t idx) {
    auto ijk = g.unflat(idx);
    const int n = g.n();
    for (int d = 0; d < 3; ++d)
        if (3 * std::abs(g.mode(ijk[d])) > n) return false;
    return true;
}

void dealias(SpectralField& F) {
    const Grid& g = F.grid();
    const int n = g.n();
    std::vector<char> keep(n);
    for (int i = 0; i < n; ++i) keep[i] = 3 * std::abs(g.mode(i)) <= n;
    for_each_mode(g, [&](std::size_t idx, int i, int j, int k) {
        if (keep[i] && keep[j] && keep[k]) return;
        for (int c = 0; c < F.components(); ++c) F.at(c, idx) = 0.0;
    });
}

SpectralField dealiased_tensor_product_spectral(const RealField& u, const RealField& v) {
    require_same_grid(u.grid(), v.grid());
    require_rank(u.rank(), Rank::vector, "tensor product needs vector fields");
    require_rank(v.rank(), Rank::vector, "tensor product needs vector fields");
    const Grid& g = u.grid();
    RealField t(g, Rank::tensor);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            auto ua = u.component(a), vb = v.component(b);
            auto out = t.component(tensor_index(a, b));
            for (std::size_t i = 0; i < g.size(); ++i) out[i] = ua[i] * vb[i];
        }
    SpectralField T = forward_transform(t);
    dealias(T);
    return T;
}

RealField dealiased_tensor_product(const RealField& u, const RealField& v) {
    return inverse_transform(dealiased_tensor_product_spectral(u, v));
}

// ---------------------------------------------------------------- norms

double spectral_l2(const SpectralField& F) {
    double s = 0.0;
    for (const auto& c : F.data()) s += std::norm(c);
    return std::sqrt(s);
}

double rms(const RealField& f) {
    double s = 0.0;
    for (double v : f.data()) s += v * v;
    return std::sqrt(s / static_cast<double>(f.points()));
}

double max_abs(const RealField& f) {
    double m = 0.0;
    for (double v : f.data()) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> component_means(const RealField& f) {
    std::vector<double> out(f.components(), 0.0);
    for (int c = 0; c < f.components(); ++c) {
        double s = 0.0;
        for (double v : f.component(c)) s += v;
        out[c] = s / static_cast<double>(f.points());
    }
    return out;
}

double max_abs_mean(const SpectralField& F) {
    double m = 0.0;
    for (int c = 0; c < F.components(); ++c) m = std::max(m, std::abs(F.at(c, 0)));
    return m;
}

RealField subtract_mean(const RealField& f) {
    RealField out = f;
    auto means = component_means(f);
    for (int c = 0; c < f.components(); ++c)
        for (double& v : out.component(c)) v -= means[c];
    return out;
}

RealField pointwise_magnitude(const RealField& f) {
    RealField out(f.grid(), Rank::scalar);
    auto o = out.component(0);
    for (int c = 0; c < f.components(); ++c) {
        auto src = f.component(c);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += src[i] * src[i];
    }
    for (double& v : o) v = std::sqrt(v);
    return out;
}

RealField pointwise_magnitude(const ComplexField& f) {
    RealField out(f.grid(), Rank::scalar);
    auto o = out.component(0);
    for (int c = 0; c < f.components(); ++c) {
        auto src = f.component(c);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += std::norm(src[i]);
    }
    for (double& v : o) v = std::sqrt(v);
    return out;
}

double divergence_norm(const SpectralField& V) { return spectral_l2(divergence(V)); }
double divergence_norm(const RealField& v) { return divergence_norm(forward_transform(v)); }

}  // namespace critflow
