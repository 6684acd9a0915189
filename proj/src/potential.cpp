#include "critflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "critflow/spectral.hpp"

namespace critflow {

namespace {

constexpr double pi = std::numbers::pi;

// Spectrum (times N^3) of the periodic ball indicator of radius r centred at
// node 0, cached per (N, L, r); also returns the lattice point count.
std::pair<std::shared_ptr<const std::vector<cplx>>, std::size_t> ball_kernel(const Grid& g,
                                                                             double r) {
    using Key = std::tuple<int, double, double>;
    static std::map<Key, std::pair<std::shared_ptr<const std::vector<cplx>>, std::size_t>> cache;
    static std::mutex m;
    std::lock_guard lock(m);
    Key key{g.n(), g.length(), r};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    const int n = g.n();
    const double h = g.spacing();
    const double r2 = r * r * (1.0 + 1e-12);
    std::vector<cplx> ind(g.size());
    std::size_t count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double dx = g.mode(i) * h, dy = g.mode(j) * h, dz = g.mode(k) * h;
                if (dx * dx + dy * dy + dz * dz <= r2) {
                    ind[g.flat(i, j, k)] = 1.0;
                    ++count;
                }
            }
    auto spec = std::make_shared<std::vector<cplx>>(g.size());
    g.forward(ind.data(), spec->data());
    const double scale = static_cast<double>(g.size());
    for (auto& c : *spec) c *= scale;
    auto entry = std::make_pair(std::shared_ptr<const std::vector<cplx>>(spec), count);
    cache.emplace(key, entry);
    return entry;
}

}  // namespace

std::vector<double> dyadic_radii(const Grid& g) {
    std::vector<double> out;
    const double h = g.spacing();
    for (int m = 2; m * h <= 0.25 * g.length() * (1.0 + 1e-12); m *= 2) out.push_back(m * h);
    return out;
}

BallFamily default_balls(const Grid& g) { return BallFamily{dyadic_radii(g), 2}; }

BallScan::BallScan(const Grid& g, std::vector<double> radii) : grid_(g), radii_(std::move(radii)) {
    require(!radii_.empty(), ErrorKind::InvalidConfig, "ball family needs at least one radius");
    for (double r : radii_) {
        require(r > 0.0 && r < 0.5 * g.length(), ErrorKind::InvalidConfig,
                "ball radius must lie in (0, L/2)");
        auto [kernel, count] = ball_kernel(g, r);
        kernels_.push_back(kernel);
        counts_.push_back(count);
    }
}

double BallScan::weight(std::size_t r) const {
    double rad = radii_[r];
    return (4.0 / 3.0) * pi * rad * rad * rad / static_cast<double>(counts_[r]);
}

std::vector<std::vector<double>> BallScan::sums(const RealField& q) const {
    require_rank(q.rank(), Rank::scalar, "ball sums need a scalar density");
    require_same_grid(grid_, q.grid());
    const Grid& g = grid_;
    std::vector<cplx> buf(g.size()), qhat(g.size()), tmp(g.size());
    auto src = q.component(0);
    std::copy(src.begin(), src.end(), buf.begin());
    g.forward(buf.data(), qhat.data());
    std::vector<std::vector<double>> out;
    out.reserve(radii_.size());
    for (const auto& kernel : kernels_) {
        for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = qhat[i] * (*kernel)[i];
        g.inverse(tmp.data(), buf.data());
        std::vector<double> s(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) s[i] = buf[i].real();
        out.push_back(std::move(s));
    }
    return out;
}

BallSup ball_supremum(const RealField& q, const BallFamily& family,
                      const std::function<double(double)>& weight) {
    require(family.stride >= 1, ErrorKind::InvalidConfig, "centre stride must be positive");
    BallScan scan(q.grid(), family.radii);
    auto sums = scan.sums(q);
    const Grid& g = q.grid();
    const int n = g.n(), st = family.stride;
    BallSup best;
    for (std::size_t r = 0; r < sums.size(); ++r) {
        const double w = weight(scan.radii()[r]) * scan.weight(r);
        for (int i = 0; i < n; i += st)
            for (int j = 0; j < n; j += st)
                for (int k = 0; k < n; k += st) {
                    std::size_t idx = g.flat(i, j, k);
                    double v = w * std::max(0.0, sums[r][idx]);
                    if (v > best.value) best = {v, scan.radii()[r], idx};
                }
    }
    return best;
}

RieszPotential riesz_potential(const RealField& f, double gamma) {
    require(std::isfinite(gamma) && gamma > 0.0 && gamma < 3.0, ErrorKind::UnsupportedOrder,
            "Riesz potential order must lie in (0, 3)");
    RieszPotential out{subtract_mean(f), component_means(f)};
    out.potential = fractional_laplacian(out.potential, -gamma);
    return out;
}

double riesz_kernel_constant(double gamma) {
    return std::tgamma(0.5 * (3.0 - gamma)) /
           (std::pow(2.0, gamma) * std::pow(pi, 1.5) * std::tgamma(0.5 * gamma));
}

double torus_kernel_minimum(const Grid& g, double gamma) {
    require(gamma > 0.0 && gamma < 3.0, ErrorKind::UnsupportedOrder,
            "Riesz potential order must lie in (0, 3)");
    const double l3 = std::pow(g.length(), 3);
    const auto& k2 = g.k2();
    std::vector<cplx> spec(g.size()), phys(g.size());
    for (std::size_t i = 1; i < g.size(); ++i) spec[i] = std::pow(k2[i], -0.5 * gamma) / l3;
    g.inverse(spec.data(), phys.data());
    double m = phys[0].real();
    for (const auto& v : phys) m = std::min(m, v.real());
    return m;
}

namespace {

// Integral of |u|^{-p} over the unit cube centred at 0 (p < 3): six pyramids
// over the faces, each reducing to a smooth 2D integral done by Gauss-Legendre.
double cube_singular_integral(double p) {
    static const double xs[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                 -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
    static const double ws[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    // composite rule on a 4x4 panel split of [-1/2, 1/2]^2
    const int panels = 4;
    double acc = 0.0;
    for (int a = 0; a < panels; ++a)
        for (int b = 0; b < panels; ++b)
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) {
                    double y = -0.5 + (a + 0.5 * (xs[i] + 1.0)) / panels;
                    double z = -0.5 + (b + 0.5 * (xs[j] + 1.0)) / panels;
                    double w = ws[i] * ws[j] * 0.25 / (panels * panels);
                    acc += w * std::pow(0.25 + y * y + z * z, -0.5 * p);
                }
    return 6.0 * 0.5 * acc / (3.0 - p);
}

}  // namespace

FreeSpacePotential::FreeSpacePotential(const Grid& g, double gamma)
    : grid_(g), padded_(2 * g.n(), 2.0 * g.length()), gamma_(gamma) {
    require(gamma > 0.0 && gamma < 3.0, ErrorKind::UnsupportedOrder,
            "Riesz potential order must lie in (0, 3)");
    const int m = padded_.n();
    const double h = g.spacing();
    const double c = riesz_kernel_constant(gamma);
    const double p = 3.0 - gamma;
    std::vector<cplx> k(padded_.size()), khat(padded_.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int l = 0; l < m; ++l) {
                double dx = padded_.mode(i) * h, dy = padded_.mode(j) * h, dz = padded_.mode(l) * h;
                double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                k[padded_.flat(i, j, l)] = c * std::pow(r, -p) * h * h * h;
            }
    k[0] = c * std::pow(h, gamma) * cube_singular_integral(p);
    padded_.forward(k.data(), khat.data());
    const double scale = static_cast<double>(padded_.size());
    for (auto& v : khat) v *= scale;
    kernel_hat_ = std::make_shared<const std::vector<cplx>>(std::move(khat));
}

RealField FreeSpacePotential::apply(const RealField& f) const {
    require_rank(f.rank(), Rank::scalar, "free-space potential needs a scalar field");
    require_same_grid(grid_, f.grid());
    const int n = grid_.n();
    std::vector<cplx> a(padded_.size()), b(padded_.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) a[padded_.flat(i, j, l)] = f.at(0, grid_.flat(i, j, l));
    padded_.forward(a.data(), b.data());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] *= (*kernel_hat_)[i];
    padded_.inverse(b.data(), a.data());
    RealField out(grid_, Rank::scalar);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) out.at(0, grid_.flat(i, j, l)) = a[padded_.flat(i, j, l)].real();
    return out;
}

std::string to_string(PotentialDomain d) {
    return d == PotentialDomain::periodic ? "periodic" : "whole_space";
}

RealField apply_riesz(const RealField& f, double gamma, PotentialDomain domain) {
    if (domain == PotentialDomain::periodic) return riesz_potential(f, gamma).potential;
    using Key = std::tuple<int, double, double>;
    static std::map<Key, std::shared_ptr<const FreeSpacePotential>> cache;
    static std::mutex m;
    std::shared_ptr<const FreeSpacePotential> op;
    {
        std::lock_guard lock(m);
        Key key{f.grid().n(), f.grid().length(), gamma};
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, std::make_shared<const FreeSpacePotential>(f.grid(), gamma)).first;
        op = it->second;
    }
    return op->apply(f);
}

RealField maximal_function(const RealField& f, const std::vector<double>& radii) {
    require(!radii.empty(), ErrorKind::InvalidConfig, "maximal function needs radii");
    RealField mag = pointwise_magnitude(f);
    BallScan scan(f.grid(), radii);
    auto sums = scan.sums(mag);
    RealField out(f.grid(), Rank::scalar);
    auto o = out.component(0);
    for (std::size_t r = 0; r < sums.size(); ++r) {
        const double inv = 1.0 / static_cast<double>(scan.lattice_count(r));
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::max(o[i], sums[r][i] * inv);
    }
    return out;
}

namespace {

// Whole-space ball sums of box data for radii up to L, from periodic ball
// sums on the zero-padded grid (2N, 2L); returned on the original nodes.
std::vector<std::vector<double>> padded_ball_sums(const RealField& q, const std::vector<double>& radii,
                                                  std::vector<std::size_t>& counts) {
    const Grid& g = q.grid();
    Grid big(2 * g.n(), 2.0 * g.length());
    RealField qp(big, Rank::scalar);
    const int n = g.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) qp.at(0, big.flat(i, j, k)) = q.at(0, g.flat(i, j, k));
    BallScan scan(big, radii);
    auto sums = scan.sums(qp);
    counts.clear();
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < radii.size(); ++r) {
        counts.push_back(scan.lattice_count(r));
        std::vector<double> s(g.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) s[g.flat(i, j, k)] = sums[r][big.flat(i, j, k)];
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

double adams_constant(const RealField& f, double alpha, double beta, double p) {
    require(p >= 1.0 && alpha > 0.0 && alpha < beta && beta <= 3.0 / p + 1e-14,
            ErrorKind::InvalidExponents, "need 0 < alpha < beta <= 3/p and p >= 1");
    require_rank(f.rank(), Rank::scalar, "adams_constant needs a scalar density");
    double fmax = max_abs(f);
    if (fmax == 0.0) return 0.0;
    for (double v : f.data())
        require(v >= -1e-12 * fmax, ErrorKind::InvalidExponents, "density must be nonnegative");

    // Everything here is whole-space: f is box data. Mf is sampled on radii
    // 2h .. L/2, so it is only trusted at nodes whose largest ball already
    // holds all of f; elsewhere it would be starved and inflate the ratio.
    const Grid& g = f.grid();
    const double h = g.spacing();
    std::vector<double> radii;
    for (int m = 2; m * h <= 0.5 * g.length() * (1.0 + 1e-12); m *= 2) radii.push_back(m * h);
    std::vector<std::size_t> counts;

    RealField fp = f;
    for (double& v : fp.data()) v = std::pow(std::max(v, 0.0), p);
    const double lam = beta * p;
    auto psums = padded_ball_sums(fp, radii, counts);
    double morrey = 0.0;
    for (std::size_t r = 0; r < radii.size(); ++r) {
        const double w = std::pow(radii[r], lam - 3.0) * (4.0 / 3.0) * pi * std::pow(radii[r], 3) /
                         static_cast<double>(counts[r]);
        for (double s : psums[r]) morrey = std::max(morrey, w * s);
    }
    morrey = std::pow(morrey, 1.0 / p);

    RealField pos = f;
    for (double& v : pos.data()) v = std::max(v, 0.0);
    auto fsums = padded_ball_sums(pos, radii, counts);
    RealField ia = FreeSpacePotential(g, alpha).apply(pos);
    double total = 0.0;
    for (double v : pos.data()) total += v;
    double best = 0.0;
    auto iav = ia.component(0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (fsums.back()[i] < (1.0 - 1e-9) * total) continue;
        double mf = 0.0;
        for (std::size_t r = 0; r < radii.size(); ++r)
            mf = std::max(mf, fsums[r][i] / static_cast<double>(counts[r]));
        double denom = std::pow(morrey, alpha / beta) * std::pow(mf, (beta - alpha) / beta);
        best = std::max(best, iav[i] / denom);
    }
    return best;
}

}  // namespace critflow
