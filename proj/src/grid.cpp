#include "critflow/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "critflow/error.hpp"

namespace critflow {

std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidField: return "InvalidField";
        case ErrorKind::AsymmetricSpectrum: return "AsymmetricSpectrum";
        case ErrorKind::RankMismatch: return "RankMismatch";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::NonZeroMean: return "NonZeroMean";
        case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
        case ErrorKind::InvalidExponents: return "InvalidExponents";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::InvalidMask: return "InvalidMask";
        case ErrorKind::NotSolenoidal: return "NotSolenoidal";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::NoContraction: return "NoContraction";
        case ErrorKind::SeriesDiverges: return "SeriesDiverges";
        case ErrorKind::IterateBlowup: return "IterateBlowup";
        case ErrorKind::Unstable: return "Unstable";
        case ErrorKind::SchemesDisagree: return "SchemesDisagree";
        case ErrorKind::FormatError: return "FormatError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

// FFTW planning is not thread-safe, execution with new-array calls is.
// Plans depend only on N, so they are cached for the process lifetime.
struct Grid::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double scale = 1.0;
};

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

std::shared_ptr<const Grid::Plans> plans_for(int n) {
    static std::map<int, std::shared_ptr<const Grid::Plans>> cache;
    std::lock_guard lock(plan_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto p = std::make_shared<Grid::Plans>();
    std::size_t total = static_cast<std::size_t>(n) * n * n;
    std::vector<cplx> a(total), b(total);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p->fwd = fftw_plan_dft_3d(n, n, n, pa, pb, FFTW_FORWARD, flags);
    p->bwd = fftw_plan_dft_3d(n, n, n, pa, pb, FFTW_BACKWARD, flags);
    if (!p->fwd || !p->bwd) fail(ErrorKind::InvalidConfig, "FFTW planning failed");
    p->scale = 1.0 / static_cast<double>(total);
    cache.emplace(n, p);
    return p;
}

std::shared_ptr<const Grid::Tables> tables_for(int n, double length) {
    static std::map<std::pair<int, double>, std::shared_ptr<const Grid::Tables>> cache;
    static std::mutex m;
    std::lock_guard lock(m);
    auto key = std::make_pair(n, length);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto t = std::make_shared<Grid::Tables>();
    std::size_t total = static_cast<std::size_t>(n) * n * n;
    t->k2.resize(total);
    double c = 2.0 * std::numbers::pi / length;
    auto md = [n](int i) { return i < n / 2 ? i : i - n; };
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k, ++idx) {
                double a = c * md(i), b = c * md(j), d = c * md(k);
                t->k2[idx] = a * a + b * b + d * d;
            }
    cache.emplace(key, t);
    return t;
}

}  // namespace

Grid::Grid(int n, double length) : n_(n), length_(length) {
    require(n >= 4 && n % 2 == 0 && n <= 256, ErrorKind::InvalidConfig,
            "grid size must be even and in [4, 256]");
    require(std::isfinite(length) && length > 0.0, ErrorKind::InvalidConfig,
            "box length must be positive");
    double c = 2.0 * std::numbers::pi / length;
    kx_.resize(n);
    kodd_.resize(n);
    for (int i = 0; i < n; ++i) {
        kx_[i] = c * mode(i);
        kodd_[i] = (i == n / 2) ? 0.0 : kx_[i];
    }
    plans_ = plans_for(n);
    tables_ = tables_for(n, length);
}

Wavevector Grid::wavevector(std::size_t idx) const {
    auto ijk = unflat(idx);
    Wavevector w;
    for (int d = 0; d < 3; ++d) {
        w.m[d] = mode(ijk[d]);
        w.k[d] = kx_[ijk[d]];
        w.k_odd[d] = kodd_[ijk[d]];
    }
    w.norm = std::sqrt(tables_->k2[idx]);
    return w;
}

void Grid::forward(const cplx* in, cplx* out) const {
    fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    std::size_t total = size();
    for (std::size_t i = 0; i < total; ++i) out[i] *= plans_->scale;
}

void Grid::inverse(const cplx* in, cplx* out) const {
    fftw_execute_dft(plans_->bwd, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void require_same_grid(const Grid& a, const Grid& b) {
    require(a == b, ErrorKind::GridMismatch, "fields live on different grids");
}

}  // namespace critflow
