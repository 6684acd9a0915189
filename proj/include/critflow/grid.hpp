#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace critflow {

using cplx = std::complex<double>;

// Integer mode m and physical wavevector k = 2*pi*m/L of one spectral slot.
// k_odd is k with Nyquist components zeroed; odd-order symbols use it so that
// real fields stay real.
struct Wavevector {
    std::array<int, 3> m{};
    std::array<double, 3> k{};
    std::array<double, 3> k_odd{};
    double norm = 0.0;
};

// Uniform periodic grid on [0, L)^3 with N nodes per axis, nodes at i*h.
// Copies are cheap: FFT plans and wavenumber tables are shared.
class Grid {
public:
    Grid(int n, double length);

    int n() const { return n_; }
    double length() const { return length_; }
    double spacing() const { return length_ / n_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }
    double cell_volume() const { double h = spacing(); return h * h * h; }

    std::size_t flat(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
    }
    std::array<int, 3> unflat(std::size_t idx) const {
        int k = static_cast<int>(idx % n_);
        int j = static_cast<int>((idx / n_) % n_);
        int i = static_cast<int>(idx / (static_cast<std::size_t>(n_) * n_));
        return {i, j, k};
    }

    // Signed mode of FFT slot idx along one axis, in [-N/2, N/2).
    int mode(int idx) const { return idx < n_ / 2 ? idx : idx - n_; }
    int slot(int m) const { return ((m % n_) + n_) % n_; }
    double wavenumber(int idx) const { return kx_[idx]; }
    double odd_wavenumber(int idx) const { return kodd_[idx]; }
    // |k|^2 per flat spectral index.
    const std::vector<double>& k2() const { return tables_->k2; }
    Wavevector wavevector(std::size_t idx) const;

    // Physical coordinate of node index, and the box centre (node N/2).
    double coord(int i) const { return i * spacing(); }
    double centre() const { return 0.5 * length_; }

    // Forward transform includes the 1/N^3 factor, so slot 0 is the mean.
    void forward(const cplx* in, cplx* out) const;
    void inverse(const cplx* in, cplx* out) const;

    bool operator==(const Grid& o) const { return n_ == o.n_ && length_ == o.length_; }
    bool operator!=(const Grid& o) const { return !(*this == o); }

    struct Plans;
    struct Tables {
        std::vector<double> k2;
    };

private:
    int n_;
    double length_;
    std::vector<double> kx_;
    std::vector<double> kodd_;
    std::shared_ptr<const Plans> plans_;
    std::shared_ptr<const Tables> tables_;
};

void require_same_grid(const Grid& a, const Grid& b);

}  // namespace critflow
