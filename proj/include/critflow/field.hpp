#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "critflow/error.hpp"
#include "critflow/grid.hpp"

namespace critflow {

enum class Rank { scalar = 0, vector = 1, tensor = 2 };

constexpr int component_count(Rank r) {
    return r == Rank::scalar ? 1 : (r == Rank::vector ? 3 : 9);
}

// Tensor components are stored row-major: T_ij lives at component 3*i + j.
constexpr int tensor_index(int i, int j) { return 3 * i + j; }

inline bool finite_value(double v) { return std::isfinite(v); }
inline bool finite_value(const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

struct PhysicalSpace {};
struct SpectralSpace {};

// Component-major storage of N^3 samples (physical) or coefficients
// (spectral, FFT slot order) per component.
template <typename T, typename Space>
class Field {
public:
    using value_type = T;

    Field(Grid grid, Rank rank)
        : grid_(std::move(grid)), rank_(rank),
          data_(grid_.size() * component_count(rank), T{}) {}

    const Grid& grid() const { return grid_; }
    Rank rank() const { return rank_; }
    int components() const { return component_count(rank_); }
    std::size_t points() const { return grid_.size(); }

    std::span<T> component(int c) {
        return {data_.data() + c * points(), points()};
    }
    std::span<const T> component(int c) const {
        return {data_.data() + c * points(), points()};
    }
    T& at(int c, std::size_t idx) { return data_[c * points() + idx]; }
    const T& at(int c, std::size_t idx) const { return data_[c * points() + idx]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    Field& operator+=(const Field& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    template <typename S>
    Field& operator*=(S s) {
        for (auto& v : data_) v *= s;
        return *this;
    }
    // this += s * o
    template <typename S>
    Field& axpy(S s, const Field& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
        return *this;
    }

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    template <typename S>
    friend Field operator*(S s, Field a) { return a *= s; }

    bool all_finite() const {
        for (const auto& v : data_)
            if (!finite_value(v)) return false;
        return true;
    }

    void check_compatible(const Field& o) const {
        require_same_grid(grid_, o.grid_);
        require(rank_ == o.rank_, ErrorKind::RankMismatch, "field ranks differ");
    }

private:
    Grid grid_;
    Rank rank_;
    std::vector<T> data_;
};

using RealField = Field<double, PhysicalSpace>;
using ComplexField = Field<cplx, PhysicalSpace>;
using SpectralField = Field<cplx, SpectralSpace>;

inline void require_rank(Rank got, Rank want, const char* what) {
    require(got == want, ErrorKind::RankMismatch, what);
}

}  // namespace critflow
