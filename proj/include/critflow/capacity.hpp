#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "critflow/field.hpp"

namespace critflow {

// Boolean set of grid nodes, required to sit inside the central L/2 cube.
class CompactMask {
public:
    explicit CompactMask(const Grid& g);  // empty mask
    static CompactMask from_predicate(const Grid& g,
                                      const std::function<bool(int, int, int)>& inside);
    // Nodes within `radius` of `centre` (offsets from the box centre).
    static CompactMask ball(const Grid& g, double radius, std::array<double, 3> centre = {0, 0, 0});
    static CompactMask shell(const Grid& g, double inner, double outer);

    const Grid& grid() const { return grid_; }
    bool contains(std::size_t idx) const { return bits_[idx] != 0; }
    bool contains(int i, int j, int k) const { return bits_[grid_.flat(i, j, k)] != 0; }
    void set(std::size_t idx, bool v);
    bool empty() const { return count_ == 0; }
    std::size_t count() const { return count_; }
    // Inclusive node-index bounding box {lo_i, lo_j, lo_k, hi_i, hi_j, hi_k}.
    std::array<int, 6> bounding_box() const;

    CompactMask united(const CompactMask& o) const;
    bool subset_of(const CompactMask& o) const;
    // Samples the dilate λS of a geometric set S (membership test on offsets
    // from the box centre): node x is included iff (x - c)/λ lies in S.
    static CompactMask from_shape(const Grid& g, const std::function<bool(const std::array<double, 3>&)>& shape,
                                  double lambda = 1.0);
    RealField indicator() const;

    // Throws InvalidMask if any member lies outside the central cube.
    void validate() const;

    bool operator==(const CompactMask& o) const { return grid_ == o.grid_ && bits_ == o.bits_; }

private:
    Grid grid_;
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
};

void save_mask(const std::filesystem::path& path, const CompactMask& mask, double box_length);
CompactMask load_mask(const std::filesystem::path& path, double box_length);
std::vector<std::uint8_t> encode_mask(const CompactMask& mask);
CompactMask decode_mask(const std::vector<std::uint8_t>& bytes, double box_length);

enum class CapacityMethod { analytic_ball, obstacle_sor };

// How the box boundary closes the whole-space problem.
//  robin_monopole: exterior continued as a monopole Q/ρ about the set's centre,
//    which gives the boundary term ∮ φ² (x·n)/ρ² dS (default).
//  dirichlet_shell: φ = 0 on the outermost node layer.
enum class CapacityBoundary { robin_monopole, dirichlet_shell };

struct CapacityOptions {
    double tol = 1e-8;        // max nodal correction of a full sweep
    double omega = 1.7;
    int max_sweeps = 0;       // 0 means 50 N
    CapacityBoundary boundary = CapacityBoundary::robin_monopole;
};

struct CapacityResult {
    double value = 0.0;
    int iterations = 0;
    double residual = 0.0;
    CapacityMethod method = CapacityMethod::analytic_ball;
    std::optional<RealField> potential;  // equilibrium potential of obstacle solves
};

std::string to_string(CapacityMethod m);

// 4πr, the capacity of a ball in R^3.
CapacityResult capacity_ball(double r);

// Discrete obstacle problem by projected red-black SOR.
CapacityResult capacity_compact(const CompactMask& K, const CapacityOptions& opt = {});

}  // namespace critflow
