#include "critflow/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace critflow {

namespace {
constexpr char kMaskMagic[5] = {'M', 'A', 'S', 'K', '1'};
}

// ------------------------------------------------------------------ mask

CompactMask::CompactMask(const Grid& g) : grid_(g), bits_(g.size(), 0) {}

CompactMask CompactMask::from_predicate(const Grid& g,
                                        const std::function<bool(int, int, int)>& inside) {
    CompactMask m(g);
    const int n = g.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (inside(i, j, k)) m.set(g.flat(i, j, k), true);
    return m;
}

CompactMask CompactMask::ball(const Grid& g, double radius, std::array<double, 3> centre) {
    const double c = g.centre(), r2 = radius * radius * (1.0 + 1e-12);
    CompactMask m = from_predicate(g, [&](int i, int j, int k) {
        double dx = g.coord(i) - c - centre[0], dy = g.coord(j) - c - centre[1],
               dz = g.coord(k) - c - centre[2];
        return dx * dx + dy * dy + dz * dz <= r2;
    });
    m.validate();
    return m;
}

CompactMask CompactMask::shell(const Grid& g, double inner, double outer) {
    const double c = g.centre();
    const double a2 = inner * inner * (1.0 - 1e-12), b2 = outer * outer * (1.0 + 1e-12);
    CompactMask m = from_predicate(g, [&](int i, int j, int k) {
        double dx = g.coord(i) - c, dy = g.coord(j) - c, dz = g.coord(k) - c;
        double r2 = dx * dx + dy * dy + dz * dz;
        return r2 >= a2 && r2 <= b2;
    });
    m.validate();
    return m;
}

void CompactMask::set(std::size_t idx, bool v) {
    if (static_cast<bool>(bits_[idx]) == v) return;
    bits_[idx] = v ? 1 : 0;
    count_ += v ? 1 : static_cast<std::size_t>(-1);
}

std::array<int, 6> CompactMask::bounding_box() const {
    const int n = grid_.n();
    std::array<int, 6> b{n, n, n, -1, -1, -1};
    for (std::size_t idx = 0; idx < bits_.size(); ++idx) {
        if (!bits_[idx]) continue;
        auto ijk = grid_.unflat(idx);
        for (int d = 0; d < 3; ++d) {
            b[d] = std::min(b[d], ijk[d]);
            b[d + 3] = std::max(b[d + 3], ijk[d]);
        }
    }
    return b;
}

CompactMask CompactMask::united(const CompactMask& o) const {
    require_same_grid(grid_, o.grid_);
    CompactMask m = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (o.bits_[i]) m.set(i, true);
    return m;
}

bool CompactMask::subset_of(const CompactMask& o) const {
    require_same_grid(grid_, o.grid_);
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !o.bits_[i]) return false;
    return true;
}

CompactMask CompactMask::from_shape(const Grid& g,
                                   const std::function<bool(const std::array<double, 3>&)>& shape,
                                   double lambda) {
    require(lambda > 0.0, ErrorKind::InvalidConfig, "dilation factor must be positive");
    const double c = g.centre();
    CompactMask m = from_predicate(g, [&](int i, int j, int k) {
        return shape({(g.coord(i) - c) / lambda, (g.coord(j) - c) / lambda, (g.coord(k) - c) / lambda});
    });
    m.validate();
    return m;
}

RealField CompactMask::indicator() const {
    RealField f(grid_, Rank::scalar);
    auto o = f.component(0);
    for (std::size_t i = 0; i < bits_.size(); ++i) o[i] = bits_[i] ? 1.0 : 0.0;
    return f;
}

void CompactMask::validate() const {
    if (empty()) return;
    auto b = bounding_box();
    const int n = grid_.n();
    for (int d = 0; d < 3; ++d)
        require(4 * b[d] >= n && 4 * b[d + 3] <= 3 * n, ErrorKind::InvalidMask,
                "compact set leaves the central L/2 cube");
}

std::vector<std::uint8_t> encode_mask(const CompactMask& mask) {
    const Grid& g = mask.grid();
    std::vector<std::uint8_t> out(sizeof(kMaskMagic) + 4 + (g.size() + 7) / 8, 0);
    std::memcpy(out.data(), kMaskMagic, sizeof(kMaskMagic));
    std::uint32_t n = static_cast<std::uint32_t>(g.n());
    for (int b = 0; b < 4; ++b) out[5 + b] = static_cast<std::uint8_t>((n >> (8 * b)) & 0xff);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (mask.contains(i)) out[9 + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return out;
}

CompactMask decode_mask(const std::vector<std::uint8_t>& bytes, double box_length) {
    require(bytes.size() >= 9, ErrorKind::FormatError, "mask truncated in header at byte offset " +
                                                           std::to_string(bytes.size()));
    require(std::memcmp(bytes.data(), kMaskMagic, 5) == 0, ErrorKind::FormatError,
            "bad mask magic at byte offset 0");
    std::uint32_t n = 0;
    for (int b = 0; b < 4; ++b) n |= static_cast<std::uint32_t>(bytes[5 + b]) << (8 * b);
    require(n >= 4 && n <= 256 && n % 2 == 0, ErrorKind::FormatError,
            "bad mask resolution at byte offset 5");
    Grid g(static_cast<int>(n), box_length);
    std::size_t need = 9 + (g.size() + 7) / 8;
    require(bytes.size() == need, ErrorKind::FormatError,
            "mask payload size mismatch at byte offset " + std::to_string(bytes.size()));
    CompactMask m(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (bytes[9 + i / 8] & (1u << (i % 8))) m.set(i, true);
    return m;
}

void save_mask(const std::filesystem::path& path, const CompactMask& mask, double) {
    auto bytes = encode_mask(mask);
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::IoError, "cannot open " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(os), ErrorKind::IoError, "write failed: " + path.string());
}

CompactMask load_mask(const std::filesystem::path& path, double box_length) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return decode_mask(bytes, box_length);
}

// ------------------------------------------------------------------ capacity

std::string to_string(CapacityMethod m) {
    return m == CapacityMethod::analytic_ball ? "analytic_ball" : "obstacle_sor";
}

CapacityResult capacity_ball(double r) {
    require(r > 0.0 && std::isfinite(r), ErrorKind::InvalidConfig, "ball radius must be positive");
    CapacityResult res;
    res.value = 4.0 * std::numbers::pi * r;
    res.method = CapacityMethod::analytic_ball;
    return res;
}

CapacityResult capacity_compact(const CompactMask& K, const CapacityOptions& opt) {
    if (K.empty()) return CapacityResult{};
    K.validate();
    require(opt.omega > 0.0 && opt.omega < 2.0, ErrorKind::InvalidConfig,
            "SOR factor must lie in (0, 2)");
    require(opt.tol > 0.0, ErrorKind::InvalidConfig, "tolerance must be positive");

    const Grid& g = K.grid();
    const int n = g.n();
    const double h = g.spacing();
    const std::size_t total = g.size();
    const int max_sweeps = opt.max_sweeps > 0 ? opt.max_sweeps : 50 * n;
    const bool robin = opt.boundary == CapacityBoundary::robin_monopole;

    // Monopole centre: middle of the bounding box, in node units.
    auto bb = K.bounding_box();
    double c[3];
    for (int d = 0; d < 3; ++d) c[d] = 0.5 * (bb[d] + bb[d + 3]);

    // Per-node Robin coefficient h * sum over boundary faces of (x_f - c).n / |x_f - c|^2,
    // all lengths in node units, so it is dimensionless like the degree.
    std::vector<double> robin_coef(total, 0.0);
    std::vector<std::uint8_t> fixed(total, 0);  // 1: in K (phi = 1), 2: Dirichlet shell
    double rk = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        auto ijk = g.unflat(idx);
        if (K.contains(idx)) {
            fixed[idx] = 1;
            double r2 = 0.0;
            for (int d = 0; d < 3; ++d) r2 += (ijk[d] - c[d]) * (ijk[d] - c[d]);
            rk = std::max(rk, std::sqrt(r2));
            continue;
        }
        bool on_shell = false;
        for (int d = 0; d < 3; ++d) on_shell |= (ijk[d] == 0 || ijk[d] == n - 1);
        if (!on_shell) continue;
        if (!robin) {
            fixed[idx] = 2;
            continue;
        }
        for (int d = 0; d < 3; ++d) {
            for (int side = 0; side < 2; ++side) {
                if ((side == 0 && ijk[d] != 0) || (side == 1 && ijk[d] != n - 1)) continue;
                double xf[3] = {ijk[0] - c[0], ijk[1] - c[1], ijk[2] - c[2]};
                double nrm = side == 0 ? -1.0 : 1.0;
                xf[d] += 0.5 * nrm;
                double r2 = xf[0] * xf[0] + xf[1] * xf[1] + xf[2] * xf[2];
                robin_coef[idx] += xf[d] * nrm / r2;
            }
        }
    }
    rk = std::max(rk, 0.5);

    std::vector<double> phi(total, 0.0), inv_diag(total, 0.0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        auto ijk = g.unflat(idx);
        if (fixed[idx] == 1) {
            phi[idx] = 1.0;
            continue;
        }
        if (fixed[idx] == 2) continue;
        int deg = 0;
        for (int d = 0; d < 3; ++d) deg += (ijk[d] > 0) + (ijk[d] < n - 1);
        if (!robin) deg = 6;
        inv_diag[idx] = 1.0 / (deg + robin_coef[idx]);
        double r2 = 0.0;
        for (int d = 0; d < 3; ++d) r2 += (ijk[d] - c[d]) * (ijk[d] - c[d]);
        phi[idx] = std::min(1.0, rk / std::sqrt(r2));
    }

    const std::size_t sj = static_cast<std::size_t>(n), si = sj * sj;
    auto neighbour_sum = [&](std::size_t idx, int i, int j, int k) {
        double s = 0.0;
        if (i > 0) s += phi[idx - si];
        if (i < n - 1) s += phi[idx + si];
        if (j > 0) s += phi[idx - sj];
        if (j < n - 1) s += phi[idx + sj];
        if (k > 0) s += phi[idx - 1];
        if (k < n - 1) s += phi[idx + 1];
        return s;
    };
    auto projected_target = [&](std::size_t idx, int i, int j, int k) {
        return std::clamp(neighbour_sum(idx, i, j, k) * inv_diag[idx], 0.0, 1.0);
    };

    CapacityResult res;
    res.method = CapacityMethod::obstacle_sor;
    double change = 0.0;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        change = 0.0;
        for (int colour = 0; colour < 2; ++colour) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    int k0 = (i + j + colour) & 1;
                    std::size_t base = g.flat(i, j, 0);
                    for (int k = k0; k < n; k += 2) {
                        std::size_t idx = base + k;
                        if (fixed[idx]) continue;
                        double target = neighbour_sum(idx, i, j, k) * inv_diag[idx];
                        double v = std::clamp(phi[idx] + opt.omega * (target - phi[idx]), 0.0, 1.0);
                        change = std::max(change, std::abs(v - phi[idx]));
                        phi[idx] = v;
                    }
                }
        }
        if (change <= opt.tol) {
            ++sweep;
            break;
        }
    }
    res.iterations = sweep;

    // Complementarity residual: distance of phi from its projected Gauss-Seidel image.
    double resid = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                std::size_t idx = g.flat(i, j, k);
                if (fixed[idx]) continue;
                resid = std::max(resid, std::abs(phi[idx] - projected_target(idx, i, j, k)));
            }
    res.residual = resid;
    if (change > opt.tol)
        fail(ErrorKind::NoConvergence, "obstacle SOR stalled after " + std::to_string(sweep) +
                                           " sweeps, last correction " + std::to_string(change));

    // Discrete energy h * sum over edges (phi_i - phi_j)^2 + h * sum robin_coef phi^2.
    double e = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                std::size_t idx = g.flat(i, j, k);
                double p = phi[idx];
                if (i < n - 1) e += (p - phi[idx + si]) * (p - phi[idx + si]);
                if (j < n - 1) e += (p - phi[idx + sj]) * (p - phi[idx + sj]);
                if (k < n - 1) e += (p - phi[idx + 1]) * (p - phi[idx + 1]);
                e += robin_coef[idx] * p * p;
            }
    res.value = h * e;

    RealField pot(g, Rank::scalar);
    std::copy(phi.begin(), phi.end(), pot.component(0).begin());
    res.potential = std::move(pot);
    return res;
}

}  // namespace critflow
