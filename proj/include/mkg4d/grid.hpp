#ifndef MKG4D_GRID_HPP
#define MKG4D_GRID_HPP

#include <array>
#include <cmath>
#include <numbers>

#include "mkg4d/util.hpp"

namespace mkg4d {

/// Discrete periodic 4-torus of side `box_length` with `n_per_axis` samples
/// per axis (power of two, >= 4).
///
/// Conventions, shared by everything built on top:
///   - mode index k in [-n/2, n/2) per axis, wavevector xi = 2*pi*k/L,
///   - series  f(x) = sum_k fhat_k e^{i xi.x},
///   - Plancherel  sum_x |f(x)|^2 (L/n)^4 = L^4 sum_k |fhat_k|^2.
struct GridSpec {
    int n_per_axis = 0;
    double box_length = 2.0 * std::numbers::pi;
    static constexpr int dim = 4;

    GridSpec() = default;

    GridSpec(int n, double L) : n_per_axis(n), box_length(L) {
        if (n < 4 || (n & (n - 1)) != 0)
            throw ContractViolation("GridSpec: n_per_axis must be a power of two >= 4");
        if (!(L > 0.0) || !std::isfinite(L))
            throw ContractViolation("GridSpec: box_length must be positive and finite");
    }

    std::size_t total() const {
        const std::size_t n = static_cast<std::size_t>(n_per_axis);
        return n * n * n * n;
    }

    double dx() const { return box_length / n_per_axis; }
    double cell_volume() const { return std::pow(dx(), 4); }
    double box_volume() const { return std::pow(box_length, 4); }

    // mode integer for a raw array index in [0, n)
    int mode_of(int idx) const { return idx < n_per_axis / 2 ? idx : idx - n_per_axis; }

    // raw array index for a mode integer in [-n/2, n/2)
    int index_of_mode(int k) const { return k >= 0 ? k : k + n_per_axis; }

    bool mode_in_range(int k) const { return k >= -n_per_axis / 2 && k < n_per_axis / 2; }

    // flat index, row-major over axes (x1,x2,x3,x4), x4 fastest
    std::size_t flat(int i1, int i2, int i3, int i4) const {
        const std::size_t n = static_cast<std::size_t>(n_per_axis);
        return ((static_cast<std::size_t>(i1) * n + i2) * n + i3) * n + i4;
    }

    std::array<int, 4> unflatten(std::size_t f) const {
        const std::size_t n = static_cast<std::size_t>(n_per_axis);
        std::array<int, 4> idx;
        idx[3] = static_cast<int>(f % n);
        f /= n;
        idx[2] = static_cast<int>(f % n);
        f /= n;
        idx[1] = static_cast<int>(f % n);
        f /= n;
        idx[0] = static_cast<int>(f);
        return idx;
    }

    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.n_per_axis == b.n_per_axis && a.box_length == b.box_length;
    }
    friend bool operator!=(const GridSpec& a, const GridSpec& b) { return !(a == b); }
};

/// Wavevector xi = 2*pi*k/L for mode indices k (each in [-n/2, n/2)).
inline std::array<double, 4> wavevector(const std::array<int, 4>& modes, const GridSpec& g) {
    std::array<double, 4> xi;
    const double f = 2.0 * std::numbers::pi / g.box_length;
    for (int a = 0; a < 4; ++a) {
        if (!g.mode_in_range(modes[a]))
            throw ContractViolation("wavevector: mode index out of [-n/2, n/2)");
        xi[a] = f * modes[a];
    }
    return xi;
}

namespace detail {

// Per-axis wavevector table for a raw index; `deriv` zeroes the unpaired
// Nyquist mode so odd symbols keep real fields real.
inline std::vector<double> axis_xi(const GridSpec& g, bool deriv) {
    std::vector<double> t(static_cast<std::size_t>(g.n_per_axis));
    const double f = 2.0 * std::numbers::pi / g.box_length;
    for (int i = 0; i < g.n_per_axis; ++i) {
        const int k = g.mode_of(i);
        t[static_cast<std::size_t>(i)] = (deriv && k == -g.n_per_axis / 2) ? 0.0 : f * k;
    }
    return t;
}

}  // namespace detail

}  // namespace mkg4d

#endif
