#ifndef MKG4D_FIELD_HPP
#define MKG4D_FIELD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "mkg4d/fft.hpp"
#include "mkg4d/grid.hpp"
#include "mkg4d/util.hpp"

namespace mkg4d {

enum class Domain { position, frequency };
enum class Direction { forward, inverse };

/// Complex samples on the 4-torus, tagged with the domain they live in.
/// Fields are plain values: operations copy, never mutate their inputs.
class ScalarField {
public:
    ScalarField() = default;

    ScalarField(const GridSpec& g, Domain d, bool real_constrained = false)
        : grid(g), domain(d), reality_flag(real_constrained), values(g.total(), cplx(0.0)) {}

    GridSpec grid;
    Domain domain = Domain::position;
    bool reality_flag = false;
    std::vector<cplx> values;

    cplx& operator[](std::size_t i) { return values[i]; }
    const cplx& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    /// coefficient of the given mode (frequency-domain fields only)
    cplx mode(const std::array<int, 4>& k) const {
        if (domain != Domain::frequency)
            throw ContractViolation("ScalarField::mode: field not in frequency domain");
        return values[grid.flat(grid.index_of_mode(k[0]), grid.index_of_mode(k[1]),
                                grid.index_of_mode(k[2]), grid.index_of_mode(k[3]))];
    }

    void set_mode(const std::array<int, 4>& k, cplx v) {
        if (domain != Domain::frequency)
            throw ContractViolation("ScalarField::set_mode: field not in frequency domain");
        values[grid.flat(grid.index_of_mode(k[0]), grid.index_of_mode(k[1]),
                         grid.index_of_mode(k[2]), grid.index_of_mode(k[3]))] = v;
    }
};

inline ScalarField transform(const ScalarField& f, Direction dir) {
    if (dir == Direction::forward && f.domain != Domain::position)
        throw ContractViolation("transform(forward): field is not position-domain");
    if (dir == Direction::inverse && f.domain != Domain::frequency)
        throw ContractViolation("transform(inverse): field is not frequency-domain");
    ScalarField out = f;
    if (dir == Direction::forward) {
        detail::fft_forward(out.grid, out.values);
        out.domain = Domain::frequency;
    } else {
        detail::fft_backward(out.grid, out.values);
        out.domain = Domain::position;
    }
    return out;
}

// Lenient conversions used internally; the strict tag contract lives in transform().
inline ScalarField to_frequency(const ScalarField& f) {
    return f.domain == Domain::frequency ? f : transform(f, Direction::forward);
}

inline ScalarField to_position(const ScalarField& f) {
    return f.domain == Domain::position ? f : transform(f, Direction::inverse);
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (const cplx& v : f.values) m = std::max(m, std::abs(v));
    return m;
}

/// largest |Im| relative to the field magnitude, in position space
inline double reality_defect(const ScalarField& f) {
    ScalarField p = to_position(f);
    double mi = 0.0, ma = 0.0;
    for (const cplx& v : p.values) {
        mi = std::max(mi, std::abs(v.imag()));
        ma = std::max(ma, std::abs(v));
    }
    return ma == 0.0 ? 0.0 : mi / ma;
}

inline void require_same_layout(const ScalarField& a, const ScalarField& b, const char* what) {
    if (a.grid != b.grid) throw ContractViolation(std::string(what) + ": grid mismatch");
    if (a.domain != b.domain) throw ContractViolation(std::string(what) + ": domain mismatch");
}

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    require_same_layout(a, b, "operator+");
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b.values[i];
    out.reality_flag = a.reality_flag && b.reality_flag;
    return out;
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    require_same_layout(a, b, "operator-");
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= b.values[i];
    out.reality_flag = a.reality_flag && b.reality_flag;
    return out;
}

inline ScalarField operator*(cplx s, const ScalarField& f) {
    ScalarField out = f;
    for (cplx& v : out.values) v *= s;
    out.reality_flag = f.reality_flag && s.imag() == 0.0;
    return out;
}

inline ScalarField operator*(double s, const ScalarField& f) { return cplx(s, 0.0) * f; }

inline void axpy(ScalarField& y, cplx a, const ScalarField& x) {
    require_same_layout(y, x, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y.values[i] += a * x.values[i];
    y.reality_flag = y.reality_flag && x.reality_flag && a.imag() == 0.0;
}

/// mean over the torus = zero-mode coefficient
inline cplx mean(const ScalarField& f) {
    if (f.domain == Domain::frequency) return f.values[0];
    std::vector<cplx> tmp(f.values.begin(), f.values.end());
    // cheap: average of samples equals the zero mode
    return pairwise_sum(std::span<const cplx>(tmp)) / static_cast<double>(f.grid.total());
}

inline ScalarField conj(const ScalarField& f) {
    ScalarField p = to_position(f);
    for (cplx& v : p.values) v = std::conj(v);
    p.reality_flag = f.reality_flag;
    return p;
}

inline ScalarField real_part(const ScalarField& f) {
    ScalarField p = to_position(f);
    for (cplx& v : p.values) v = cplx(v.real(), 0.0);
    p.reality_flag = true;
    return p;
}

inline ScalarField imag_part(const ScalarField& f) {
    ScalarField p = to_position(f);
    for (cplx& v : p.values) v = cplx(v.imag(), 0.0);
    p.reality_flag = true;
    return p;
}

/// e^{i xi.x} with xi = 2*pi*k/L, built exactly in frequency space
inline ScalarField plane_wave(const GridSpec& g, const std::array<int, 4>& k, cplx amp = 1.0) {
    ScalarField f(g, Domain::frequency);
    f.set_mode(k, amp);
    return f;
}

/// Four real scalar fields sharing one grid (the spatial potential A_1..A_4).
struct VectorField {
    std::array<ScalarField, 4> comp;

    VectorField() = default;

    explicit VectorField(const GridSpec& g, Domain d = Domain::frequency) {
        for (auto& c : comp) c = ScalarField(g, d, true);
    }

    const GridSpec& grid() const { return comp[0].grid; }

    ScalarField& operator[](int j) { return comp[static_cast<std::size_t>(j)]; }
    const ScalarField& operator[](int j) const { return comp[static_cast<std::size_t>(j)]; }

    void require_consistent() const {
        for (int j = 1; j < 4; ++j)
            if (comp[static_cast<std::size_t>(j)].grid != comp[0].grid)
                throw ContractViolation("VectorField: components on different grids");
    }
};

inline VectorField operator+(const VectorField& a, const VectorField& b) {
    VectorField out;
    for (int j = 0; j < 4; ++j) out.comp[static_cast<std::size_t>(j)] = a[j] + b[j];
    return out;
}

inline VectorField operator-(const VectorField& a, const VectorField& b) {
    VectorField out;
    for (int j = 0; j < 4; ++j) out.comp[static_cast<std::size_t>(j)] = a[j] - b[j];
    return out;
}

inline VectorField operator*(double s, const VectorField& f) {
    VectorField out;
    for (int j = 0; j < 4; ++j) out.comp[static_cast<std::size_t>(j)] = s * f[j];
    return out;
}

}  // namespace mkg4d

#endif
