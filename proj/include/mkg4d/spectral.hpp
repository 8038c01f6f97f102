#ifndef MKG4D_SPECTRAL_HPP
#define MKG4D_SPECTRAL_HPP

#include <array>
#include <cmath>
#include <vector>

#include "mkg4d/field.hpp"

namespace mkg4d {

/// Fourier multiplier menu.
///
/// Homogeneous symbols (riesz, fractional_laplacian, derivative) are built
/// from the Nyquist-zeroed wavevector, and annihilate every mode on which
/// that vector vanishes (the zero mode and the pure-Nyquist planes). This
/// keeps the operator algebra -- Leray, R_j R^k contractions, null-form
/// identities -- exact on the retained symmetric band, and keeps real fields
/// real. bessel uses the true wavevector; it is an inhomogeneous norm weight,
/// not part of the homogeneous calculus.
struct MultiplierSpec {
    enum class Kind { bessel, riesz, fractional_laplacian, derivative };

    Kind kind;
    double order = 0.0;  // alpha for bessel / fractional_laplacian
    int axis = 0;        // 1..4 for riesz / derivative

    static MultiplierSpec bessel(double alpha) { return {Kind::bessel, alpha, 0}; }
    static MultiplierSpec riesz(int j) { return {Kind::riesz, 0.0, j}; }
    static MultiplierSpec fractional_laplacian(double alpha) {
        return {Kind::fractional_laplacian, alpha, 0};
    }
    static MultiplierSpec derivative(int j) { return {Kind::derivative, 0.0, j}; }
};

namespace detail {

struct SymbolTables {
    std::vector<double> xi_true;   // per-axis index -> 2*pi*k/L
    std::vector<double> xi_deriv;  // same, Nyquist zeroed

    static const SymbolTables& get(const GridSpec& g) {
        thread_local GridSpec cached_grid;
        thread_local SymbolTables t;
        if (!(cached_grid == g)) {
            t.xi_true = axis_xi(g, false);
            t.xi_deriv = axis_xi(g, true);
            cached_grid = g;
        }
        return t;
    }
};

// loop over the 4d frequency grid applying fn(flat, xi_deriv[4], |xi_deriv|^2, |xi_true|^2)
template <class Fn>
void for_each_mode(const GridSpec& g, Fn&& fn) {
    const auto& tab = SymbolTables::get(g);
    const int n = g.n_per_axis;
    std::size_t f = 0;
    for (int i1 = 0; i1 < n; ++i1) {
        const double d1 = tab.xi_deriv[static_cast<std::size_t>(i1)];
        const double t1 = tab.xi_true[static_cast<std::size_t>(i1)];
        for (int i2 = 0; i2 < n; ++i2) {
            const double d2 = tab.xi_deriv[static_cast<std::size_t>(i2)];
            const double t2 = tab.xi_true[static_cast<std::size_t>(i2)];
            for (int i3 = 0; i3 < n; ++i3) {
                const double d3 = tab.xi_deriv[static_cast<std::size_t>(i3)];
                const double t3 = tab.xi_true[static_cast<std::size_t>(i3)];
                for (int i4 = 0; i4 < n; ++i4, ++f) {
                    const double d4 = tab.xi_deriv[static_cast<std::size_t>(i4)];
                    const double t4 = tab.xi_true[static_cast<std::size_t>(i4)];
                    const double xd[4] = {d1, d2, d3, d4};
                    fn(f, xd, d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4,
                       t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4);
                }
            }
        }
    }
}

}  // namespace detail

inline ScalarField apply_multiplier(const ScalarField& f, const MultiplierSpec& m) {
    using Kind = MultiplierSpec::Kind;
    if ((m.kind == Kind::riesz || m.kind == Kind::derivative) && (m.axis < 1 || m.axis > 4))
        throw ContractViolation("apply_multiplier: axis must be in 1..4");
    ScalarField out = to_frequency(f);
    const int a = m.axis - 1;
    detail::for_each_mode(out.grid, [&](std::size_t i, const double* xd, double xd2, double xt2) {
        switch (m.kind) {
            case Kind::bessel:
                out.values[i] *= std::pow(1.0 + xt2, 0.5 * m.order);
                break;
            case Kind::fractional_laplacian:
                out.values[i] = xd2 == 0.0 ? cplx(0.0)
                                           : out.values[i] * std::pow(xd2, 0.5 * m.order);
                break;
            case Kind::riesz:
                out.values[i] = xd2 == 0.0
                                    ? cplx(0.0)
                                    : cplx(0.0, xd[a] / std::sqrt(xd2)) * out.values[i];
                break;
            case Kind::derivative:
                out.values[i] *= cplx(0.0, xd[a]);
                break;
        }
    });
    out.reality_flag = f.reality_flag;  // every symbol here is Hermitian-compatible
    return out;
}

inline ScalarField derivative(const ScalarField& f, int axis) {
    return apply_multiplier(f, MultiplierSpec::derivative(axis));
}

inline ScalarField riesz(const ScalarField& f, int axis) {
    return apply_multiplier(f, MultiplierSpec::riesz(axis));
}

inline ScalarField fractional_laplacian(const ScalarField& f, double alpha) {
    return apply_multiplier(f, MultiplierSpec::fractional_laplacian(alpha));
}

inline ScalarField bessel(const ScalarField& f, double alpha) {
    return apply_multiplier(f, MultiplierSpec::bessel(alpha));
}

/// Projection onto divergence-free vector fields, P X_j = X_j + R_j R^k X_k.
/// Identity on modes with vanishing (Nyquist-zeroed) wavevector, so constants
/// pass through and P is exactly idempotent.
inline VectorField leray_project(const VectorField& X) {
    X.require_consistent();
    std::array<ScalarField, 4> in;
    for (int j = 0; j < 4; ++j) in[static_cast<std::size_t>(j)] = to_frequency(X[j]);
    VectorField out(in[0].grid, Domain::frequency);
    for (int j = 0; j < 4; ++j) out[j].reality_flag = X[j].reality_flag;
    detail::for_each_mode(in[0].grid, [&](std::size_t i, const double* xd, double xd2, double) {
        if (xd2 == 0.0) {
            for (int j = 0; j < 4; ++j) out[j].values[i] = in[static_cast<std::size_t>(j)].values[i];
            return;
        }
        cplx dot = 0.0;
        for (int k = 0; k < 4; ++k) dot += xd[k] * in[static_cast<std::size_t>(k)].values[i];
        dot /= xd2;
        for (int j = 0; j < 4; ++j)
            out[j].values[i] = in[static_cast<std::size_t>(j)].values[i] - xd[j] * dot;
    });
    return out;
}

/// sum_j d_j X_j by spectral differentiation
inline ScalarField divergence(const VectorField& X) {
    X.require_consistent();
    std::array<ScalarField, 4> in;
    for (int j = 0; j < 4; ++j) in[static_cast<std::size_t>(j)] = to_frequency(X[j]);
    ScalarField out(in[0].grid, Domain::frequency, X[0].reality_flag);
    detail::for_each_mode(in[0].grid, [&](std::size_t i, const double* xd, double, double) {
        cplx s = 0.0;
        for (int j = 0; j < 4; ++j) s += cplx(0.0, xd[j]) * in[static_cast<std::size_t>(j)].values[i];
        out.values[i] = s;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Alias-free products.
//
// Nonlinearities are at most cubic; products are formed in position space on
// a grid zero-padded 2x per axis and truncated back to the symmetric band
// [-(n/2-1), n/2-1]^4. Zeroing the Nyquist planes on return makes truncation
// commute with conjugation and keeps the multiplier identities exact on
// everything a product can feed.
// ---------------------------------------------------------------------------

inline GridSpec padded_grid(const GridSpec& g) { return GridSpec(2 * g.n_per_axis, g.box_length); }

/// Position samples of a coarse field on the 2x zero-padded grid.
struct Padded {
    GridSpec coarse, fine;
    std::vector<cplx> pos;
};

inline Padded pad_field(const ScalarField& f) {
    ScalarField fh = to_frequency(f);
    const GridSpec& g = fh.grid;
    const GridSpec fine = padded_grid(g);
    Padded p{g, fine, std::vector<cplx>(fine.total(), cplx(0.0))};
    const int n = g.n_per_axis;
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
            for (int i3 = 0; i3 < n; ++i3) {
                // contiguous along axis 4: split the copy at the sign change
                const int f1 = fine.index_of_mode(g.mode_of(i1));
                const int f2 = fine.index_of_mode(g.mode_of(i2));
                const int f3 = fine.index_of_mode(g.mode_of(i3));
                for (int i4 = 0; i4 < n; ++i4) {
                    const int f4 = fine.index_of_mode(g.mode_of(i4));
                    p.pos[fine.flat(f1, f2, f3, f4)] = fh.values[g.flat(i1, i2, i3, i4)];
                }
            }
    detail::fft_backward(fine, p.pos);
    return p;
}

/// Forward transform on the fine grid, then truncation to the symmetric band.
inline ScalarField project_to_band(const GridSpec& coarse, std::vector<cplx> fine_pos,
                                   bool real_out) {
    const GridSpec fine = padded_grid(coarse);
    if (fine_pos.size() != fine.total())
        throw ContractViolation("project_to_band: buffer size mismatch");
    detail::fft_forward(fine, fine_pos);
    ScalarField out(coarse, Domain::frequency, real_out);
    const int n = coarse.n_per_axis;
    const int nyq = -n / 2;
    for (int i1 = 0; i1 < n; ++i1) {
        const int k1 = coarse.mode_of(i1);
        for (int i2 = 0; i2 < n; ++i2) {
            const int k2 = coarse.mode_of(i2);
            for (int i3 = 0; i3 < n; ++i3) {
                const int k3 = coarse.mode_of(i3);
                for (int i4 = 0; i4 < n; ++i4) {
                    const int k4 = coarse.mode_of(i4);
                    if (k1 == nyq || k2 == nyq || k3 == nyq || k4 == nyq) continue;
                    out.values[coarse.flat(i1, i2, i3, i4)] =
                        fine_pos[fine.flat(fine.index_of_mode(k1), fine.index_of_mode(k2),
                                           fine.index_of_mode(k3), fine.index_of_mode(k4))];
                }
            }
        }
    }
    return out;
}

/// Zero the Nyquist planes of a field (no other change).
inline ScalarField band_project(const ScalarField& f) {
    ScalarField out = to_frequency(f);
    const GridSpec& g = out.grid;
    const int nyq = -g.n_per_axis / 2;
    const int n = g.n_per_axis;
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
            for (int i3 = 0; i3 < n; ++i3)
                for (int i4 = 0; i4 < n; ++i4)
                    if (g.mode_of(i1) == nyq || g.mode_of(i2) == nyq || g.mode_of(i3) == nyq ||
                        g.mode_of(i4) == nyq)
                        out.values[g.flat(i1, i2, i3, i4)] = 0.0;
    return out;
}

/// Pointwise expression of several fields, evaluated alias-free.
/// fn receives the position values of the inputs at one fine-grid point.
template <class Fn>
ScalarField dealiased_eval(std::initializer_list<const ScalarField*> fields, Fn&& fn,
                           bool real_out) {
    if (fields.size() == 0) throw ContractViolation("dealiased_eval: no inputs");
    const GridSpec g = (*fields.begin())->grid;
    std::vector<Padded> pads;
    pads.reserve(fields.size());
    for (const ScalarField* f : fields) {
        if (f->grid != g) throw ContractViolation("dealiased_eval: grid mismatch");
        pads.push_back(pad_field(*f));
    }
    const std::size_t nf = pads.size();
    std::vector<cplx> prod(pads[0].fine.total());
    parallel_for(prod.size(), [&](std::size_t b, std::size_t e) {
        std::array<cplx, 16> vals{};
        for (std::size_t i = b; i < e; ++i) {
            for (std::size_t f = 0; f < nf; ++f) vals[f] = pads[f].pos[i];
            prod[i] = fn(vals.data());
        }
    });
    return project_to_band(g, std::move(prod), real_out);
}

inline ScalarField dealiased_product(const ScalarField& a, const ScalarField& b) {
    return dealiased_eval({&a, &b}, [](const cplx* v) { return v[0] * v[1]; },
                          a.reality_flag && b.reality_flag);
}

inline ScalarField dealiased_product(const ScalarField& a, const ScalarField& b,
                                     const ScalarField& c) {
    return dealiased_eval({&a, &b, &c}, [](const cplx* v) { return v[0] * v[1] * v[2]; },
                          a.reality_flag && b.reality_flag && c.reality_flag);
}

/// Bilinear null form Q_jk(u,v) = d_j u d_k v - d_k u d_j v  (axes 1..4).
inline ScalarField null_form_q(const ScalarField& u, const ScalarField& v, int j, int k) {
    if (j < 1 || j > 4 || k < 1 || k > 4)
        throw ContractViolation("null_form_q: axes must be in 1..4");
    const bool real_out = u.reality_flag && v.reality_flag;
    if (j == k) return ScalarField(u.grid, Domain::frequency, real_out);
    const ScalarField uj = derivative(u, j), uk = derivative(u, k);
    const ScalarField vj = derivative(v, j), vk = derivative(v, k);
    return dealiased_eval({&uj, &vk, &uk, &vj},
                          [](const cplx* w) { return w[0] * w[1] - w[2] * w[3]; }, real_out);
}

}  // namespace mkg4d

#endif
