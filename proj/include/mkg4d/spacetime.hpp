#ifndef MKG4D_SPACETIME_HPP
#define MKG4D_SPACETIME_HPP

#include <cmath>
#include <string>
#include <vector>

#include "mkg4d/analysis.hpp"
#include "mkg4d/evolution.hpp"

namespace mkg4d {

/// Complex samples on a periodized time window times the spatial torus.
/// Position layout is [time][space]; frequency pairs tau_m = 2 pi m / T,
/// m in [-nt/2, nt/2), with the spatial convention of GridSpec. Temporal
/// Plancherel: sum_i |u(t_i)|^2 dt = T sum_m |uhat_m|^2.
struct SpaceTimeField {
    GridSpec grid;
    int nt = 0;
    double T = 0.0;
    Domain domain = Domain::frequency;
    std::vector<cplx> v;

    SpaceTimeField() = default;
    SpaceTimeField(const GridSpec& g, int nt_, double T_, Domain d)
        : grid(g), nt(nt_), T(T_), domain(d), v(static_cast<std::size_t>(nt_) * g.total()) {
        if (nt_ < 2 || !(T_ > 0.0))
            throw ContractViolation("SpaceTimeField: need nt >= 2 and T > 0");
    }

    std::size_t slice_stride() const { return grid.total(); }
    cplx* slice(int i) { return v.data() + static_cast<std::size_t>(i) * slice_stride(); }
    const cplx* slice(int i) const {
        return v.data() + static_cast<std::size_t>(i) * slice_stride();
    }

    int mode_of_time_index(int i) const { return i < nt / 2 ? i : i - nt; }
    double tau(int i) const {
        return 2.0 * std::numbers::pi * mode_of_time_index(i) / T;
    }
};

namespace detail {

// naive temporal DFT; nt is small and determinism matters more than speed
inline void time_dft(SpaceTimeField& u, bool forward) {
    const int nt = u.nt;
    const std::size_t ns = u.slice_stride();
    std::vector<cplx> twiddle(static_cast<std::size_t>(nt) * nt);
    const double sgn = forward ? -1.0 : 1.0;
    for (int m = 0; m < nt; ++m)
        for (int i = 0; i < nt; ++i)
            twiddle[static_cast<std::size_t>(m) * nt + i] =
                std::polar(1.0, sgn * 2.0 * std::numbers::pi * m * i / nt);
    std::vector<cplx> out(u.v.size());
    const double scale = forward ? 1.0 / nt : 1.0;
    parallel_for(ns, [&](std::size_t b, std::size_t e) {
        for (std::size_t x = b; x < e; ++x) {
            for (int m = 0; m < nt; ++m) {
                cplx acc = 0.0;
                for (int i = 0; i < nt; ++i)
                    acc += twiddle[static_cast<std::size_t>(m) * nt + i] *
                           u.v[static_cast<std::size_t>(i) * ns + x];
                out[static_cast<std::size_t>(m) * ns + x] = scale * acc;
            }
        }
    });
    u.v = std::move(out);
}

}  // namespace detail

/// full (tau, xi) coefficients from (t, x) samples
inline SpaceTimeField st_to_frequency(const SpaceTimeField& u) {
    if (u.domain == Domain::frequency) return u;
    SpaceTimeField out = u;
    std::vector<cplx> buf(u.grid.total());
    for (int i = 0; i < u.nt; ++i) {
        std::copy(out.slice(i), out.slice(i) + out.slice_stride(), buf.begin());
        detail::fft_forward(u.grid, buf);
        std::copy(buf.begin(), buf.end(), out.slice(i));
    }
    detail::time_dft(out, true);
    out.domain = Domain::frequency;
    return out;
}

inline SpaceTimeField st_to_position(const SpaceTimeField& u) {
    if (u.domain == Domain::position) return u;
    SpaceTimeField out = u;
    detail::time_dft(out, false);
    std::vector<cplx> buf(u.grid.total());
    for (int i = 0; i < u.nt; ++i) {
        std::copy(out.slice(i), out.slice(i) + out.slice_stride(), buf.begin());
        detail::fft_backward(u.grid, buf);
        std::copy(buf.begin(), buf.end(), out.slice(i));
    }
    out.domain = Domain::position;
    return out;
}

/// Half-cosine taper over the first and last `fraction` of the window.
inline double taper_weight(double t, double T, double fraction = 0.1) {
    const double edge = fraction * T;
    if (t < edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * t / edge));
    if (t > T - edge) return 0.5 * (1.0 - std::cos(std::numbers::pi * (T - t) / edge));
    return 1.0;
}

enum class StateComponent { phi, phit, A1, A2, A3, A4 };

inline const ScalarField& component_of(const State& s, StateComponent c) {
    switch (c) {
        case StateComponent::phi: return s.phi;
        case StateComponent::phit: return s.phit;
        case StateComponent::A1: return s.A[0];
        case StateComponent::A2: return s.A[1];
        case StateComponent::A3: return s.A[2];
        case StateComponent::A4: return s.A[3];
    }
    throw ContractViolation("component_of: bad selector");
}

/// Periodize a stored trajectory onto its window: taper the samples, drop
/// the final state (it aliases the first under periodization).
inline SpaceTimeField spacetime_from_trajectory(const Trajectory& traj, StateComponent c,
                                                double taper_fraction = 0.1) {
    if (traj.states.size() < 3)
        throw ContractViolation("spacetime_from_trajectory: need at least 3 states");
    const int nt = static_cast<int>(traj.states.size()) - 1;
    const double T = traj.dt * nt;
    SpaceTimeField out(traj.states.front().grid(), nt, T, Domain::position);
    for (int i = 0; i < nt; ++i) {
        const State& s = traj.states[static_cast<std::size_t>(i)];
        ScalarField f = to_position(component_of(s, c));
        const double w = taper_weight(s.t - traj.states.front().t, T, taper_fraction);
        for (std::size_t x = 0; x < out.slice_stride(); ++x)
            out.slice(i)[x] = w * f.values[x];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Space-time norms.
// ---------------------------------------------------------------------------

namespace detail {

// weight of the smooth light-cone multiplier at one (tau, xi) pair
inline double lambda_minus_weight(double tau2, double xi2, double theta) {
    const double d = tau2 - xi2;
    return std::pow(1.0 + d * d / (1.0 + tau2 + xi2), theta);
}

template <class Weight>
double st_weighted_l2(const SpaceTimeField& u, Weight&& w) {
    SpaceTimeField uf = st_to_frequency(u);
    std::vector<double> terms(uf.v.size());
    const std::size_t ns = uf.slice_stride();
    for (int m = 0; m < uf.nt; ++m) {
        const double tau = uf.tau(m);
        std::size_t base = static_cast<std::size_t>(m) * ns;
        for_each_mode(uf.grid, [&](std::size_t x, const double*, double, double xt2) {
            terms[base + x] = w(tau * tau, xt2) * std::norm(uf.v[base + x]);
        });
    }
    return std::sqrt(uf.T * uf.grid.box_volume() *
                     pairwise_sum(std::span<const double>(terms)));
}

}  // namespace detail

/// || Lambda^s Lambda_-^theta u ||_{L2(t,x)}
inline double st_norm_hs_theta(const SpaceTimeField& u, double s, double theta) {
    return detail::st_weighted_l2(u, [s, theta](double tau2, double xi2) {
        return std::pow(1.0 + xi2, s) * detail::lambda_minus_weight(tau2, xi2, theta);
    });
}

/// the variant carrying one time derivative: ||u||_{s,theta} + ||dt u||_{s-1,theta}
inline double st_norm_hs_theta_full(const SpaceTimeField& u, double s, double theta) {
    const double base = st_norm_hs_theta(u, s, theta);
    const double dt_part = detail::st_weighted_l2(u, [s, theta](double tau2, double xi2) {
        return tau2 * std::pow(1.0 + xi2, s - 1.0) *
               detail::lambda_minus_weight(tau2, xi2, theta);
    });
    return base + dt_part;
}

/// L^p_t L^q_x on the periodized window (Riemann sum in t; q may be large,
/// computed max-factored; p or q = infinity means the grid sup)
inline double st_norm_mixed(const SpaceTimeField& u, double p, double q) {
    SpaceTimeField up = st_to_position(u);
    const double dt = up.T / up.nt;
    std::vector<double> slice_norms(static_cast<std::size_t>(up.nt));
    std::vector<double> work(up.slice_stride());
    for (int i = 0; i < up.nt; ++i) {
        ScalarField f(up.grid, Domain::position, false);
        std::copy(up.slice(i), up.slice(i) + up.slice_stride(), f.values.begin());
        slice_norms[static_cast<std::size_t>(i)] = norm_lp(f, q);
    }
    if (std::isinf(p)) {
        double m = 0.0;
        for (double s : slice_norms) m = std::max(m, s);
        return m;
    }
    double mx = 0.0;
    for (double s : slice_norms) mx = std::max(mx, s);
    if (mx == 0.0) return 0.0;
    for (double& s : slice_norms) s = std::pow(s / mx, p);
    return mx * std::pow(dt * pairwise_sum(std::span<const double>(slice_norms)), 1.0 / p);
}

/// Modified mixed norm that depends only on |uhat|: coefficients are replaced
/// by their moduli under the weight Lambda^gamma Lambda_-^{1/2} before
/// synthesis. Exposed for the iteration-norm surrogate diagnostics.
inline double st_aux_l1l8(const SpaceTimeField& u, double gamma) {
    SpaceTimeField uf = st_to_frequency(u);
    const std::size_t ns = uf.slice_stride();
    for (int m = 0; m < uf.nt; ++m) {
        const double tau = uf.tau(m);
        std::size_t base = static_cast<std::size_t>(m) * ns;
        detail::for_each_mode(uf.grid, [&](std::size_t x, const double*, double, double xt2) {
            const double w = std::pow(1.0 + xt2, 0.5 * gamma) *
                             detail::lambda_minus_weight(tau * tau, xt2, 0.5);
            uf.v[base + x] = std::abs(uf.v[base + x]) * w;
        });
    }
    return st_norm_mixed(uf, 1.0, 8.0);
}

// ---------------------------------------------------------------------------
// Norm dispatcher mirroring the computable-functional menu.
// ---------------------------------------------------------------------------

struct NormKind {
    enum class Tag { sobolev, hdot, lp, mixed, wave_sobolev, data_norm } tag;
    double a = 0.0, b = 0.0;
    int k = 0;

    static NormKind sobolev(double s) { return {Tag::sobolev, s, 0.0, 0}; }
    static NormKind hdot(double alpha) { return {Tag::hdot, alpha, 0.0, 0}; }
    static NormKind lp(double p) { return {Tag::lp, p, 0.0, 0}; }
    static NormKind mixed(double p, double q) { return {Tag::mixed, p, q, 0}; }
    static NormKind wave_sobolev(double s, double theta) {
        return {Tag::wave_sobolev, s, theta, 0};
    }
    static NormKind data_norm(int k) { return {Tag::data_norm, 0.0, 0.0, k}; }
};

inline double norm(const ScalarField& f, const NormKind& kind) {
    switch (kind.tag) {
        case NormKind::Tag::sobolev: return norm_sobolev(f, kind.a);
        case NormKind::Tag::hdot: return norm_hdot(f, kind.a);
        case NormKind::Tag::lp: return norm_lp(f, kind.a);
        default:
            throw ContractViolation("norm: this kind needs a Trajectory argument");
    }
}

inline double norm(const Trajectory& traj, StateComponent c, const NormKind& kind,
                   double taper_fraction = 0.1) {
    switch (kind.tag) {
        case NormKind::Tag::mixed:
            return st_norm_mixed(spacetime_from_trajectory(traj, c, taper_fraction), kind.a,
                                 kind.b);
        case NormKind::Tag::wave_sobolev:
            return st_norm_hs_theta(spacetime_from_trajectory(traj, c, taper_fraction), kind.a,
                                    kind.b);
        default:
            throw ContractViolation("norm: this kind applies to a single field");
    }
}

inline double norm(const InitialData& d, double s, const NormKind& kind) {
    if (kind.tag != NormKind::Tag::data_norm)
        throw ContractViolation("norm: InitialData only carries the data norm");
    return data_norm(d.a, d.b, d.phi0, d.phi1, s, kind.k);
}

// ---------------------------------------------------------------------------
// Bilinear ratio probe: the scale-invariant statistic
//   || Lambda^{s-1} (-Delta)^{-1}(u v) ||_{L^p_t L^q_x}
//   / ( ||u||_{H^{s,theta}} ||v||_{H^{s-1,theta}} )
// over a seeded ensemble of band-limited space-time fields on the window
// T = 1. No constant is asserted; stability under grid refinement is the
// acceptance statistic.
// ---------------------------------------------------------------------------

struct BilinearProbeStats {
    int count = 0;
    int skipped = 0;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
    std::vector<double> ratios;
};

namespace detail {

// random space-time coefficients over a fixed mode box, identical for any
// grid large enough to hold them
inline SpaceTimeField random_spacetime(const GridSpec& g, int nt, double T, Rng& rng,
                                       int space_band, int time_band) {
    SpaceTimeField u(g, nt, T, Domain::frequency);
    const std::size_t ns = u.slice_stride();
    for (int m = -time_band; m <= time_band; ++m)
        for (int k1 = -space_band; k1 <= space_band; ++k1)
            for (int k2 = -space_band; k2 <= space_band; ++k2)
                for (int k3 = -space_band; k3 <= space_band; ++k3)
                    for (int k4 = -space_band; k4 <= space_band; ++k4) {
                        const double mag = rng.uniform(0.2, 1.0);
                        const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
                        const int mi = m >= 0 ? m : m + nt;
                        const std::size_t x =
                            g.flat(g.index_of_mode(k1), g.index_of_mode(k2),
                                   g.index_of_mode(k3), g.index_of_mode(k4));
                        u.v[static_cast<std::size_t>(mi) * ns + x] =
                            mag * cplx(std::cos(ph), std::sin(ph));
                    }
    return u;
}

// pointwise product of two slices known to satisfy band(a) + band(b) <= n/2;
// the direct grid product followed by band projection is then alias-exact
inline ScalarField slice_product(const ScalarField& a, const ScalarField& b) {
    ScalarField ap = to_position(a), bp = to_position(b);
    for (std::size_t i = 0; i < ap.size(); ++i) ap.values[i] *= bp.values[i];
    ap.reality_flag = a.reality_flag && b.reality_flag;
    return band_project(ap);
}

}  // namespace detail

/// ratio for one (u, v) pair, or a negative value when the denominator is
/// degenerate (the caller counts the sample as skipped)
inline double bilinear_probe_sample(const SpaceTimeField& u, const SpaceTimeField& v,
                                    const NormParams& np) {
    if (u.grid != v.grid || u.nt != v.nt)
        throw ContractViolation("bilinear_probe_sample: layout mismatch");
    const GridSpec& g = u.grid;
    const double T = u.T;
    const int pad_nt = 2 * u.nt;

    const double den_u = st_norm_hs_theta(u, np.s, np.theta);
    const double den_v = st_norm_hs_theta(v, np.s - 1.0, np.theta);
    if (den_u == 0.0 || den_v == 0.0) return -1.0;

    SpaceTimeField uf = st_to_frequency(u);
    SpaceTimeField vf = st_to_frequency(v);

    // exact synthesis of each field at 2 nt nodes (time-alias-free product),
    // alias-free spatial product per node
    std::vector<double> slice_q(static_cast<std::size_t>(pad_nt));
    for (int i = 0; i < pad_nt; ++i) {
        const double t = T * i / pad_nt;
        ScalarField us(g, Domain::frequency, false), vs(g, Domain::frequency, false);
        for (int m = 0; m < uf.nt; ++m) {
            const cplx ph = std::polar(1.0, uf.tau(m) * t);
            const cplx* usl = uf.slice(m);
            const cplx* vsl = vf.slice(m);
            for (std::size_t x = 0; x < us.size(); ++x) {
                us.values[x] += ph * usl[x];
                vs.values[x] += ph * vsl[x];
            }
        }
        ScalarField w = detail::slice_product(us, vs);
        // Lambda^{s-1} (-Delta)^{-1}, zero mode annihilated
        detail::for_each_mode(g, [&](std::size_t x, const double*, double xd2, double xt2) {
            w.values[x] = xd2 == 0.0
                              ? cplx(0.0)
                              : w.values[x] * std::pow(1.0 + xt2, 0.5 * (np.s - 1.0)) / xd2;
        });
        w = to_position(w);
        slice_q[static_cast<std::size_t>(i)] = norm_lp(w, np.q);
    }
    // L^p in time by the periodic Riemann sum
    double mx = 0.0;
    for (double s : slice_q) mx = std::max(mx, s);
    if (mx == 0.0) return 0.0;
    for (double& s : slice_q) s = std::pow(s / mx, np.p);
    const double lp = mx * std::pow((T / pad_nt) * pairwise_sum(std::span<const double>(slice_q)),
                                    1.0 / np.p);
    return lp / (den_u * den_v);
}

inline BilinearProbeStats bilinear_ratio_probe(std::uint64_t seed, int count,
                                               const NormParams& np, const GridSpec& g,
                                               int nt = 16, double T = 1.0, int space_band = 2,
                                               int time_band = 4) {
    if (2 * space_band > g.n_per_axis / 2)
        throw ContractViolation("bilinear_ratio_probe: band too wide for alias-free products");
    BilinearProbeStats st;
    st.count = count;
    for (int smp = 0; smp < count; ++smp) {
        Rng rng(seed * 92821ULL + static_cast<std::uint64_t>(smp));
        SpaceTimeField u = detail::random_spacetime(g, nt, T, rng, space_band, time_band);
        SpaceTimeField v = detail::random_spacetime(g, nt, T, rng, space_band, time_band);
        const double ratio = bilinear_probe_sample(u, v, np);
        if (ratio < 0.0) {
            ++st.skipped;
            continue;
        }
        st.ratios.push_back(ratio);
        st.max_ratio = std::max(st.max_ratio, ratio);
        st.mean_ratio += ratio;
    }
    if (!st.ratios.empty()) st.mean_ratio /= static_cast<double>(st.ratios.size());
    return st;
}

/// Smallest C with ||f||_{L4} <= C ||f||_{Hdot1} over a seeded mean-zero
/// ensemble; used as a grid-stability surrogate for the Sobolev embedding.
inline double l4_sobolev_constant(std::uint64_t seed, int count, const GridSpec& g,
                                  int band = 2) {
    double worst = 0.0;
    for (int smp = 0; smp < count; ++smp) {
        Rng rng(seed * 48271ULL + static_cast<std::uint64_t>(smp));
        ScalarField f = detail::seeded_field(g, rng, band, true);
        const double h = norm_hdot(f, 1.0);
        if (h == 0.0) continue;
        worst = std::max(worst, norm_lp(f, 4.0) / h);
    }
    return worst;
}

}  // namespace mkg4d

#endif
