#ifndef MKG4D_ANALYSIS_HPP
#define MKG4D_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "mkg4d/spectral.hpp"

namespace mkg4d {

/// Exponent bookkeeping (s, theta, eps, gamma, p, q, r).
///
/// Admissible ranges:
///   1/2 < theta < min(3/4, s/2),
///   0 < eps < (1/4) min(3/4 - theta, s/2 - theta),
///   gamma = theta - 1/2 - 3 eps,
///   1/p  = 3/2 - theta - 2 eps,   1/r = 1 - theta - 2 eps,
///   4/q  < min(2 theta - 1, 1 - 1/p).
struct NormParams {
    double s, theta, eps, gamma, p, q, r;

    NormParams(double s_, double theta_, double eps_, double gamma_, double p_, double q_,
               double r_)
        : s(s_), theta(theta_), eps(eps_), gamma(gamma_), p(p_), q(q_), r(r_) {
        validate();
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw ContractViolation("NormParams: " + m); };
        if (!(s > 1.0 && s < 2.0)) fail("s must lie in (1,2)");
        if (!(theta > 0.5 && theta < std::min(0.75, s / 2.0)))
            fail("theta outside (1/2, min(3/4, s/2))");
        if (!(eps > 0.0 && eps < 0.25 * std::min(0.75 - theta, s / 2.0 - theta)))
            fail("eps outside (0, (1/4) min(3/4-theta, s/2-theta))");
        if (std::abs(gamma - (theta - 0.5 - 3.0 * eps)) > 1e-12)
            fail("gamma != theta - 1/2 - 3 eps");
        if (std::abs(1.0 / p - (1.5 - theta - 2.0 * eps)) > 1e-12)
            fail("1/p != 3/2 - theta - 2 eps");
        if (std::abs(1.0 / r - (1.0 - theta - 2.0 * eps)) > 1e-12)
            fail("1/r != 1 - theta - 2 eps");
        if (!(4.0 / q < std::min(2.0 * theta - 1.0, 1.0 - 1.0 / p)))
            fail("4/q must be strictly below min(2 theta - 1, 1 - 1/p)");
    }
};

/// Canonical parameter choice for a given s: theta at the midpoint of its
/// interval, eps at half its ceiling, q the smallest admissible power of two
/// (capped at 1024; s too close to 1 is rejected rather than mis-capped).
inline NormParams select_parameters(double s) {
    if (!(s > 1.0 && s < 2.0)) throw ContractViolation("select_parameters: need 1 < s < 2");
    const double theta_hi = std::min(0.75, s / 2.0);
    const double theta = 0.5 + 0.5 * (theta_hi - 0.5);
    const double eps_hi = 0.25 * std::min(0.75 - theta, s / 2.0 - theta);
    const double eps = 0.5 * eps_hi;
    const double gamma = theta - 0.5 - 3.0 * eps;
    const double p = 1.0 / (1.5 - theta - 2.0 * eps);
    const double r = 1.0 / (1.0 - theta - 2.0 * eps);
    const double qbound = std::min(2.0 * theta - 1.0, 1.0 - 1.0 / p);
    double q = 2.0;
    while (!(4.0 / q < qbound)) {
        q *= 2.0;
        if (q > 1024.0)
            throw ContractViolation("select_parameters: admissible q exceeds the 1024 cap");
    }
    return NormParams(s, theta, eps, gamma, p, q, r);
}

// ---------------------------------------------------------------------------
// Norms of single fields. All weighted sums run through the fixed pairwise
// reduction tree.
// ---------------------------------------------------------------------------

namespace detail {

// mean-zero random band-limited field drawn in a grid-independent mode order
inline ScalarField seeded_field(const GridSpec& g, Rng& rng, int band, bool real_valued) {
    ScalarField f(g, Domain::frequency, real_valued);
    for (int k1 = -band; k1 <= band; ++k1)
        for (int k2 = -band; k2 <= band; ++k2)
            for (int k3 = -band; k3 <= band; ++k3)
                for (int k4 = -band; k4 <= band; ++k4) {
                    if (k1 == 0 && k2 == 0 && k3 == 0 && k4 == 0) continue;
                    const std::array<int, 4> k{k1, k2, k3, k4};
                    const double mag = rng.uniform(0.2, 1.0);
                    const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    const cplx v = mag * cplx(std::cos(ph), std::sin(ph));
                    if (real_valued) {
                        const std::array<int, 4> mk{-k1, -k2, -k3, -k4};
                        if (k < mk) continue;
                        f.set_mode(k, v);
                        f.set_mode(mk, std::conj(v));
                    } else {
                        f.set_mode(k, v);
                    }
                }
    return f;
}

template <class Weight>
double weighted_l2(const ScalarField& f, Weight&& w) {
    ScalarField fh = to_frequency(f);
    std::vector<double> terms(fh.size());
    for_each_mode(fh.grid, [&](std::size_t i, const double*, double, double xt2) {
        terms[i] = w(xt2) * std::norm(fh.values[i]);
    });
    return std::sqrt(fh.grid.box_volume() * pairwise_sum(std::span<const double>(terms)));
}

}  // namespace detail

/// || (1+|xi|^2)^{s/2} fhat ||, the inhomogeneous Sobolev norm
inline double norm_sobolev(const ScalarField& f, double s) {
    return detail::weighted_l2(f, [s](double xt2) { return std::pow(1.0 + xt2, s); });
}

/// homogeneous norm, zero mode excluded
inline double norm_hdot(const ScalarField& f, double alpha) {
    return detail::weighted_l2(
        f, [alpha](double xt2) { return xt2 == 0.0 ? 0.0 : std::pow(xt2, alpha); });
}

/// grid L^p norm; p = infinity means the max over samples
inline double norm_lp(const ScalarField& f, double p) {
    ScalarField fp = to_position(f);
    if (!(p >= 1.0)) throw ContractViolation("norm_lp: p must be >= 1");
    if (std::isinf(p)) return max_abs(fp);
    if (p == 2.0) {
        std::vector<double> terms(fp.size());
        for (std::size_t i = 0; i < fp.size(); ++i) terms[i] = std::norm(fp.values[i]);
        return std::sqrt(fp.grid.cell_volume() * pairwise_sum(std::span<const double>(terms)));
    }
    const double m = max_abs(fp);
    if (m == 0.0) return 0.0;
    std::vector<double> terms(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i)
        terms[i] = std::pow(std::abs(fp.values[i]) / m, p);
    return m * std::pow(fp.grid.cell_volume() * pairwise_sum(std::span<const double>(terms)),
                        1.0 / p);
}

inline double norm_sobolev(const VectorField& X, double s) {
    double sq = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double nj = norm_sobolev(X[j], s);
        sq += nj * nj;
    }
    return std::sqrt(sq);
}

inline double norm_l2(const ScalarField& f) { return norm_lp(f, 2.0); }

/// E_k = ||a||_{H^{s+k}} + ||b||_{H^{s+k-1}} + ||phi0||_{H^{s+k}} + ||phi1||_{H^{s+k-1}}
inline double data_norm(const VectorField& a, const VectorField& b, const ScalarField& phi0,
                        const ScalarField& phi1, double s, int k = 0) {
    return norm_sobolev(a, s + k) + norm_sobolev(b, s + k - 1) + norm_sobolev(phi0, s + k) +
           norm_sobolev(phi1, s + k - 1);
}

// ---------------------------------------------------------------------------
// Exact Fourier-space rescalings  f(x) -> lambda f(lambda x).
// ---------------------------------------------------------------------------

/// largest |mode index| carrying a nonzero coefficient
inline int band_of(const ScalarField& f) {
    ScalarField fh = to_frequency(f);
    const GridSpec& g = fh.grid;
    int band = 0;
    const int n = g.n_per_axis;
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
            for (int i3 = 0; i3 < n; ++i3)
                for (int i4 = 0; i4 < n; ++i4) {
                    if (fh.values[g.flat(i1, i2, i3, i4)] == cplx(0.0)) continue;
                    band = std::max({band, std::abs(g.mode_of(i1)), std::abs(g.mode_of(i2)),
                                     std::abs(g.mode_of(i3)), std::abs(g.mode_of(i4))});
                }
    return band;
}

/// lambda f(lambda x) on the shrunken torus [0, L/lambda)^4 with a grid
/// refined by lambda. Each retained mode keeps its index; its physical
/// wavevector scales by lambda and its amplitude by lambda. Exact.
inline ScalarField rescale(const ScalarField& f, int lambda) {
    if (lambda < 2) throw ContractViolation("rescale: lambda must be an integer >= 2");
    ScalarField fh = to_frequency(f);
    if (band_of(fh) >= fh.grid.n_per_axis / 2)
        throw ContractViolation("rescale: input carries Nyquist content");
    const GridSpec g(fh.grid.n_per_axis * lambda, fh.grid.box_length / lambda);
    ScalarField out(g, Domain::frequency, f.reality_flag);
    const int n = fh.grid.n_per_axis;
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
            for (int i3 = 0; i3 < n; ++i3)
                for (int i4 = 0; i4 < n; ++i4) {
                    const cplx v = fh.values[fh.grid.flat(i1, i2, i3, i4)];
                    if (v == cplx(0.0)) continue;
                    out.set_mode({fh.grid.mode_of(i1), fh.grid.mode_of(i2), fh.grid.mode_of(i3),
                                  fh.grid.mode_of(i4)},
                                 static_cast<double>(lambda) * v);
                }
    return out;
}

/// lambda f(lambda x) sampled on the original torus: mode k moves to mode
/// lambda k on a grid refined by lambda. Exact; requires lambda * band to fit.
inline ScalarField rescale_fixed_box(const ScalarField& f, int lambda) {
    if (lambda < 2) throw ContractViolation("rescale_fixed_box: lambda must be >= 2");
    ScalarField fh = to_frequency(f);
    const GridSpec g(fh.grid.n_per_axis * lambda, fh.grid.box_length);
    if (lambda * band_of(fh) > g.n_per_axis / 2 - 1)
        throw ContractViolation("rescale_fixed_box: lambda * band exceeds the refined Nyquist");
    ScalarField out(g, Domain::frequency, f.reality_flag);
    const int n = fh.grid.n_per_axis;
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
            for (int i3 = 0; i3 < n; ++i3)
                for (int i4 = 0; i4 < n; ++i4) {
                    const cplx v = fh.values[fh.grid.flat(i1, i2, i3, i4)];
                    if (v == cplx(0.0)) continue;
                    out.set_mode({lambda * fh.grid.mode_of(i1), lambda * fh.grid.mode_of(i2),
                                  lambda * fh.grid.mode_of(i3), lambda * fh.grid.mode_of(i4)},
                                 static_cast<double>(lambda) * v);
                }
    return out;
}

/// Both sides of the homogeneous-norm scaling relation:
/// lhs = ||lambda f(lambda .)||_{Hdot^s}, rhs = ||f||_{Hdot^s};
/// in four space dimensions lhs = lambda^{s-1} rhs.
struct ScalingCheck {
    double lhs, rhs;
};

inline ScalingCheck scaling_check(const ScalarField& f, double s, int lambda) {
    ScalarField g = rescale(f, lambda);
    return {norm_hdot(g, s), norm_hdot(f, s)};
}

}  // namespace mkg4d

#endif
