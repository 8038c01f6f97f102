#ifndef MKG4D_DATAGEN_HPP
#define MKG4D_DATAGEN_HPP

#include "mkg4d/config.hpp"
#include "mkg4d/evolution.hpp"

namespace mkg4d {

namespace detail {

// Deterministic per-field seed stream; the mode walk is grid-independent so
// the same seed reproduces the same coefficients at any resolution that
// holds the band.
inline Rng field_rng(std::uint64_t seed, int field_id) {
    return Rng(seed * 0x9e3779b97f4a7c15ull + 0x100000001b3ull * static_cast<std::uint64_t>(field_id + 1));
}

// coefficient magnitude amplitude * (1 + |xi|^2)^{-(s + slope)/2}, phase
// uniform; band limited by the euclidean mode radius
inline ScalarField sampled_field(const GridSpec& g, Rng rng, double amplitude, double s,
                                 double slope, int band, bool real_valued) {
    ScalarField f(g, Domain::frequency, real_valued);
    const double f2pi = 2.0 * std::numbers::pi / g.box_length;
    for (int k1 = -band; k1 <= band; ++k1)
        for (int k2 = -band; k2 <= band; ++k2)
            for (int k3 = -band; k3 <= band; ++k3)
                for (int k4 = -band; k4 <= band; ++k4) {
                    if (k1 * k1 + k2 * k2 + k3 * k3 + k4 * k4 >
                        band * band)
                        continue;
                    if (k1 == 0 && k2 == 0 && k3 == 0 && k4 == 0) continue;
                    const double xi2 = f2pi * f2pi *
                                       static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3 + k4 * k4);
                    const double mag =
                        amplitude * std::pow(1.0 + xi2, -0.5 * (s + slope));
                    const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    const std::array<int, 4> k{k1, k2, k3, k4};
                    if (real_valued) {
                        const std::array<int, 4> mk{-k1, -k2, -k3, -k4};
                        if (k < mk) continue;  // fill each +/- pair once
                        const cplx v = mag * cplx(std::cos(ph), std::sin(ph));
                        f.set_mode(k, v);
                        f.set_mode(mk, std::conj(v));
                    } else {
                        f.set_mode(k, mag * cplx(std::cos(ph), std::sin(ph)));
                    }
                }
    return f;
}

}  // namespace detail

/// Seeded divergence-free initial data with the configured spectral profile.
inline InitialData generate_data(const RunConfig& cfg) {
    cfg.validate();
    const GridSpec g(cfg.grid.n, cfg.grid.L);
    if (cfg.data.band_limit > g.n_per_axis / 2 - 1)
        throw ContractViolation("generate_data: band_limit beyond the retained band");

    const double s = cfg.analysis.s;
    const double slope = cfg.data.spectral_slope;
    const double amp = cfg.data.amplitude;
    const int band = cfg.data.band_limit;

    InitialData d;
    d.a = VectorField(g);
    d.b = VectorField(g);
    for (int j = 0; j < 4; ++j) {
        d.a[j] = detail::sampled_field(g, detail::field_rng(cfg.data.seed, j), amp, s, slope,
                                       band, true);
        d.b[j] = detail::sampled_field(g, detail::field_rng(cfg.data.seed, 4 + j), amp, s,
                                       slope, band, true);
    }
    d.a = leray_project(d.a);
    d.b = leray_project(d.b);
    d.phi0 =
        detail::sampled_field(g, detail::field_rng(cfg.data.seed, 8), amp, s, slope, band, false);
    d.phi1 =
        detail::sampled_field(g, detail::field_rng(cfg.data.seed, 9), amp, s, slope, band, false);

    if (norm_l2(divergence(d.a)) > 1e-12 * std::max(1.0, norm_sobolev(d.a, 1.0)) ||
        norm_l2(divergence(d.b)) > 1e-12 * std::max(1.0, norm_sobolev(d.b, 1.0)))
        throw ContractViolation("generate_data: projection left a divergence residue");
    return d;
}

}  // namespace mkg4d

#endif
