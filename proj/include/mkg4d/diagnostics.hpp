#ifndef MKG4D_DIAGNOSTICS_HPP
#define MKG4D_DIAGNOSTICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mkg4d/evolution.hpp"

namespace mkg4d {

struct DiagnosticSeries {
    std::string name;
    std::vector<double> times;
    std::vector<double> values;
    bool endpoints_one_sided = false;  // set by diagnostics using time differences

    double max_value() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    double mean_value() const {
        if (values.empty()) return 0.0;
        return pairwise_sum(std::span<const double>(values)) /
               static_cast<double>(values.size());
    }
    double terminal() const { return values.empty() ? 0.0 : values.back(); }

    void validate() const {
        if (times.size() != values.size())
            throw ContractViolation("DiagnosticSeries: length mismatch");
        for (double v : values)
            if (!std::isfinite(v)) throw ContractViolation("DiagnosticSeries: non-finite value");
    }
};

// ---------------------------------------------------------------------------
// Current density j_mu = Im(phi conj(d_mu phi)) - A_mu |phi|^2, with A_0 from
// the elliptic solve.
// ---------------------------------------------------------------------------

inline std::array<ScalarField, 5> current(const State& s, double elliptic_tol = 1e-10) {
    const ScalarField& A0 = state_A0(s, elliptic_tol);
    std::array<ScalarField, 5> j;
    j[0] = dealiased_eval(
        {&s.phi, &s.phit, &A0},
        [](const cplx* v) {
            return cplx(std::imag(v[0] * std::conj(v[1])) - v[2].real() * std::norm(v[0]), 0.0);
        },
        true);
    for (int a = 1; a <= 4; ++a) {
        ScalarField dphi = derivative(s.phi, a);
        const ScalarField& Aa = s.A[a - 1];
        j[static_cast<std::size_t>(a)] = dealiased_eval(
            {&s.phi, &dphi, &Aa},
            [](const cplx* v) {
                return cplx(std::imag(v[0] * std::conj(v[1])) - v[2].real() * std::norm(v[0]),
                            0.0);
            },
            true);
    }
    return j;
}

/// total charge Q = integral of j_0
inline double total_charge(const State& s, double elliptic_tol = 1e-10) {
    const ScalarField& A0 = state_A0(s, elliptic_tol);
    ScalarField j0 = dealiased_eval(
        {&s.phi, &s.phit, &A0},
        [](const cplx* v) {
            return cplx(std::imag(v[0] * std::conj(v[1])) - v[2].real() * std::norm(v[0]), 0.0);
        },
        true);
    return s.grid().box_volume() * j0.values[0].real();
}

inline DiagnosticSeries charge(const Trajectory& traj, double elliptic_tol = 1e-10) {
    DiagnosticSeries out;
    out.name = "charge";
    for (const State& s : traj.states) {
        out.times.push_back(s.t);
        out.values.push_back(total_charge(s, elliptic_tol));
    }
    out.validate();
    return out;
}

/// |Q(t) - Q(0)| / max(|Q(0)|, floor)
inline double charge_relative_drift(const DiagnosticSeries& q, double floor_ = 1e-14) {
    if (q.values.empty()) return 0.0;
    const double q0 = q.values.front();
    double drift = 0.0;
    for (double v : q.values) drift = std::max(drift, std::abs(v - q0));
    return drift / std::max(std::abs(q0), floor_);
}

// ---------------------------------------------------------------------------

inline DiagnosticSeries constraint_residual(const Trajectory& traj) {
    DiagnosticSeries out;
    out.name = "constraint";
    for (const State& s : traj.states) {
        out.times.push_back(s.t);
        out.values.push_back(constraint_residual_l2(s));
    }
    out.validate();
    return out;
}

/// r(t) = || centered-difference of per-slice A0 minus B0 ||_L2.
/// Endpoints use one-sided differences and are flagged.
inline DiagnosticSeries equivalence_residual(const Trajectory& traj,
                                             double elliptic_tol = 1e-10) {
    if (traj.states.size() < 3)
        throw ContractViolation("equivalence_residual: need at least 3 states");
    DiagnosticSeries out;
    out.name = "equivalence";
    out.endpoints_one_sided = true;
    const double h = traj.dt;
    const std::size_t n = traj.states.size();

    std::vector<const ScalarField*> a0(n);
    const ScalarField* warm = nullptr;
    for (std::size_t i = 0; i < n; ++i) {
        a0[i] = &state_A0(traj.states[i], elliptic_tol, warm);
        warm = a0[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        ScalarField dt_a0 = (i == 0)       ? (1.0 / h) * (*a0[1] - *a0[0])
                            : (i == n - 1) ? (1.0 / h) * (*a0[n - 1] - *a0[n - 2])
                                           : (0.5 / h) * (*a0[i + 1] - *a0[i - 1]);
        out.times.push_back(traj.states[i].t);
        out.values.push_back(norm_l2(dt_a0 - state_B0(traj.states[i])));
    }
    out.validate();
    return out;
}

/// max interior residual relative to ||B0|| (endpoints excluded)
inline double equivalence_relative_max(const Trajectory& traj, double elliptic_tol = 1e-10) {
    DiagnosticSeries r = equivalence_residual(traj, elliptic_tol);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < r.values.size(); ++i) {
        const double b = norm_l2(state_B0(traj.states[i]));
        worst = std::max(worst, r.values[i] / std::max(b, 1e-300));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Gauge-covariant energy
//   E = int |D_t phi|^2 + sum_j |D_j phi|^2 + m^2 |phi|^2
//       + (1/2) sum_{mu<nu} F_{mu nu}^2,
// with D_mu = d_mu + i A_mu and A0 from the elliptic solve. The discrete
// functional has no external reference value; its validity is established by
// measured drift under refinement, never assumed.
// ---------------------------------------------------------------------------

inline double energy(const State& s, const PhysParams& p, double elliptic_tol = 1e-10) {
    const ScalarField& A0 = state_A0(s, elliptic_tol);

    auto sq = [](double x) { return x * x; };
    double total = 0.0;

    // |D_t phi|^2 with D_t phi = phit + i A0 phi
    {
        ScalarField dt_phi = s.phit + cplx(0.0, 1.0) * dealiased_product(A0, s.phi);
        total += sq(norm_l2(dt_phi));
    }
    // |D_j phi|^2
    for (int a = 1; a <= 4; ++a) {
        ScalarField cov = derivative(s.phi, a);
        axpy(cov, cplx(0.0, 1.0), dealiased_product(s.A[a - 1], s.phi));
        total += sq(norm_l2(cov));
    }
    // m^2 |phi|^2
    total += p.mass * p.mass * sq(norm_l2(s.phi));
    // (1/2) F_{0j}^2 with F_{0j} = At_j - d_j A0
    for (int a = 1; a <= 4; ++a)
        total += 0.5 * sq(norm_l2(s.At[a - 1] - derivative(A0, a)));
    // (1/2) F_{jk}^2, j < k
    for (int a = 1; a <= 4; ++a)
        for (int b = a + 1; b <= 4; ++b)
            total += 0.5 * sq(norm_l2(derivative(s.A[b - 1], a) - derivative(s.A[a - 1], b)));
    return total;
}

inline DiagnosticSeries energy_drift(const Trajectory& traj, double elliptic_tol = 1e-10) {
    DiagnosticSeries out;
    out.name = "energy";
    for (const State& s : traj.states) {
        out.times.push_back(s.t);
        out.values.push_back(energy(s, traj.params, elliptic_tol));
    }
    out.validate();
    return out;
}

inline double energy_relative_drift(const DiagnosticSeries& e) {
    if (e.values.empty()) return 0.0;
    const double e0 = e.values.front();
    double drift = 0.0;
    for (double v : e.values) drift = std::max(drift, std::abs(v - e0));
    return drift / std::max(std::abs(e0), 1e-300);
}

// ---------------------------------------------------------------------------
// Field tensor F_{mu nu} = d_mu A_nu - d_nu A_mu on a slice; dt A0 is
// supplied by B0 (which never enters F: F_00 = 0 and F_{0j} needs only
// dt A_j and d_j A0), dt A_j by the state.
// ---------------------------------------------------------------------------

struct FieldTensor {
    std::array<std::array<ScalarField, 5>, 5> F;
};

inline FieldTensor field_tensor(const State& s, double elliptic_tol = 1e-10) {
    const ScalarField& A0 = state_A0(s, elliptic_tol);
    FieldTensor out;
    const GridSpec& g = s.grid();
    for (int mu = 0; mu < 5; ++mu) out.F[static_cast<std::size_t>(mu)][static_cast<std::size_t>(mu)] =
        ScalarField(g, Domain::frequency, true);
    for (int a = 1; a <= 4; ++a) {
        ScalarField f0a = to_frequency(s.At[a - 1]) - derivative(A0, a);
        out.F[0][static_cast<std::size_t>(a)] = f0a;
        out.F[static_cast<std::size_t>(a)][0] = -1.0 * f0a;
    }
    for (int a = 1; a <= 4; ++a)
        for (int b = a + 1; b <= 4; ++b) {
            ScalarField fab = derivative(s.A[b - 1], a) - derivative(s.A[a - 1], b);
            out.F[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = fab;
            out.F[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = -1.0 * fab;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Null-form gain on near-parallel wave packets. Pairs of lattice modes whose
// angle tracks delta in {0.5, 0.25, 0.125} rad; the statistic is
//   g(delta) = ||Q_jk(u,v)||_L2 / (||grad u||_L4 ||grad v||_L4)
// summed over the axis pairs, against a generic-product baseline.
// ---------------------------------------------------------------------------

struct NullformGainStats {
    std::array<double, 3> delta;       // achieved angles
    std::array<double, 3> gain;        // ensemble mean of g(delta)
    std::array<double, 3> gain_over_delta_min;
    std::array<double, 3> gain_over_delta_max;
    double parallel_gain = 0.0;        // exactly parallel pair
    double orthogonal_gain = 0.0;
    double baseline = 0.0;             // generic product statistic, orthogonal pair
};

namespace detail {

inline double packet_gain(const ScalarField& u, const ScalarField& v) {
    double qsq = 0.0;
    for (int c = 0; c < 6; ++c) {
        const double q = norm_l2(null_form_q(u, v, pair_j[c], pair_k[c]));
        qsq += q * q;
    }
    double gu = 0.0, gv = 0.0;
    for (int a = 1; a <= 4; ++a) {
        gu += std::pow(norm_lp(derivative(u, a), 4.0), 2.0);
        gv += std::pow(norm_lp(derivative(v, a), 4.0), 2.0);
    }
    return std::sqrt(qsq) / (std::sqrt(gu) * std::sqrt(gv));
}

inline double packet_baseline(const ScalarField& u, const ScalarField& v) {
    double psq = 0.0;
    for (int j = 1; j <= 4; ++j)
        for (int k = 1; k <= 4; ++k) {
            ScalarField dj = derivative(u, j);
            ScalarField dk = derivative(v, k);
            const double q = norm_l2(dealiased_product(dj, dk));
            psq += q * q;
        }
    double gu = 0.0, gv = 0.0;
    for (int a = 1; a <= 4; ++a) {
        gu += std::pow(norm_lp(derivative(u, a), 4.0), 2.0);
        gv += std::pow(norm_lp(derivative(v, a), 4.0), 2.0);
    }
    return std::sqrt(psq) / (std::sqrt(gu) * std::sqrt(gv));
}

}  // namespace detail

inline NullformGainStats nullform_gain(std::uint64_t seed, int count,
                                       const GridSpec& g = GridSpec(16, 2 * std::numbers::pi)) {
    // lattice directions closest to the nominal angles 0.5, 0.25, 0.125 rad:
    // (2,1) -> 0.4636, (4,1) -> 0.2450, (7,1) -> 0.1419. The u mode points
    // down the negative first axis so every product mode stays in band.
    static constexpr int base_a[3] = {2, 4, 7};
    static constexpr int base_b[3] = {1, 1, 1};
    NullformGainStats st;
    for (int d = 0; d < 3; ++d)
        st.delta[static_cast<std::size_t>(d)] =
            std::atan2(static_cast<double>(base_b[d]), static_cast<double>(base_a[d]));
    st.gain_over_delta_min.fill(1e300);
    st.gain_over_delta_max.fill(0.0);
    std::array<double, 3> gsum{};

    Rng rng(seed);
    for (int c = 0; c < count; ++c) {
        // a random axis pair carries the 2-plane; amplitudes are random
        const int ax1 = static_cast<int>(rng.next_u64() % 4);
        int ax2 = static_cast<int>(rng.next_u64() % 3);
        if (ax2 >= ax1) ++ax2;
        const cplx amp_u(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5));
        const cplx amp_v(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5));
        const int m = 4 + static_cast<int>(rng.next_u64() % 3);  // |base mode| 4..6

        std::array<int, 4> ku{0, 0, 0, 0};
        ku[static_cast<std::size_t>(ax1)] = -m;
        ScalarField u = plane_wave(g, ku, amp_u);

        for (int d = 0; d < 3; ++d) {
            std::array<int, 4> kv{0, 0, 0, 0};
            kv[static_cast<std::size_t>(ax1)] = base_a[d];
            kv[static_cast<std::size_t>(ax2)] = base_b[d];
            ScalarField v = plane_wave(g, kv, amp_v);
            const double gd = detail::packet_gain(u, v);
            gsum[static_cast<std::size_t>(d)] += gd;
            const double r = gd / st.delta[static_cast<std::size_t>(d)];
            st.gain_over_delta_min[static_cast<std::size_t>(d)] =
                std::min(st.gain_over_delta_min[static_cast<std::size_t>(d)], r);
            st.gain_over_delta_max[static_cast<std::size_t>(d)] =
                std::max(st.gain_over_delta_max[static_cast<std::size_t>(d)], r);
        }

        if (c == 0) {
            // exactly parallel and exactly orthogonal reference pairs
            std::array<int, 4> kp{0, 0, 0, 0};
            kp[static_cast<std::size_t>(ax1)] = m - 3 == 0 ? 1 : m - 3;
            st.parallel_gain = detail::packet_gain(u, plane_wave(g, kp, amp_v));
            std::array<int, 4> ko{0, 0, 0, 0};
            ko[static_cast<std::size_t>(ax2)] = m;
            ScalarField vo = plane_wave(g, ko, amp_v);
            st.orthogonal_gain = detail::packet_gain(u, vo);
            st.baseline = detail::packet_baseline(u, vo);
        }
    }
    for (int d = 0; d < 3; ++d)
        st.gain[static_cast<std::size_t>(d)] = gsum[static_cast<std::size_t>(d)] / count;
    return st;
}

// ---------------------------------------------------------------------------
// Identity suite: every multiplier-algebra identity checked on seeded
// mean-zero band-limited samples. The torus zero mode of bilinears is
// exempted (homogeneous multipliers cannot carry it); the exempted magnitude
// is reported, never silently dropped.
// ---------------------------------------------------------------------------

struct IdentityCheck {
    std::string name;
    double residual = 0.0;
    bool zero_mode_exempt = false;
    double exempted_zero_mode = 0.0;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;
    bool pass = true;
    std::string first_failure;
    double max_residual = 0.0;
    double tolerance = 1e-10;

    void absorb(const IdentityCheck& c) {
        checks.push_back(c);
        if (c.residual > max_residual) max_residual = c.residual;
        if (c.residual > tolerance && pass) {
            pass = false;
            first_failure = c.name;
        }
    }
};

namespace detail {

inline double rel_residual(const ScalarField& lhs, const ScalarField& rhs) {
    const double den = std::max(norm_l2(rhs), norm_l2(lhs));
    return den == 0.0 ? 0.0 : norm_l2(lhs - rhs) / den;
}

}  // namespace detail

/// One round of identity checks on given fields: u, v real; w complex;
/// A real divergence-free mean-zero. Means of u, v need not vanish: the
/// identities drop input means consistently on both sides, and the bilinear
/// zero mode is exempted and reported.
inline void identity_suite_sample(IdentityReport& rep, const ScalarField& u,
                                  const ScalarField& v, const ScalarField& w,
                                  const VectorField& A, const std::string& tag) {
    const GridSpec& g = u.grid;

    // shared null forms Q_jk(u, v), ordered as pair_j/pair_k
    std::array<ScalarField, 6> quv;
    for (int c = 0; c < 6; ++c)
        quv[static_cast<std::size_t>(c)] = null_form_q(u, v, detail::pair_j[c], detail::pair_k[c]);
    auto q_of = [&](int j, int k) -> ScalarField {
        for (int c = 0; c < 6; ++c) {
            if (detail::pair_j[c] == j && detail::pair_k[c] == k)
                return quv[static_cast<std::size_t>(c)];
            if (detail::pair_j[c] == k && detail::pair_k[c] == j)
                return -1.0 * quv[static_cast<std::size_t>(c)];
        }
        return ScalarField(g, Domain::frequency, true);
    };
    auto null_form_rhs = [&](int j) {
        ScalarField rhs(g, Domain::frequency, true);
        for (int k = 1; k <= 4; ++k) {
            if (k == j) continue;
            rhs = rhs + riesz(fractional_laplacian(q_of(j, k), -1.0), k);
        }
        return rhs;
    };

    // P(u d_j v) = R^k (-Delta)^{-1/2} Q_jk(u, v), zero mode exempt
    {
        VectorField ugradv(g);
        for (int a = 1; a <= 4; ++a) {
            ScalarField da = derivative(v, a);
            ugradv[a - 1] = dealiased_product(u, da);
        }
        VectorField lhs = leray_project(ugradv);
        for (int j = 1; j <= 4; ++j) {
            IdentityCheck c;
            c.name = "projection of u grad v as null forms, axis " + std::to_string(j) + tag;
            c.zero_mode_exempt = true;
            c.exempted_zero_mode = std::abs(lhs[j - 1].values[0]);
            ScalarField lhs_mz = lhs[j - 1];
            lhs_mz.values[0] = 0.0;
            c.residual = detail::rel_residual(lhs_mz, null_form_rhs(j));
            rep.absorb(c);
        }
    }

    // phi = u + iv: P(-Im(phi d_j conj phi)) = 2 R^k (-Delta)^{-1/2} Q_jk(u, v)
    {
        ScalarField phi = u + cplx(0.0, 1.0) * v;
        VectorField lhs_in(g);
        for (int a = 1; a <= 4; ++a) {
            ScalarField dphi = derivative(phi, a);
            lhs_in[a - 1] = dealiased_eval(
                {&phi, &dphi},
                [](const cplx* z) { return cplx(-std::imag(z[0] * std::conj(z[1])), 0.0); },
                true);
        }
        VectorField lhs = leray_project(lhs_in);
        for (int j = 1; j <= 4; ++j) {
            IdentityCheck c;
            c.name = "current projection as null forms, axis " + std::to_string(j) + tag;
            c.zero_mode_exempt = true;
            c.exempted_zero_mode = std::abs(lhs[j - 1].values[0]);
            ScalarField lhs_mz = lhs[j - 1];
            lhs_mz.values[0] = 0.0;
            c.residual = detail::rel_residual(lhs_mz, 2.0 * null_form_rhs(j));
            rep.absorb(c);
        }
    }

    // divergence-free mean-zero A: 2 A^j d_j w as a null form
    {
        ScalarField lhs(g, Domain::frequency);
        for (int j = 1; j <= 4; ++j) {
            ScalarField dw = derivative(w, j);
            const ScalarField& Aj = A[j - 1];
            lhs = lhs +
                  dealiased_eval({&Aj, &dw}, [](const cplx* z) { return z[0] * z[1]; }, false);
        }
        lhs = 2.0 * lhs;
        ScalarField rhs(g, Domain::frequency);
        for (int j = 1; j <= 4; ++j)
            for (int k = 1; k <= 4; ++k) {
                if (j == k) continue;
                ScalarField cjk =
                    fractional_laplacian(riesz(A[k - 1], j) - riesz(A[j - 1], k), -1.0);
                rhs = rhs + null_form_q(w, cjk, j, k);
            }
        IdentityCheck c;
        c.name = "vector-potential transport as a null form" + tag;
        c.residual = detail::rel_residual(lhs, rhs);
        rep.absorb(c);
    }

    // Leray idempotence and gradient annihilation
    {
        VectorField X(g);
        for (int j = 0; j < 4; ++j) X[j] = to_frequency(real_part(w)) + derivative(u, j + 1);
        VectorField P1 = leray_project(X);
        VectorField P2 = leray_project(P1);
        double r = 0.0;
        for (int j = 0; j < 4; ++j) r = std::max(r, detail::rel_residual(P2[j], P1[j]));
        IdentityCheck c1;
        c1.name = "Leray idempotence" + tag;
        c1.residual = r;
        rep.absorb(c1);

        VectorField grad(g);
        for (int j = 0; j < 4; ++j) grad[j] = derivative(u, j + 1);
        VectorField pg = leray_project(grad);
        double scale = 0.0, resid = 0.0;
        for (int j = 0; j < 4; ++j) {
            scale = std::max(scale, norm_l2(grad[j]));
            resid = std::max(resid, norm_l2(pg[j]));
        }
        IdentityCheck c2;
        c2.name = "Leray annihilates gradients" + tag;
        c2.residual = scale == 0.0 ? 0.0 : resid / scale;
        rep.absorb(c2);
    }

    // null form antisymmetry and parallel-frequency vanishing
    {
        double r = 0.0;
        const double scale = std::max(1e-300, norm_sobolev(w, 1.0) * norm_sobolev(w, 1.0));
        for (int c = 0; c < 6; ++c)
            r = std::max(
                r, norm_l2(null_form_q(w, w, detail::pair_j[c], detail::pair_k[c])) / scale);
        IdentityCheck c1;
        c1.name = "null form vanishes on equal arguments" + tag;
        c1.residual = r;
        rep.absorb(c1);

        ScalarField pa = plane_wave(g, {1, 1, 0, 0});
        ScalarField pb = plane_wave(g, {2, 2, 0, 0});
        double rp = 0.0;
        for (int c = 0; c < 6; ++c)
            rp = std::max(rp,
                          max_abs(null_form_q(pa, pb, detail::pair_j[c], detail::pair_k[c])));
        IdentityCheck c2;
        c2.name = "null form vanishes on parallel frequencies" + tag;
        c2.residual = rp;
        rep.absorb(c2);
    }

    // Riesz transforms are L2 contractions
    {
        double worst = 0.0;
        const double nw = norm_l2(w);
        for (int j = 1; j <= 4; ++j)
            worst = std::max(worst, norm_l2(riesz(w, j)) / nw - 1.0);
        IdentityCheck c;
        c.name = "Riesz L2 contraction" + tag;
        c.residual = std::max(0.0, worst);
        rep.absorb(c);
    }
}

inline IdentityReport identity_suite(std::uint64_t seed, int samples = 16,
                                     const GridSpec& g = GridSpec(8, 2 * std::numbers::pi)) {
    IdentityReport rep;
    const int band = g.n_per_axis / 2 - 1;
    for (int smp = 0; smp < samples; ++smp) {
        Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(smp));
        ScalarField u = detail::seeded_field(g, rng, band, true);
        ScalarField v = detail::seeded_field(g, rng, band, true);
        ScalarField w = detail::seeded_field(g, rng, band, false);
        VectorField A(g);
        for (int j = 0; j < 4; ++j) A[j] = detail::seeded_field(g, rng, band, true);
        A = leray_project(A);
        identity_suite_sample(rep, u, v, w, A, " [sample " + std::to_string(smp) + "]");
    }
    return rep;
}

}  // namespace mkg4d

#endif
