#ifndef MKG4D_EVOLUTION_HPP
#define MKG4D_EVOLUTION_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mkg4d/elliptic.hpp"

namespace mkg4d {

struct PhysParams {
    double mass = 0.0;

    void validate() const {
        if (!(mass >= 0.0) || !std::isfinite(mass))
            throw ContractViolation("PhysParams: mass must be finite and non-negative");
    }
};

struct InitialData {
    VectorField a, b;     // A and dA/dt at t = 0 (real, divergence-free)
    ScalarField phi0, phi1;
};

/// Dynamical snapshot. A0 and B0 are derived per slice; state_A0/state_B0
/// fill the caches on demand.
struct State {
    double t = 0.0;
    VectorField A, At;
    ScalarField phi, phit;
    mutable std::shared_ptr<const ScalarField> A0_cache, B0_cache;

    const GridSpec& grid() const { return phi.grid; }
};

inline const ScalarField& state_A0(const State& s, double tol = 1e-10,
                                   const ScalarField* warm = nullptr) {
    if (!s.A0_cache)
        s.A0_cache = std::make_shared<const ScalarField>(
            compute_A0(s.phi, s.phit, tol, 500, warm).solution);
    return *s.A0_cache;
}

inline const ScalarField& state_B0(const State& s) {
    if (!s.B0_cache) s.B0_cache = std::make_shared<const ScalarField>(compute_B0(s.A, s.phi));
    return *s.B0_cache;
}

inline double constraint_residual_l2(const State& s) { return norm_l2(divergence(s.A)); }

/// Time-ordered states with uniform spacing.
struct Trajectory {
    std::vector<State> states;
    PhysParams params;
    double dt = 0.0;

    void validate() const {
        for (std::size_t i = 1; i < states.size(); ++i) {
            const double h = states[i].t - states[i - 1].t;
            if (!(h > 0.0)) throw ContractViolation("Trajectory: times must strictly increase");
            if (std::abs(h - dt) > 1e-12 * std::max(1.0, std::abs(dt)))
                throw ContractViolation("Trajectory: spacing is not uniform");
        }
    }

    std::size_t size() const { return states.size(); }
};

// ---------------------------------------------------------------------------
// Right-hand sides of the gauge-eliminated wave system
//   dtt A   = Delta A   - M(A, phi)
//   dtt phi = Delta phi - N(A, phi)
// with
//   M_j = 2 R^k (-Delta)^{-1/2} Q_jk(Re phi, Im phi) + P(|phi|^2 A)_j
//   N   = -i Q_jk(phi, (-Delta)^{-1/2}[R^j A^k - R^k A^j])
//         + 2i A0 phit + i B0 phi - A0^2 phi + |A|^2 phi + m^2 phi.
// ---------------------------------------------------------------------------

struct RhsTerms {
    VectorField M1, M2;            // M = M1 + M2
    std::array<ScalarField, 6> N;  // N1..N6
    EllipticSolveReport A0;
    ScalarField B0;
    double div_M_ratio = 0.0;      // ||div M||_L2 / ||M||_Hdot1

    VectorField M() const { return M1 + M2; }

    ScalarField N_total() const {
        ScalarField out = N[0];
        for (int k = 1; k < 6; ++k) out = out + N[k];
        return out;
    }
};

struct RhsOptions {
    double elliptic_tol = 1e-10;
    int elliptic_max_iter = 500;
    const ScalarField* A0_warm = nullptr;
};

namespace detail {

constexpr int pair_j[6] = {1, 1, 1, 2, 2, 3};
constexpr int pair_k[6] = {2, 3, 4, 3, 4, 4};

inline ScalarField laplacian(const ScalarField& f) {
    ScalarField out = to_frequency(f);
    for_each_mode(out.grid, [&](std::size_t i, const double*, double, double xt2) {
        out.values[i] *= -xt2;
    });
    return out;
}

}  // namespace detail

inline RhsTerms eval_rhs_terms(const State& s, const PhysParams& p, const RhsOptions& opt = {}) {
    p.validate();
    const GridSpec& g = s.phi.grid;
    const GridSpec fine = padded_grid(g);
    const std::size_t nf = fine.total();

    // W_j = sum_k d_k C_jk with C_jk = (-Delta)^{-1/2}[R^j A^k - R^k A^j];
    // the N1 double sum -i sum_{j,k} Q_jk(phi, C_jk) collapses to
    // -2i sum_j d_j phi * W_j, and the symbol of W is the Leray projector
    // away from the kernel of the homogeneous calculus (exact mode by mode).
    VectorField Wfields = leray_project(s.A);
    for (int j = 0; j < 4; ++j)
        detail::for_each_mode(g, [&](std::size_t i, const double*, double xd2, double) {
            if (xd2 == 0.0) Wfields[j].values[i] = 0.0;
        });

    // shared padded position values, batched across workers
    std::array<ScalarField, 14> to_pad;
    to_pad[0] = to_frequency(s.phi);
    to_pad[1] = to_frequency(s.phit);
    for (int a = 0; a < 4; ++a) to_pad[2 + static_cast<std::size_t>(a)] = derivative(s.phi, a + 1);
    for (int j = 0; j < 4; ++j) to_pad[6 + static_cast<std::size_t>(j)] = to_frequency(s.A[j]);
    for (int j = 0; j < 4; ++j) to_pad[10 + static_cast<std::size_t>(j)] = Wfields[static_cast<std::size_t>(j)];
    std::array<Padded, 14> pads;
    detail::FftPlans::get(fine.n_per_axis);  // plan before threading
    parallel_for_items(14, [&](std::size_t i) { pads[i] = pad_field(to_pad[i]); });
    const Padded& pphi = pads[0];
    const Padded& pphit = pads[1];
    auto pdphi = [&](int a) -> const Padded& { return pads[2 + static_cast<std::size_t>(a)]; };
    auto pA = [&](int j) -> const Padded& { return pads[6 + static_cast<std::size_t>(j)]; };
    auto pW = [&](int j) -> const Padded& { return pads[10 + static_cast<std::size_t>(j)]; };

    std::vector<double> phi2(nf);
    for (std::size_t i = 0; i < nf; ++i) phi2[i] = std::norm(pphi.pos[i]);

    // first projection batch: everything that only needs the state pads
    // [0..5] Q_jk, [6..9] |phi|^2 A_j, [10] f for the A0 solve,
    // [11..14] B0 brackets, [15] N1 accumulation, [16] |A|^2 phi
    std::vector<std::vector<cplx>> bufs(17);
    std::vector<ScalarField> projected(17);
    for (auto& b : bufs) b.resize(nf);
    for (int c = 0; c < 6; ++c) {
        const int j = detail::pair_j[c], k = detail::pair_k[c];
        const auto& dj = pdphi(j - 1).pos;
        const auto& dk = pdphi(k - 1).pos;
        auto& q = bufs[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < nf; ++i)
            q[i] = dj[i].real() * dk[i].imag() - dk[i].real() * dj[i].imag();
    }
    for (int j = 0; j < 4; ++j) {
        auto& m = bufs[6 + static_cast<std::size_t>(j)];
        const auto& aj = pA(j).pos;
        for (std::size_t i = 0; i < nf; ++i) m[i] = phi2[i] * aj[i].real();
    }
    for (std::size_t i = 0; i < nf; ++i)
        bufs[10][i] = -std::imag(pphi.pos[i] * std::conj(pphit.pos[i]));
    for (int j = 0; j < 4; ++j) {
        auto& gv = bufs[11 + static_cast<std::size_t>(j)];
        const auto& dj = pdphi(j).pos;
        const auto& aj = pA(j).pos;
        for (std::size_t i = 0; i < nf; ++i)
            gv[i] = std::imag(pphi.pos[i] * std::conj(dj[i])) - phi2[i] * aj[i].real();
    }
    {
        auto& acc = bufs[15];
        std::fill(acc.begin(), acc.end(), cplx(0.0));
        for (int j = 0; j < 4; ++j) {
            const auto& dphij = pdphi(j).pos;
            const auto& wj = pW(j).pos;
            for (std::size_t i = 0; i < nf; ++i) acc[i] += dphij[i] * wj[i];
        }
    }
    for (std::size_t i = 0; i < nf; ++i) {
        double a2 = 0.0;
        for (int j = 0; j < 4; ++j) {
            const double v = pA(j).pos[i].real();
            a2 += v * v;
        }
        bufs[16][i] = a2 * pphi.pos[i];
    }
    parallel_for_items(17, [&](std::size_t i) {
        projected[i] = project_to_band(g, std::move(bufs[i]), i <= 14);
    });

    RhsTerms out;

    // M1_j = 2 R^k (-Delta)^{-1/2} Q_jk(Re phi, Im phi), fused over modes:
    // M1_j = (2i / |xi|^2) sum_k xi_k Qhat_jk, with Q antisymmetric
    out.M1 = VectorField(g);
    detail::for_each_mode(g, [&](std::size_t i, const double* xd, double xd2, double) {
        if (xd2 == 0.0) return;
        const cplx f(0.0, 2.0 / xd2);
        cplx q[4][4];
        for (int c = 0; c < 6; ++c) {
            const int j = detail::pair_j[c] - 1, k = detail::pair_k[c] - 1;
            q[j][k] = projected[static_cast<std::size_t>(c)].values[i];
            q[k][j] = -q[j][k];
        }
        for (int j = 0; j < 4; ++j) {
            cplx acc = 0.0;
            for (int k = 0; k < 4; ++k)
                if (k != j) acc += xd[k] * q[j][k];
            out.M1[j].values[i] = f * acc;
        }
    });

    // M2 = P(|phi|^2 A)
    {
        VectorField cubic(g);
        for (int j = 0; j < 4; ++j) cubic[j] = projected[6 + static_cast<std::size_t>(j)];
        out.M2 = leray_project(cubic);
    }

    {
        VectorField M = out.M();
        double sq = 0.0;
        for (int j = 0; j < 4; ++j) {
            const double h = norm_hdot(M[j], 1.0);
            sq += h * h;
        }
        out.div_M_ratio = sq == 0.0 ? 0.0 : norm_l2(divergence(M)) / std::sqrt(sq);
    }

    // A0 via the screened solve, sharing the padded |phi|^2
    {
        detail::Screening scr = detail::make_screening_values(g, phi2);
        try {
            out.A0 = detail::compute_A0_with(scr, projected[10], norm_lp(s.phit, 2.0),
                                             opt.elliptic_tol, opt.elliptic_max_iter,
                                             opt.A0_warm);
        } catch (const SolverFailure& e) {
            throw SolverFailure(std::string("rhs N2/N4: A0 elliptic solve failed: ") + e.what(),
                                e.residual, e.iterations);
        }
    }

    // B0 = R^j (-Delta)^{-1/2} G_j, fused: (i / |xi|^2) sum_j xi_j Ghat_j
    out.B0 = ScalarField(g, Domain::frequency, true);
    detail::for_each_mode(g, [&](std::size_t i, const double* xd, double xd2, double) {
        if (xd2 == 0.0) return;
        cplx acc = 0.0;
        for (int j = 0; j < 4; ++j)
            acc += xd[j] * projected[11 + static_cast<std::size_t>(j)].values[i];
        out.B0.values[i] = cplx(0.0, 1.0 / xd2) * acc;
    });

    out.N[0] = cplx(0.0, -2.0) * projected[15];

    // N2..N4 need the padded A0 and B0
    {
        std::array<Padded, 2> pd;
        std::array<const ScalarField*, 2> src{&out.A0.solution, &out.B0};
        parallel_for_items(2, [&](std::size_t i) { pd[i] = pad_field(*src[i]); });
        const Padded& pA0 = pd[0];
        const Padded& pB0 = pd[1];

        std::vector<std::vector<cplx>> nb(3);
        for (auto& b : nb) b.resize(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            const double a0 = pA0.pos[i].real();
            nb[0][i] = cplx(0.0, 2.0) * a0 * pphit.pos[i];
            nb[1][i] = cplx(0.0, 1.0) * pB0.pos[i].real() * pphi.pos[i];
            nb[2][i] = -a0 * a0 * pphi.pos[i];
        }
        std::array<ScalarField, 3> outn;
        parallel_for_items(3, [&](std::size_t i) {
            outn[i] = project_to_band(g, std::move(nb[i]), false);
        });
        out.N[1] = std::move(outn[0]);
        out.N[2] = std::move(outn[1]);
        out.N[3] = std::move(outn[2]);
    }

    out.N[4] = std::move(projected[16]);
    out.N[5] = (p.mass * p.mass) * s.phi;
    if (out.N[5].domain != Domain::frequency) out.N[5] = to_frequency(out.N[5]);
    return out;
}

inline VectorField rhs_M(const State& s) {
    PhysParams p;
    return eval_rhs_terms(s, p).M();
}

inline ScalarField rhs_N(const State& s, const PhysParams& p, double tol = 1e-10) {
    RhsOptions opt;
    opt.elliptic_tol = tol;
    return eval_rhs_terms(s, p, opt).N_total();
}

// ---------------------------------------------------------------------------
// Exact free-wave propagator (massless; the m^2 phi term rides in N6).
// ---------------------------------------------------------------------------

/// u(t) with dtt u = Delta u, u(0) = f, dt u(0) = g:
/// uhat(t) = cos(t|xi|) fhat + sin(t|xi|)/|xi| ghat, the xi = 0 kernel being t.
inline std::pair<ScalarField, ScalarField> free_evolution_pair(const ScalarField& f,
                                                               const ScalarField& g, double t) {
    ScalarField fh = to_frequency(f), gh = to_frequency(g);
    require_same_layout(fh, gh, "free_evolution");
    ScalarField u(fh.grid, Domain::frequency, f.reality_flag && g.reality_flag);
    ScalarField ut = u;
    detail::for_each_mode(fh.grid, [&](std::size_t i, const double*, double, double xt2) {
        const double om = std::sqrt(xt2);
        const double c = std::cos(om * t);
        const double snc = om == 0.0 ? t : std::sin(om * t) / om;
        u.values[i] = c * fh.values[i] + snc * gh.values[i];
        ut.values[i] = -om * std::sin(om * t) * fh.values[i] + c * gh.values[i];
    });
    return {u, ut};
}

inline ScalarField free_evolution(const ScalarField& f, const ScalarField& g, double t) {
    return free_evolution_pair(f, g, t).first;
}

// ---------------------------------------------------------------------------
// RK4 step of the first-order system (A, At, phi, phit).
// ---------------------------------------------------------------------------

inline double cfl_limit(const GridSpec& g) { return 0.5 * g.dx(); }

namespace detail {

struct StateDeriv {
    VectorField dA, dAt;
    ScalarField dphi, dphit;
};

inline StateDeriv eval_deriv(const State& s, const PhysParams& p, const RhsOptions& opt,
                             ScalarField* a0_warm_io, double* div_ratio_max) {
    RhsOptions o = opt;
    if (a0_warm_io && a0_warm_io->size() > 0) o.A0_warm = a0_warm_io;
    RhsTerms rt = eval_rhs_terms(s, p, o);
    if (a0_warm_io) *a0_warm_io = rt.A0.solution;
    if (div_ratio_max) *div_ratio_max = std::max(*div_ratio_max, rt.div_M_ratio);
    StateDeriv d;
    d.dA = s.At;
    d.dphi = s.phit;
    VectorField M = rt.M();
    d.dAt = VectorField(s.grid());
    for (int j = 0; j < 4; ++j) d.dAt[j] = laplacian(s.A[j]) - M[j];
    d.dphit = laplacian(s.phi) - rt.N_total();
    return d;
}

inline State state_add(const State& s, double c, const StateDeriv& d, double dt_shift) {
    State out;
    out.t = s.t + dt_shift;
    out.A = VectorField(s.grid());
    out.At = VectorField(s.grid());
    for (int j = 0; j < 4; ++j) {
        out.A[j] = to_frequency(s.A[j]);
        axpy(out.A[j], c, to_frequency(d.dA[j]));
        out.At[j] = to_frequency(s.At[j]);
        axpy(out.At[j], c, to_frequency(d.dAt[j]));
    }
    out.phi = to_frequency(s.phi);
    axpy(out.phi, c, to_frequency(d.dphi));
    out.phit = to_frequency(s.phit);
    axpy(out.phit, c, to_frequency(d.dphit));
    return out;
}

}  // namespace detail

inline State step_rk4(const State& s, const PhysParams& p, double dt, const RhsOptions& opt = {},
                      ScalarField* a0_warm_io = nullptr, double* div_ratio_max = nullptr) {
    if (!(dt > 0.0)) throw ContractViolation("step_rk4: dt must be positive");
    if (dt > cfl_limit(s.grid()))
        throw ContractViolation("step_rk4: dt violates the CFL guard; use dt <= " +
                                std::to_string(cfl_limit(s.grid())));
    using detail::StateDeriv;
    ScalarField local_warm;
    ScalarField* warm = a0_warm_io ? a0_warm_io : &local_warm;

    const StateDeriv k1 = detail::eval_deriv(s, p, opt, warm, div_ratio_max);
    const State s2 = detail::state_add(s, 0.5 * dt, k1, 0.5 * dt);
    const StateDeriv k2 = detail::eval_deriv(s2, p, opt, warm, div_ratio_max);
    const State s3 = detail::state_add(s, 0.5 * dt, k2, 0.5 * dt);
    const StateDeriv k3 = detail::eval_deriv(s3, p, opt, warm, div_ratio_max);
    const State s4 = detail::state_add(s, dt, k3, dt);
    const StateDeriv k4 = detail::eval_deriv(s4, p, opt, warm, div_ratio_max);

    State out;
    out.t = s.t + dt;
    out.A = VectorField(s.grid());
    out.At = VectorField(s.grid());
    const double w = dt / 6.0;
    for (int j = 0; j < 4; ++j) {
        out.A[j] = to_frequency(s.A[j]);
        axpy(out.A[j], w, to_frequency(k1.dA[j]));
        axpy(out.A[j], 2 * w, to_frequency(k2.dA[j]));
        axpy(out.A[j], 2 * w, to_frequency(k3.dA[j]));
        axpy(out.A[j], w, to_frequency(k4.dA[j]));
        out.At[j] = to_frequency(s.At[j]);
        axpy(out.At[j], w, to_frequency(k1.dAt[j]));
        axpy(out.At[j], 2 * w, to_frequency(k2.dAt[j]));
        axpy(out.At[j], 2 * w, to_frequency(k3.dAt[j]));
        axpy(out.At[j], w, to_frequency(k4.dAt[j]));
    }
    out.phi = to_frequency(s.phi);
    axpy(out.phi, w, to_frequency(k1.dphi));
    axpy(out.phi, 2 * w, to_frequency(k2.dphi));
    axpy(out.phi, 2 * w, to_frequency(k3.dphi));
    axpy(out.phi, w, to_frequency(k4.dphi));
    out.phit = to_frequency(s.phit);
    axpy(out.phit, w, to_frequency(k1.dphit));
    axpy(out.phit, 2 * w, to_frequency(k2.dphit));
    axpy(out.phit, 2 * w, to_frequency(k3.dphit));
    axpy(out.phit, w, to_frequency(k4.dphit));
    return out;
}

// ---------------------------------------------------------------------------
// Duhamel operator for the inhomogeneous wave equation with vanishing data:
//   uhat(t) = -int_0^t sin((t-s)|xi|)/|xi| Fhat(s) ds   (zero-mode kernel t-s).
// Composite Simpson on the stored samples; odd interval counts use a 3/8 tail
// and the first interval a three-point quadratic rule.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> duhamel_weights(int m, double dt, int available) {
    std::vector<double> w;
    if (m <= 0) return w;
    if (m == 1) {
        if (available >= 3) {
            w = {5.0 * dt / 12.0, 8.0 * dt / 12.0, -dt / 12.0};
        } else {
            w = {0.5 * dt, 0.5 * dt};
        }
        return w;
    }
    if (m % 2 == 0) {
        w.assign(static_cast<std::size_t>(m) + 1, 0.0);
        for (int i = 0; i <= m; ++i)
            w[static_cast<std::size_t>(i)] =
                dt / 3.0 * (i == 0 || i == m ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
        return w;
    }
    // odd m >= 3: Simpson up to m-3, then the 3/8 rule
    w.assign(static_cast<std::size_t>(m) + 1, 0.0);
    const int mid = m - 3;
    if (mid > 0)
        for (int i = 0; i <= mid; ++i)
            w[static_cast<std::size_t>(i)] +=
                dt / 3.0 * (i == 0 || i == mid ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
    const double c = 3.0 * dt / 8.0;
    w[static_cast<std::size_t>(mid)] += c;
    w[static_cast<std::size_t>(mid + 1)] += 3.0 * c;
    w[static_cast<std::size_t>(mid + 2)] += 3.0 * c;
    w[static_cast<std::size_t>(mid + 3)] += c;
    return w;
}

// kernel flavor: 0 -> -sin((t-s)w)/w (solution), 1 -> -cos((t-s)w) (time derivative)
inline ScalarField duhamel_apply(const std::vector<ScalarField>& F, double dt, double t,
                                 int flavor) {
    if (F.empty()) throw ContractViolation("duhamel: empty sample set");
    const GridSpec& g = F[0].grid;
    const long m = std::lround(t / dt);
    if (m < 0 || static_cast<std::size_t>(m) >= F.size() ||
        std::abs(t - static_cast<double>(m) * dt) > 1e-9 * std::max(1.0, std::abs(t)))
        throw ContractViolation("duhamel: t is not a stored sample time");
    ScalarField out(g, Domain::frequency, F[0].reality_flag);
    const std::vector<double> w =
        duhamel_weights(static_cast<int>(m), dt, static_cast<int>(F.size()));
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) continue;
        const ScalarField& Fi = F[i];
        if (Fi.domain != Domain::frequency)
            throw ContractViolation("duhamel: samples must be frequency-domain");
        const double tau = t - static_cast<double>(i) * dt;
        const double wi = w[i];
        for_each_mode(g, [&](std::size_t idx, const double*, double, double xt2) {
            const double om = std::sqrt(xt2);
            double ker;
            if (flavor == 0)
                ker = om == 0.0 ? -tau : -std::sin(tau * om) / om;
            else
                ker = -std::cos(tau * om);
            out.values[idx] += wi * ker * Fi.values[idx];
        });
    }
    return out;
}

}  // namespace detail

inline ScalarField duhamel_wt(const std::vector<ScalarField>& F, double dt, double t) {
    std::vector<ScalarField> fh;
    const std::vector<ScalarField>* src = &F;
    bool all_freq = true;
    for (const auto& f : F) all_freq = all_freq && f.domain == Domain::frequency;
    if (!all_freq) {
        fh.reserve(F.size());
        for (const auto& f : F) fh.push_back(to_frequency(f));
        src = &fh;
    }
    return detail::duhamel_apply(*src, dt, t, 0);
}

inline ScalarField duhamel_wt_deriv(const std::vector<ScalarField>& F, double dt, double t) {
    std::vector<ScalarField> fh;
    const std::vector<ScalarField>* src = &F;
    bool all_freq = true;
    for (const auto& f : F) all_freq = all_freq && f.domain == Domain::frequency;
    if (!all_freq) {
        fh.reserve(F.size());
        for (const auto& f : F) fh.push_back(to_frequency(f));
        src = &fh;
    }
    return detail::duhamel_apply(*src, dt, t, 1);
}

// ---------------------------------------------------------------------------
// Picard iteration  u^{m+1} = u^0 + W_T (nonlinearity of u^m).
// ---------------------------------------------------------------------------

struct PicardReport {
    int iterate_count = 0;
    std::vector<double> omega;              // successive-difference norms
    std::vector<double> contraction_ratios;  // omega[m+1] / omega[m]
    bool converged = false;
    double fixed_point_residual = 0.0;      // sup-over-t L2 residual of the integral equation
};

namespace detail {

inline void require_divergence_free(const VectorField& X, const char* what) {
    const double scale = std::max(1.0, norm_sobolev(X, 1.0));
    if (norm_l2(divergence(X)) > 1e-8 * scale)
        throw ContractViolation(std::string(what) + ": data is not divergence-free");
}

inline int step_count(double T, double dt, const char* what) {
    const long n = std::lround(T / dt);
    if (n < 0 || std::abs(T - static_cast<double>(n) * dt) > 1e-9 * std::max(1.0, T))
        throw ContractViolation(std::string(what) + ": T must be an integer multiple of dt");
    return static_cast<int>(n);
}

}  // namespace detail

inline std::pair<Trajectory, PicardReport> picard_solve(const InitialData& data,
                                                        const PhysParams& p, double T, double dt,
                                                        int max_m = 25, double tol = 1e-10,
                                                        double s_norm = 1.25) {
    p.validate();
    if (!(T >= 0.0) || !(dt > 0.0) || !(tol > 0.0))
        throw ContractViolation("picard_solve: T, dt, tol must be positive");
    detail::require_divergence_free(data.a, "picard_solve(a)");
    detail::require_divergence_free(data.b, "picard_solve(b)");
    const int nt = detail::step_count(T, dt, "picard_solve");
    const GridSpec& g = data.phi0.grid;

    // zeroth iterate: free waves through every sample time
    std::vector<State> base(static_cast<std::size_t>(nt) + 1);
    for (int i = 0; i <= nt; ++i) {
        State& st = base[static_cast<std::size_t>(i)];
        const double t = i * dt;
        st.t = t;
        st.A = VectorField(g);
        st.At = VectorField(g);
        for (int j = 0; j < 4; ++j) {
            auto [u, ut] = free_evolution_pair(data.a[j], data.b[j], t);
            st.A[j] = std::move(u);
            st.At[j] = std::move(ut);
        }
        auto [f, ft] = free_evolution_pair(data.phi0, data.phi1, t);
        st.phi = std::move(f);
        st.phit = std::move(ft);
    }

    std::vector<State> cur = base;
    PicardReport rep;

    auto eval_all = [&](const std::vector<State>& traj, std::vector<VectorField>& Ms,
                        std::vector<ScalarField>& Ns) {
        Ms.clear();
        Ns.clear();
        Ms.reserve(traj.size());
        Ns.reserve(traj.size());
        ScalarField warm;
        for (const State& st : traj) {
            RhsOptions opt;
            if (warm.size() > 0) opt.A0_warm = &warm;
            RhsTerms rt = eval_rhs_terms(st, p, opt);
            warm = rt.A0.solution;
            Ms.push_back(rt.M());
            Ns.push_back(rt.N_total());
        }
    };

    std::vector<VectorField> Ms;
    std::vector<ScalarField> Ns;
    int grew = 0;
    for (int m = 1; m <= max_m; ++m) {
        eval_all(cur, Ms, Ns);
        std::array<std::vector<ScalarField>, 4> Fj;
        for (int j = 0; j < 4; ++j) {
            Fj[static_cast<std::size_t>(j)].clear();
            for (const auto& M : Ms) Fj[static_cast<std::size_t>(j)].push_back(M[j]);
        }
        std::vector<State> next(cur.size());
        double omega = 0.0;
        for (int i = 0; i <= nt; ++i) {
            const double t = i * dt;
            State& st = next[static_cast<std::size_t>(i)];
            const State& b0 = base[static_cast<std::size_t>(i)];
            st.t = t;
            st.A = VectorField(g);
            st.At = VectorField(g);
            for (int j = 0; j < 4; ++j) {
                st.A[j] = b0.A[j] + duhamel_wt(Fj[static_cast<std::size_t>(j)], dt, t);
                st.At[j] = b0.At[j] + duhamel_wt_deriv(Fj[static_cast<std::size_t>(j)], dt, t);
            }
            st.phi = b0.phi + duhamel_wt(Ns, dt, t);
            st.phit = b0.phit + duhamel_wt_deriv(Ns, dt, t);

            const State& c = cur[static_cast<std::size_t>(i)];
            double slice = norm_sobolev(st.phi - c.phi, s_norm) +
                           norm_sobolev(st.phit - c.phit, s_norm - 1.0);
            for (int j = 0; j < 4; ++j)
                slice += norm_sobolev(st.A[j] - c.A[j], s_norm) +
                         norm_sobolev(st.At[j] - c.At[j], s_norm - 1.0);
            omega = std::max(omega, slice);
        }
        if (!rep.omega.empty() && omega > rep.omega.back()) {
            if (++grew >= 3)
                throw SolverFailure(
                    "picard_solve: successive differences grew three times in a row; the "
                    "window admits no contraction, choose a smaller T",
                    omega, m);
        } else {
            grew = 0;
        }
        if (!rep.omega.empty()) rep.contraction_ratios.push_back(omega / rep.omega.back());
        rep.omega.push_back(omega);
        cur = std::move(next);
        if (omega <= tol) {
            rep.converged = true;
            rep.iterate_count = omega == 0.0 && m == 1 ? 0 : m;
            break;
        }
        rep.iterate_count = m;
    }

    if (rep.converged) {
        // residual of the fixed-point equation at the converged trajectory
        eval_all(cur, Ms, Ns);
        std::array<std::vector<ScalarField>, 4> Fj;
        for (int j = 0; j < 4; ++j)
            for (const auto& M : Ms) Fj[static_cast<std::size_t>(j)].push_back(M[j]);
        double res = 0.0;
        for (int i = 0; i <= nt; ++i) {
            const double t = i * dt;
            const State& c = cur[static_cast<std::size_t>(i)];
            const State& b0 = base[static_cast<std::size_t>(i)];
            for (int j = 0; j < 4; ++j)
                res = std::max(res, norm_l2(c.A[j] - b0.A[j] -
                                            duhamel_wt(Fj[static_cast<std::size_t>(j)], dt, t)));
            res = std::max(res, norm_l2(c.phi - b0.phi - duhamel_wt(Ns, dt, t)));
        }
        rep.fixed_point_residual = res;
    }

    Trajectory traj;
    traj.states = std::move(cur);
    traj.params = p;
    traj.dt = dt;
    traj.validate();
    return {traj, rep};
}

// ---------------------------------------------------------------------------
// Front door: method-of-lines or Picard, with constraint enforcement.
// ---------------------------------------------------------------------------

struct EvolveOptions {
    int store_stride = 1;                      // keep every k-th state
    bool store = true;                         // false: observer-only streaming
    double constraint_tol = 1e-8;
    double elliptic_tol = 1e-10;
    int picard_max_m = 25;
    double picard_tol = 1e-10;
    double s_norm = 1.25;
    std::function<void(const State&)> observer;
    double* div_M_ratio_max = nullptr;         // worst ||div M||/||M|| seen in rhs evals
};

inline State make_state(const InitialData& data) {
    State s;
    s.t = 0.0;
    s.A = data.a;
    s.At = data.b;
    s.phi = to_frequency(data.phi0);
    s.phit = to_frequency(data.phi1);
    for (int j = 0; j < 4; ++j) {
        s.A[j] = to_frequency(s.A[j]);
        s.At[j] = to_frequency(s.At[j]);
    }
    return s;
}

inline Trajectory evolve(const InitialData& data, const PhysParams& p, double T, double dt,
                         const std::string& method, EvolveOptions opt = {}) {
    p.validate();
    if (method != "rk4" && method != "picard")
        throw ContractViolation("evolve: method must be rk4 or picard");
    if (!(T >= 0.0) || !(dt > 0.0)) throw ContractViolation("evolve: need T >= 0 and dt > 0");

    if (method == "picard") {
        auto [traj, rep] = picard_solve(data, p, T, dt, opt.picard_max_m, opt.picard_tol,
                                        opt.s_norm);
        if (!rep.converged)
            throw SolverFailure("evolve: picard iteration did not converge",
                                rep.omega.empty() ? 0.0 : rep.omega.back(), rep.iterate_count);
        for (const State& s : traj.states) {
            if (constraint_residual_l2(s) > opt.constraint_tol)
                throw SolverFailure("evolve: Coulomb constraint violated",
                                    constraint_residual_l2(s), 0);
            if (opt.observer) opt.observer(s);
        }
        return traj;
    }

    const int steps = detail::step_count(T, dt, "evolve");
    if (opt.store_stride < 1) throw ContractViolation("evolve: store_stride must be >= 1");
    if (opt.store && steps % opt.store_stride != 0)
        throw ContractViolation("evolve: step count must be a multiple of store_stride");
    State s = make_state(data);
    const bool enforce = norm_l2(divergence(s.A)) <= opt.constraint_tol &&
                         norm_l2(divergence(s.At)) <= opt.constraint_tol;

    Trajectory traj;
    traj.params = p;
    traj.dt = dt * opt.store_stride;

    auto emit = [&](const State& st) {
        if (enforce && constraint_residual_l2(st) > opt.constraint_tol)
            throw SolverFailure("evolve: Coulomb constraint drifted past tolerance",
                                constraint_residual_l2(st), 0);
        if (opt.observer) opt.observer(st);
        if (opt.store) traj.states.push_back(st);
    };

    emit(s);
    ScalarField warm;
    RhsOptions ropt;
    ropt.elliptic_tol = opt.elliptic_tol;
    for (int i = 0; i < steps; ++i) {
        s = step_rk4(s, p, dt, ropt, &warm, opt.div_M_ratio_max);
        s.t = (i + 1) * dt;  // avoid accumulated rounding in stored times
        if ((i + 1) % opt.store_stride == 0) emit(s);
    }
    if (opt.store) traj.validate();
    return traj;
}

}  // namespace mkg4d

#endif
