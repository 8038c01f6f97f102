#ifndef MKG4D_ELLIPTIC_HPP
#define MKG4D_ELLIPTIC_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "mkg4d/analysis.hpp"
#include "mkg4d/spectral.hpp"

namespace mkg4d {

struct EllipticSolveReport {
    ScalarField solution;          // real, frequency domain
    double residual_l2 = 0.0;      // || Delta u - |phi|^2 u - f ||_L2
    int iterations = 0;
    double bound_ratio = -1.0;     // ||u||_Hdot1 / (2 ||phit||_L2), A0 solves only
    bool bound_ok = true;
    double mean_subtracted = 0.0;  // mean removed from f when phi == 0
};

namespace detail {

// screening samples |phi|^2 on the padded grid, plus their average
struct Screening {
    GridSpec coarse, fine;
    std::vector<double> pad_values;
    double mean = 0.0;
    bool zero = true;
};

inline Screening make_screening_values(const GridSpec& coarse, std::vector<double> pad_values) {
    Screening s{coarse, padded_grid(coarse), std::move(pad_values), 0.0, true};
    s.mean = pairwise_sum(std::span<const double>(s.pad_values)) /
             static_cast<double>(s.pad_values.size());
    for (double v : s.pad_values)
        if (v != 0.0) {
            s.zero = false;
            break;
        }
    return s;
}

inline Screening make_screening(const ScalarField& phi) {
    Padded p = pad_field(phi);
    std::vector<double> vals(p.pos.size());
    for (std::size_t i = 0; i < p.pos.size(); ++i) vals[i] = std::norm(p.pos[i]);
    return make_screening_values(phi.grid, std::move(vals));
}

// multiplication by |phi|^2 restricted to the symmetric band (self-adjoint)
inline ScalarField apply_screening(const Screening& s, const ScalarField& u) {
    ScalarField ub = band_project(u);
    Padded p = pad_field(ub);
    for (std::size_t i = 0; i < p.pos.size(); ++i) p.pos[i] *= s.pad_values[i];
    return project_to_band(s.coarse, std::move(p.pos), u.reality_flag);
}

// K u = -Delta u + |phi|^2 u  (symmetric positive definite when phi != 0)
inline ScalarField apply_operator(const Screening& s, const ScalarField& u) {
    ScalarField out = s.zero ? ScalarField(u.grid, Domain::frequency, u.reality_flag)
                             : apply_screening(s, u);
    detail::for_each_mode(u.grid, [&](std::size_t i, const double*, double, double xt2) {
        out.values[i] += xt2 * u.values[i];
    });
    return out;
}

inline double l2_inner(const ScalarField& a, const ScalarField& b, std::vector<double>& scratch) {
    scratch.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        scratch[i] = a.values[i].real() * b.values[i].real() +
                     a.values[i].imag() * b.values[i].imag();
    return a.grid.box_volume() * pairwise_sum(std::span<const double>(scratch));
}

// CG on K u = b with Fourier preconditioner (-Delta + mean|phi|^2)^{-1}
inline EllipticSolveReport screened_cg(const Screening& s, const ScalarField& b, double tol,
                                       int max_iter, const ScalarField* initial) {
    std::vector<double> scratch;
    const double bnorm = std::sqrt(l2_inner(b, b, scratch));
    auto precondition = [&](const ScalarField& r) {
        ScalarField z = r;
        detail::for_each_mode(r.grid, [&](std::size_t i, const double*, double, double xt2) {
            z.values[i] /= (xt2 + s.mean);
        });
        return z;
    };

    EllipticSolveReport rep;
    rep.solution = initial ? to_frequency(*initial)
                           : ScalarField(b.grid, Domain::frequency, b.reality_flag);
    if (bnorm == 0.0 && !initial) return rep;

    ScalarField r = b - apply_operator(s, rep.solution);
    ScalarField z = precondition(r);
    ScalarField p = z;
    double rz = l2_inner(r, z, scratch);
    const double target = tol * (bnorm == 0.0 ? 1.0 : bnorm);

    for (int it = 0; it < max_iter; ++it) {
        double rnorm = std::sqrt(l2_inner(r, r, scratch));
        if (rnorm <= target) {
            // confirm against the directly applied operator
            ScalarField rt = b - apply_operator(s, rep.solution);
            rnorm = std::sqrt(l2_inner(rt, rt, scratch));
            if (rnorm <= target) {
                rep.residual_l2 = rnorm;
                rep.iterations = it;
                return rep;
            }
            r = rt;
            z = precondition(r);
            p = z;
            rz = l2_inner(r, z, scratch);
        }
        ScalarField kp = apply_operator(s, p);
        const double alpha = rz / l2_inner(p, kp, scratch);
        axpy(rep.solution, alpha, p);
        axpy(r, -alpha, kp);
        z = precondition(r);
        const double rz_new = l2_inner(r, z, scratch);
        ScalarField pn = z;
        axpy(pn, rz_new / rz, p);
        p = pn;
        rz = rz_new;
    }
    const double last = std::sqrt(l2_inner(r, r, scratch));
    throw SolverFailure("screened Poisson CG did not converge (residual " +
                            std::to_string(last) + " after " + std::to_string(max_iter) +
                            " iterations)",
                        last, max_iter);
}

}  // namespace detail

namespace detail {

inline EllipticSolveReport solve_screened_with(const Screening& s, const ScalarField& f,
                                               double tol, int max_iter,
                                               const ScalarField* initial);

}  // namespace detail

/// Solve  Delta u - |phi|^2 u = f  for real u.
///
/// With phi == 0 the torus problem needs a mean-zero right-hand side; the
/// mean of f is subtracted, reported in the result, and the solve is the
/// exact diagonal inverse. Otherwise conjugate gradients run on the
/// positive operator (-Delta + |phi|^2).
inline EllipticSolveReport solve_screened_poisson(const ScalarField& phi, const ScalarField& f,
                                                  double tol = 1e-10, int max_iter = 500,
                                                  const ScalarField* initial = nullptr) {
    detail::Screening s = detail::make_screening(phi);
    return detail::solve_screened_with(s, f, tol, max_iter, initial);
}

inline EllipticSolveReport detail::solve_screened_with(const detail::Screening& s,
                                                       const ScalarField& f, double tol,
                                                       int max_iter,
                                                       const ScalarField* initial) {
    if (!(tol > 0.0)) throw ContractViolation("solve_screened_poisson: tol must be positive");
    ScalarField fh = to_frequency(f);

    if (s.zero) {
        EllipticSolveReport rep;
        rep.solution = ScalarField(fh.grid, Domain::frequency, fh.reality_flag);
        rep.mean_subtracted = fh.values[0].real();
        fh.values[0] = 0.0;
        detail::for_each_mode(fh.grid, [&](std::size_t i, const double*, double, double xt2) {
            rep.solution.values[i] = xt2 == 0.0 ? cplx(0.0) : -fh.values[i] / xt2;
        });
        rep.residual_l2 = 0.0;
        return rep;
    }

    ScalarField b = -1.0 * fh;  // K u = -f
    EllipticSolveReport rep = detail::screened_cg(s, b, tol, max_iter, initial);
    rep.solution.reality_flag = fh.reality_flag;
    return rep;
}

namespace detail {

// A0 solve reusing precomputed screening and right-hand side
inline EllipticSolveReport compute_A0_with(const Screening& s, const ScalarField& f,
                                           double phit_l2, double tol, int max_iter,
                                           const ScalarField* initial) {
    EllipticSolveReport rep = solve_screened_with(s, f, tol, max_iter, initial);
    const double denom = 2.0 * phit_l2;
    rep.bound_ratio = denom == 0.0 ? 0.0 : norm_hdot(rep.solution, 1.0) / denom;
    rep.bound_ok = rep.bound_ratio <= 1.0 + 1e-8;
    return rep;
}

}  // namespace detail

/// Nondynamical potential:  Delta A0 - |phi|^2 A0 = -Im(phi conj(phit)).
/// The report carries ||A0||_Hdot1 / (2 ||phit||_L2), which must not exceed 1.
inline EllipticSolveReport compute_A0(const ScalarField& phi, const ScalarField& phit,
                                      double tol = 1e-10, int max_iter = 500,
                                      const ScalarField* initial = nullptr) {
    ScalarField f = dealiased_eval(
        {&phi, &phit}, [](const cplx* v) { return cplx(-std::imag(v[0] * std::conj(v[1])), 0.0); },
        true);
    detail::Screening s = detail::make_screening(phi);
    return detail::compute_A0_with(s, f, norm_lp(phit, 2.0), tol, max_iter, initial);
}

/// Explicit formula  B0 = R^j (-Delta)^{-1/2} [ Im(phi d_j conj(phi)) - |phi|^2 A_j ].
inline ScalarField compute_B0(const VectorField& A, const ScalarField& phi) {
    A.require_consistent();
    if (A.grid() != phi.grid) throw ContractViolation("compute_B0: grid mismatch");
    ScalarField B0(phi.grid, Domain::frequency, true);
    for (int j = 1; j <= 4; ++j) {
        const ScalarField dphi = derivative(phi, j);
        const ScalarField& Aj = A[j - 1];
        ScalarField G = dealiased_eval(
            {&phi, &dphi, &Aj},
            [](const cplx* v) {
                return cplx(std::imag(v[0] * std::conj(v[1])) - std::norm(v[0]) * v[2].real(),
                            0.0);
            },
            true);
        B0 = B0 + riesz(fractional_laplacian(G, -1.0), j);
    }
    return B0;
}

}  // namespace mkg4d

#endif
