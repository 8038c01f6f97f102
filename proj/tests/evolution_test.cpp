#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "mkg4d/evolution.hpp"
#include "test_helpers.hpp"

using namespace mkg4d;
using mkg4d::testing::random_field;
using mkg4d::testing::random_vector_field;
using mkg4d::testing::rel_diff;

namespace {
constexpr double pi = std::numbers::pi;
const GridSpec g8(8, 2 * pi);

State make_zero_state(const GridSpec& g) {
    State s;
    s.A = VectorField(g);
    s.At = VectorField(g);
    s.phi = ScalarField(g, Domain::frequency, false);
    s.phit = ScalarField(g, Domain::frequency, false);
    return s;
}

InitialData small_data(const GridSpec& g, std::uint64_t seed, double amp, int band) {
    InitialData d;
    d.a = leray_project(random_vector_field(g, seed, band));
    d.b = leray_project(random_vector_field(g, seed + 1, band));
    for (int j = 0; j < 4; ++j) {
        d.a[j] = amp * d.a[j];
        d.b[j] = amp * d.b[j];
    }
    d.phi0 = amp * random_field(g, seed + 2, band, false);
    d.phi1 = amp * random_field(g, seed + 3, band, false);
    return d;
}

double state_l2_distance(const State& x, const State& y) {
    double acc = norm_l2(x.phi - y.phi) + norm_l2(x.phit - y.phit);
    for (int j = 0; j < 4; ++j) acc += norm_l2(x.A[j] - y.A[j]) + norm_l2(x.At[j] - y.At[j]);
    return acc;
}
}  // namespace

TEST_CASE("M vanishes when phi vanishes or is purely real") {
    State s = make_zero_state(g8);
    s.A = random_vector_field(g8, 70, 2);
    VectorField M = rhs_M(s);
    for (int j = 0; j < 4; ++j) CHECK(max_abs(M[j]) < 1e-14);

    State sr = make_zero_state(g8);
    sr.phi = random_field(g8, 71, 2, true);  // real-valued phi, A = 0
    VectorField Mr = rhs_M(sr);
    for (int j = 0; j < 4; ++j) CHECK(max_abs(Mr[j]) < 1e-14);
}

TEST_CASE("M is divergence-free on random states") {
    State s = make_zero_state(g8);
    s.A = leray_project(random_vector_field(g8, 72, 2));
    s.At = leray_project(random_vector_field(g8, 73, 2));
    s.phi = random_field(g8, 74, 2, false);
    s.phit = random_field(g8, 75, 2, false);
    RhsTerms rt = eval_rhs_terms(s, PhysParams{});
    CHECK(rt.div_M_ratio < 1e-10);
    VectorField M = rt.M();
    CHECK(norm_l2(divergence(M)) < 1e-10 * norm_hdot(M[0], 1.0));
}

TEST_CASE("N vanishes when phi vanishes") {
    State s = make_zero_state(g8);
    s.A = random_vector_field(g8, 76, 2);
    s.At = random_vector_field(g8, 77, 2);
    ScalarField N = rhs_N(s, PhysParams{});
    CHECK(max_abs(N) < 1e-14);
}

TEST_CASE("mass term is exactly m^2 phi") {
    State s = make_zero_state(g8);
    s.phi = 0.3 * plane_wave(g8, {0, 2, 0, 0});
    PhysParams p{1.7};
    RhsTerms rt = eval_rhs_terms(s, p);
    CHECK(rel_diff(rt.N[5], (1.7 * 1.7) * s.phi) < 1e-14);
}

TEST_CASE("plane-wave state: every N term matches its closed form") {
    // phi = eps e^{i x.xi}, phit = -i |xi| phi, A = At = 0, |xi| = 1
    const double eps = 0.5;
    State s = make_zero_state(g8);
    s.phi = eps * plane_wave(g8, {1, 0, 0, 0});
    s.phit = cplx(0.0, -1.0) * s.phi;
    RhsTerms rt = eval_rhs_terms(s, PhysParams{});

    CHECK(max_abs(rt.N[0]) < 1e-13);  // N1: A = 0
    CHECK(max_abs(rt.N[4]) < 1e-13);  // N5: A = 0
    CHECK(max_abs(rt.N[5]) < 1e-13);  // N6: m = 0

    // A0 is the constant |xi| = 1; B0 vanishes
    ScalarField a0_expect(g8, Domain::frequency, true);
    a0_expect.set_mode({0, 0, 0, 0}, 1.0);
    CHECK(rel_diff(rt.A0.solution, a0_expect) < 1e-9);
    CHECK(max_abs(rt.B0) < 1e-12);
    CHECK(max_abs(rt.N[2]) < 1e-12);  // N3 = i B0 phi

    // N2 = 2i A0 phit = 2 phi, N4 = -A0^2 phi = -phi
    CHECK(rel_diff(rt.N[1], 2.0 * s.phi) < 1e-9);
    CHECK(rel_diff(rt.N[3], -1.0 * s.phi) < 1e-9);
}

TEST_CASE("free evolution reproduces the exact dispersion") {
    ScalarField f = plane_wave(g8, {1, 0, 0, 0});
    ScalarField z(g8, Domain::frequency, false);
    ScalarField u = free_evolution(f, z, pi);
    CHECK(rel_diff(u, -1.0 * f) < 1e-13);  // cos(pi) = -1

    // zero-mode limit: f = 0, g = 1 -> u = t
    ScalarField one(g8, Domain::frequency, true);
    one.set_mode({0, 0, 0, 0}, 1.0);
    ScalarField u2 = free_evolution(z, one, 2.0);
    CHECK(std::abs(u2.mode({0, 0, 0, 0}) - cplx(2.0)) < 1e-14);
}

TEST_CASE("free evolution conserves the wave energy") {
    ScalarField f = random_field(g8, 80, 3, false);
    ScalarField g = random_field(g8, 81, 3, false);
    auto energy = [](const ScalarField& u, const ScalarField& ut) {
        double e = 0.5 * norm_l2(ut) * norm_l2(ut);
        const double h = norm_hdot(u, 1.0);
        return e + 0.5 * h * h;
    };
    auto [u0, ut0] = free_evolution_pair(f, g, 0.0);
    const double e0 = energy(u0, ut0);
    for (double t : {0.37, 1.1, 2.9}) {
        auto [u, ut] = free_evolution_pair(f, g, t);
        CHECK(energy(u, ut) == doctest::Approx(e0).epsilon(1e-12));
    }
}

TEST_CASE("rk4 with phi = 0 matches the exact propagator at fourth order") {
    InitialData d;
    d.a = leray_project(random_vector_field(g8, 82, 2));
    d.b = leray_project(random_vector_field(g8, 83, 2));
    d.phi0 = ScalarField(g8, Domain::frequency, false);
    d.phi1 = ScalarField(g8, Domain::frequency, false);
    const double T = 0.2;

    auto terminal_error = [&](double dt) {
        Trajectory tr = evolve(d, PhysParams{}, T, dt, "rk4",
                               {.store_stride = static_cast<int>(std::lround(T / dt))});
        const State& last = tr.states.back();
        double err = 0.0;
        for (int j = 0; j < 4; ++j) {
            auto [u, ut] = free_evolution_pair(d.a[j], d.b[j], T);
            err += norm_l2(last.A[j] - u) + norm_l2(last.At[j] - ut);
        }
        return err;
    };
    const double e1 = terminal_error(0.02);
    const double e2 = terminal_error(0.01);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 3.7);
}

TEST_CASE("linearized dispersion of the massive scalar is accurate to 1e-6") {
    // free Klein-Gordon at tiny amplitude: omega = sqrt(|xi|^2 + m^2)
    const double m = 1.0, T = 1.0, dt = 0.01;
    const double omega = std::sqrt(1.0 + m * m);
    InitialData d;
    d.a = VectorField(g8);
    d.b = VectorField(g8);
    d.phi0 = 1e-8 * plane_wave(g8, {1, 0, 0, 0});
    d.phi1 = cplx(0.0, -omega) * d.phi0;
    Trajectory tr = evolve(d, PhysParams{m}, T, dt, "rk4", {.store_stride = 100});
    const cplx c0 = tr.states.front().phi.mode({1, 0, 0, 0});
    const cplx c1 = tr.states.back().phi.mode({1, 0, 0, 0});
    const double measured = -std::arg(c1 / c0) / T;
    CHECK(std::abs(measured - omega) < 1e-6);
}

TEST_CASE("rk4 self-convergence on a coupled run is fourth order") {
    InitialData d = small_data(g8, 90, 0.05, 1);
    const double T = 0.1;
    Trajectory t1 = evolve(d, PhysParams{}, T, 4e-3, "rk4", {.store_stride = 25});
    Trajectory t2 = evolve(d, PhysParams{}, T, 2e-3, "rk4", {.store_stride = 50});
    Trajectory t3 = evolve(d, PhysParams{}, T, 1e-3, "rk4", {.store_stride = 100});
    const double e1 = state_l2_distance(t1.states.back(), t3.states.back());
    const double e2 = state_l2_distance(t2.states.back(), t3.states.back());
    // with errors ~C dt^4 against a 4x-finer reference, the ratio is 16 within
    // a 30% allowance plus the reference bias
    const double ratio = e1 / e2;
    CHECK(ratio > 16.0 * 0.7 * (1.0 - 1.0 / 16.0));
    CHECK(ratio < 16.0 * 1.3 * (1.0 + 1.0 / 16.0));
}

TEST_CASE("cfl guard refuses oversized steps with a suggestion") {
    State s = make_zero_state(g8);
    CHECK_THROWS_WITH_AS(static_cast<void>(step_rk4(s, PhysParams{}, 1.0)),
                         doctest::Contains("CFL"), ContractViolation);
}

TEST_CASE("duhamel operator on closed-form sources") {
    const double dt = 0.05;
    const int nt = 40;
    const GridSpec g(4, 2 * pi);

    // constant source c: zero mode solves dtt u = -c with zero data
    std::vector<ScalarField> F;
    for (int i = 0; i <= nt; ++i) {
        ScalarField c(g, Domain::frequency, true);
        c.set_mode({0, 0, 0, 0}, 0.7);
        F.push_back(c);
    }
    for (int i : {2, 7, 40}) {
        const double t = i * dt;
        ScalarField u = duhamel_wt(F, dt, t);
        CHECK(std::abs(u.mode({0, 0, 0, 0}) - cplx(-0.7 * t * t / 2)) < 1e-9);
    }

    // single unit-frequency mode with F = 1(t): u(t) = -(1 - cos t)
    std::vector<ScalarField> F2;
    for (int i = 0; i <= nt; ++i) F2.push_back(plane_wave(g, {1, 0, 0, 0}));
    for (int i : {6, 23, 40}) {
        const double t = i * dt;
        ScalarField u = duhamel_wt(F2, dt, t);
        CHECK(std::abs(u.mode({1, 0, 0, 0}) - cplx(-(1.0 - std::cos(t)))) < 1e-7);
        ScalarField ut = duhamel_wt_deriv(F2, dt, t);
        CHECK(std::abs(ut.mode({1, 0, 0, 0}) - cplx(-std::sin(t))) < 1e-7);
    }

    // zero source
    std::vector<ScalarField> F3(static_cast<std::size_t>(nt) + 1,
                                ScalarField(g, Domain::frequency, true));
    CHECK(max_abs(duhamel_wt(F3, dt, 0.5)) == 0.0);

    CHECK_THROWS_AS(static_cast<void>(duhamel_wt(F3, dt, 7.3)), ContractViolation);
}

TEST_CASE("picard on zero data converges immediately") {
    InitialData d;
    d.a = VectorField(g8);
    d.b = VectorField(g8);
    d.phi0 = ScalarField(g8, Domain::frequency, false);
    d.phi1 = ScalarField(g8, Domain::frequency, false);
    auto [traj, rep] = picard_solve(d, PhysParams{}, 0.2, 0.02);
    CHECK(rep.converged);
    CHECK(rep.iterate_count == 0);
    for (const State& s : traj.states) CHECK(max_abs(s.phi) == 0.0);
}

TEST_CASE("picard contracts at rate 1/2 for small data") {
    InitialData d = small_data(g8, 91, 1e-3, 1);
    auto [traj, rep] = picard_solve(d, PhysParams{}, 0.25, 0.025, 25, 1e-12);
    CHECK(rep.converged);
    for (double r : rep.contraction_ratios) CHECK(r <= 0.5);
    CHECK(rep.fixed_point_residual <= 10.0 * 1e-12);
}

TEST_CASE("picard and rk4 agree at second order or better") {
    InitialData d = small_data(g8, 92, 0.02, 1);
    const double T = 0.2;
    auto diff_at = [&](double dt) {
        auto [pic, rep] = picard_solve(d, PhysParams{}, T, dt, 40, 1e-13);
        REQUIRE(rep.converged);
        Trajectory rk = evolve(d, PhysParams{}, T, dt, "rk4",
                               {.store_stride = static_cast<int>(std::lround(T / dt))});
        return state_l2_distance(pic.states.back(), rk.states.back());
    };
    const double e1 = diff_at(0.02);
    const double e2 = diff_at(0.01);
    CHECK(e2 < e1);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 2.0);
}

TEST_CASE("evolve with T = 0 returns the single initial state") {
    InitialData d = small_data(g8, 93, 0.1, 1);
    Trajectory tr = evolve(d, PhysParams{}, 0.0, 0.01, "rk4");
    CHECK(tr.states.size() == 1);
    CHECK(tr.states.front().t == 0.0);
}

TEST_CASE("coupled runs keep the Coulomb constraint") {
    InitialData d = small_data(g8, 94, 0.05, 1);
    double div_ratio = 0.0;
    EvolveOptions opt;
    opt.div_M_ratio_max = &div_ratio;
    Trajectory tr = evolve(d, PhysParams{}, 0.05, 2.5e-3, "rk4", opt);
    for (const State& s : tr.states) CHECK(constraint_residual_l2(s) <= 1e-8);
    CHECK(div_ratio < 1e-10);
}

TEST_CASE("first Picard iterate obeys the exact discrete rescaling") {
    // a = b = 0, phi1 = 0, m = 0; compare resolutions (n, 2n) with lambda = 2.
    const double T = 0.2, dt = 0.025;
    const int nt = static_cast<int>(std::lround(T / dt));
    ScalarField phi0 = 0.1 * random_field(g8, 95, 1, false);

    auto first_iterate = [](const ScalarField& p0, double dt_, int nt_) {
        const GridSpec& g = p0.grid;
        ScalarField zero(g, Domain::frequency, false);
        std::vector<VectorField> Ms;
        for (int i = 0; i <= nt_; ++i) {
            State s;
            s.t = i * dt_;
            s.A = VectorField(g);
            s.At = VectorField(g);
            auto [f, ft] = free_evolution_pair(p0, zero, s.t);
            s.phi = std::move(f);
            s.phit = std::move(ft);
            Ms.push_back(rhs_M(s));
        }
        std::vector<std::vector<ScalarField>> Fj(4);
        for (int j = 0; j < 4; ++j)
            for (const auto& M : Ms) Fj[static_cast<std::size_t>(j)].push_back(M[j]);
        std::vector<VectorField> A1(static_cast<std::size_t>(nt_) + 1);
        for (int i = 0; i <= nt_; ++i) {
            A1[static_cast<std::size_t>(i)] = VectorField(g);
            for (int j = 0; j < 4; ++j)
                A1[static_cast<std::size_t>(i)][j] =
                    duhamel_wt(Fj[static_cast<std::size_t>(j)], dt_, i * dt_);
        }
        return A1;
    };

    auto coarse = first_iterate(phi0, dt, nt);
    ScalarField phi0_fine = rescale_fixed_box(phi0, 2);
    auto fine = first_iterate(phi0_fine, dt / 2, nt);

    double worst = 0.0;
    for (int i = 0; i <= nt; ++i) {
        for (int j = 0; j < 4; ++j) {
            // lambda A(lambda t, lambda x) at the fine sample time t_i/2;
            // rescale_fixed_box realizes the lambda amplitude itself
            ScalarField expect = rescale_fixed_box(coarse[static_cast<std::size_t>(i)][j], 2);
            const ScalarField& got = fine[static_cast<std::size_t>(i)][j];
            const double den = std::max(norm_l2(expect), 1e-300);
            worst = std::max(worst, norm_l2(got - expect) / den);
        }
    }
    CHECK(worst <= 1e-8);
}
