#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "mkg4d/spacetime.hpp"
#include "test_helpers.hpp"

using namespace mkg4d;
using mkg4d::testing::random_field;
using mkg4d::testing::random_vector_field;

namespace {
constexpr double pi = std::numbers::pi;
const GridSpec g8(8, 2 * pi);
}

TEST_CASE("parameter selection reproduces the frozen tuple at s = 1.1") {
    NormParams np = select_parameters(1.1);
    CHECK(np.theta == doctest::Approx(0.525).epsilon(1e-14));
    CHECK(np.eps == doctest::Approx(0.003125).epsilon(1e-14));
    CHECK(np.gamma == doctest::Approx(0.015625).epsilon(1e-14));
    CHECK(1.0 / np.p == doctest::Approx(0.96875).epsilon(1e-14));
    CHECK(1.0 / np.r == doctest::Approx(0.46875).epsilon(1e-14));
    CHECK(np.q == 256.0);
}

TEST_CASE("parameter selection at s = 1.4") {
    NormParams np = select_parameters(1.4);
    CHECK(np.theta == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(np.eps == doctest::Approx(0.0125).epsilon(1e-14));
}

TEST_CASE("parameter selection rejects the boundary") {
    CHECK_THROWS_AS(select_parameters(1.0), ContractViolation);
    CHECK_THROWS_AS(select_parameters(0.9), ContractViolation);
    CHECK_THROWS_AS(select_parameters(2.0), ContractViolation);
}

TEST_CASE("NormParams invariants are enforced on construction") {
    NormParams good = select_parameters(1.25);
    CHECK_NOTHROW(NormParams(good.s, good.theta, good.eps, good.gamma, good.p, good.q, good.r));
    // theta outside its interval
    CHECK_THROWS_AS(NormParams(1.25, 0.75, good.eps, good.gamma, good.p, good.q, good.r),
                    ContractViolation);
    // gamma inconsistent
    CHECK_THROWS_AS(NormParams(good.s, good.theta, good.eps, good.gamma + 1e-3, good.p, good.q,
                               good.r),
                    ContractViolation);
    // q too small
    CHECK_THROWS_AS(NormParams(good.s, good.theta, good.eps, good.gamma, good.p, 4.0, good.r),
                    ContractViolation);
}

TEST_CASE("Sobolev norm of a unit-frequency plane wave") {
    ScalarField f = plane_wave(g8, {1, 0, 0, 0});
    for (double s : {1.1, 1.5, 1.9})
        CHECK(norm_sobolev(f, s) ==
              doctest::Approx(std::pow(2 * pi, 2.0) * std::pow(2.0, s / 2.0)).epsilon(1e-13));
}

TEST_CASE("homogeneous norm of a constant vanishes") {
    ScalarField f(g8, Domain::frequency, true);
    f.set_mode({0, 0, 0, 0}, 3.7);
    CHECK(norm_hdot(f, 1.0) == 0.0);
}

TEST_CASE("sobolev(0) equals lp(2)") {
    ScalarField f = random_field(g8, 31, 3, false, false);
    CHECK(norm_sobolev(f, 0.0) == doctest::Approx(norm_lp(f, 2.0)).epsilon(1e-12));
}

TEST_CASE("Sobolev norms are monotone in the exponent") {
    ScalarField f = random_field(g8, 32, 3, false);
    double prev = norm_sobolev(f, 0.5);
    for (double s : {1.0, 1.3, 1.8}) {
        const double cur = norm_sobolev(f, s);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("scaling relation holds to 1e-12 and is exact at s = 1") {
    ScalarField f = random_field(g8, 33, 2, false);
    for (double s : {1.0, 1.25, 1.5}) {
        ScalingCheck sc = scaling_check(f, s, 2);
        const double expected = std::pow(2.0, s - 1.0);
        CHECK(std::abs(sc.lhs / sc.rhs - expected) < 1e-12 * expected);
    }
    ScalingCheck sc1 = scaling_check(f, 1.0, 2);
    CHECK(sc1.lhs == doctest::Approx(sc1.rhs).epsilon(1e-14));
}

TEST_CASE("single-mode scaling is analytically exact") {
    ScalarField f = plane_wave(g8, {1, 1, 0, 0}, cplx(0.4, -0.3));
    ScalingCheck sc = scaling_check(f, 1.5, 2);
    // one-term sums: lhs = lambda^{s-1} rhs exactly up to pow() rounding
    CHECK(sc.lhs == doctest::Approx(std::sqrt(2.0) * sc.rhs).epsilon(1e-14));
}

TEST_CASE("rescaling refuses Nyquist content") {
    ScalarField f(g8, Domain::frequency, false);
    f.set_mode({-4, 0, 0, 0}, 1.0);
    CHECK_THROWS_AS(static_cast<void>(rescale(f, 2)), ContractViolation);
}

TEST_CASE("wave-Sobolev norm with theta = 0 matches the direct space-time L2") {
    InitialData d;
    d.a = leray_project(random_vector_field(g8, 40, 2));
    d.b = leray_project(random_vector_field(g8, 41, 2));
    d.phi0 = random_field(g8, 42, 2, false);
    d.phi1 = random_field(g8, 43, 2, false);
    Trajectory tr;
    tr.params = PhysParams{};
    tr.dt = 0.05;
    for (int i = 0; i <= 8; ++i) {
        State s;
        s.t = i * 0.05;
        s.A = VectorField(g8);
        s.At = VectorField(g8);
        auto [f, ft] = free_evolution_pair(d.phi0, d.phi1, s.t);
        s.phi = std::move(f);
        s.phit = std::move(ft);
        tr.states.push_back(s);
    }
    const double s_exp = 1.3;
    const double via_st = norm(tr, StateComponent::phi, NormKind::wave_sobolev(s_exp, 0.0));

    // independent route: tapered samples, H^s per slice, Riemann sum in t
    const int nt = 8;
    const double T = nt * tr.dt;
    double acc = 0.0;
    for (int i = 0; i < nt; ++i) {
        const double w = taper_weight(i * tr.dt, T, 0.1);
        const double ns = norm_sobolev(tr.states[static_cast<std::size_t>(i)].phi, s_exp);
        acc += tr.dt * w * w * ns * ns;
    }
    CHECK(via_st == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
}

TEST_CASE("mixed norm of a time-constant field factorizes") {
    ScalarField f = random_field(g8, 44, 2, false);
    const int nt = 8;
    const double T = 2.0;
    SpaceTimeField u(g8, nt, T, Domain::position);
    ScalarField fp = to_position(f);
    for (int i = 0; i < nt; ++i)
        std::copy(fp.values.begin(), fp.values.end(), u.slice(i));
    const double got = st_norm_mixed(u, 3.0, 5.0);
    CHECK(got == doctest::Approx(std::pow(T, 1.0 / 3.0) * norm_lp(f, 5.0)).epsilon(1e-12));
}

TEST_CASE("space-time transforms round-trip") {
    SpaceTimeField u(g8, 8, 1.0, Domain::position);
    Rng rng(45);
    for (auto& x : u.v) x = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    SpaceTimeField back = st_to_position(st_to_frequency(u));
    double worst = 0.0;
    for (std::size_t i = 0; i < u.v.size(); ++i)
        worst = std::max(worst, std::abs(back.v[i] - u.v[i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("auxiliary modulus norm scales linearly with amplitude") {
    Rng rng(46);
    SpaceTimeField u = detail::random_spacetime(g8, 8, 1.0, rng, 2, 2);
    const double n1 = st_aux_l1l8(u, 0.015625);
    for (auto& x : u.v) x *= 3.0;
    const double n3 = st_aux_l1l8(u, 0.015625);
    CHECK(n3 == doctest::Approx(3.0 * n1).epsilon(1e-10));
    CHECK(n1 > 0.0);
}

TEST_CASE("degenerate probe samples are skipped") {
    NormParams np = select_parameters(1.1);
    SpaceTimeField zero(g8, 8, 1.0, Domain::frequency);
    SpaceTimeField v(g8, 8, 1.0, Domain::frequency);
    v.v[5] = 1.0;
    CHECK(bilinear_probe_sample(zero, v, np) < 0.0);
}

TEST_CASE("single-mode probe ratio matches the closed form") {
    NormParams np = select_parameters(1.1);
    const double T = 1.0;
    const int nt = 8;
    SpaceTimeField u(g8, nt, T, Domain::frequency);
    SpaceTimeField v(g8, nt, T, Domain::frequency);
    // u at (m=1, xi=(1,0,0,0)), v at (m=-1, xi=(0,1,0,0))
    u.v[static_cast<std::size_t>(1) * u.slice_stride() +
        g8.flat(g8.index_of_mode(1), 0, 0, 0)] = 1.0;
    v.v[static_cast<std::size_t>(nt - 1) * v.slice_stride() +
        g8.flat(0, g8.index_of_mode(1), 0, 0)] = 1.0;

    const double got = bilinear_probe_sample(u, v, np);

    // one-term sums: the product is a single mode at tau = 0, |xi|^2 = 2
    auto lam = [](double tau2, double xi2, double theta) {
        const double d = tau2 - xi2;
        return std::pow(1.0 + d * d / (1.0 + tau2 + xi2), theta);
    };
    const double tau2 = std::pow(2 * pi / T, 2.0);
    const double vol = g8.box_volume();
    const double den_u = std::sqrt(T * vol * std::pow(2.0, np.s) * lam(tau2, 1.0, np.theta));
    const double den_v =
        std::sqrt(T * vol * std::pow(2.0, np.s - 1.0) * lam(tau2, 1.0, np.theta));
    const double c = std::pow(3.0, 0.5 * (np.s - 1.0)) / 2.0;
    const double expected =
        c * std::pow(vol, 1.0 / np.q) * std::pow(T, 1.0 / np.p) / (den_u * den_v);
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("embedding constant is stable from n = 8 to n = 16") {
    const double c8 = l4_sobolev_constant(7, 12, g8, 2);
    const double c16 = l4_sobolev_constant(7, 12, GridSpec(16, 2 * pi), 2);
    CHECK(c8 > 0.0);
    const double drift = std::max(c8, c16) / std::min(c8, c16);
    CHECK(drift < 1.5);
}

TEST_CASE("probe statistics are reproducible and finite") {
    NormParams np = select_parameters(1.1);
    BilinearProbeStats s1 = bilinear_ratio_probe(42, 4, np, g8, 8);
    BilinearProbeStats s2 = bilinear_ratio_probe(42, 4, np, g8, 8);
    CHECK(s1.skipped == 0);
    REQUIRE(s1.ratios.size() == s2.ratios.size());
    for (std::size_t i = 0; i < s1.ratios.size(); ++i) CHECK(s1.ratios[i] == s2.ratios[i]);
    CHECK(s1.max_ratio > 0.0);
    CHECK(std::isfinite(s1.mean_ratio));
}
