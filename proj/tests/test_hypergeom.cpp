#include "doctest.h"

#include <cmath>

#include "selfsim/core.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/hypergeom.hpp"

using namespace selfsim;
using namespace selfsim::hypergeom;

// mpmath at 30 digits
constexpr double kMu3 = 1.75331496320289736813846684624;
constexpr double kMu4 = -2.89692400695943874137488680199;
constexpr double kMu5 = 0.504404391007200854345376782043;
constexpr double kMu6 = 0.476499686214536232820382066146;
constexpr double kC1 = 0.693884529752535019937270822135;
constexpr double kD1 = 0.813838437496408797615540402788;

TEST_CASE("complex gamma") {
    CHECK(complex_gamma(0.5).real() == doctest::Approx(std::sqrt(kPi)).epsilon(1e-14));
    CHECK(complex_gamma(-0.5).real() == doctest::Approx(-2.0 * std::sqrt(kPi)).epsilon(1e-14));
    const auto g = complex_gamma(cplx(1.0, 1.0));
    CHECK(g.real() == doctest::Approx(0.49801566811835604).epsilon(1e-13));
    CHECK(g.imag() == doctest::Approx(-0.15494982830181069).epsilon(1e-13));
    CHECK(complex_gamma(6.0).real() == doctest::Approx(120.0).epsilon(1e-14));
}

TEST_CASE("2F1 against elementary closed forms on every branch") {
    for (double x : {-20.0, -3.0, -0.7, -0.2, 0.3, 0.6, 0.9, 0.99}) {
        const double ref = -std::log1p(-x) / x;
        CHECK(gauss_2f1(1.0, 1.0, 2.0, x).real() == doctest::Approx(ref).epsilon(1e-12));
    }
    // (1-x)^-a
    for (double x : {-8.0, -0.6, 0.4, 0.85}) {
        CHECK(gauss_2f1(0.3, 2.0, 2.0, x).real() == doctest::Approx(std::pow(1.0 - x, -0.3)).epsilon(1e-12));
    }
    const double h = 1e-6, x = 0.42;
    const double fd = (gauss_2f1(0.5, 1.5, 2.5, x + h).real() - gauss_2f1(0.5, 1.5, 2.5, x - h).real()) / (2 * h);
    CHECK(gauss_2f1_derivative(0.5, 1.5, 2.5, x).real() == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("connection constants match high-precision values") {
    const auto k = build_constants();
    CHECK(k.mu3 == doctest::Approx(kMu3).epsilon(1e-13));
    CHECK(k.mu4 == doctest::Approx(kMu4).epsilon(1e-13));
    CHECK(k.mu5 == doctest::Approx(kMu5).epsilon(1e-13));
    CHECK(k.mu6 == doctest::Approx(kMu6).epsilon(1e-13));
    CHECK(k.c1 == doctest::Approx(kC1).epsilon(1e-13));
    CHECK(k.d1 == doctest::Approx(kD1).epsilon(1e-13));
    CHECK(k.theta0 == doctest::Approx(kTheta0).epsilon(1e-14));
    CHECK(k.c1 > 0.0);
    CHECK(k.mu4 < 0.0);
}

TEST_CASE("branch functions at reference points") {
    CHECK(g1(0.3).g == doctest::Approx(1.16280191885476549).epsilon(1e-13));
    CHECK(g1(0.7).g == doctest::Approx(1.43824942514633642).epsilon(1e-13));
    CHECK(g1(-5.0).g == doctest::Approx(-0.285642840583636233).epsilon(1e-12));
    CHECK(g5(-5.0).g == doctest::Approx(0.749005716375926654).epsilon(1e-12));
    CHECK(g6(-5.0).g == doctest::Approx(-1.39232959014886440).epsilon(1e-12));
    CHECK(g5(-0.5).g == doctest::Approx(1.17043891781587532).epsilon(1e-12));
    CHECK(g6(-100.0).g == doctest::Approx(-0.300709109281303629).epsilon(1e-12));
}

TEST_CASE("connection identities and Wronskians") {
    const auto k = build_constants();
    double e34 = 0.0, e56 = 0.0, w34 = 0.0, w56 = 0.0, im = 0.0;
    for (int i = 1; i < 100; ++i) {
        const double xi = i / 100.0;
        const auto a = g1(xi), b = g3(xi), c = g4(xi);
        e34 = std::max(e34, std::fabs(a.g - k.mu3 * b.g - k.mu4 * c.g));
        const double W = b.g * c.dg - c.g * b.dg;
        w34 = std::max(w34, std::fabs(W - wronskian_inf_closed(xi)) / std::fabs(wronskian_inf_closed(xi)));
    }
    for (int i = 0; i < 100; ++i) {
        const double xi = -std::pow(10.0, -3.0 + 6.0 * i / 99.0);
        const auto a = g1(xi), b = g5(xi), c = g6(xi);
        e56 = std::max(e56, std::fabs(a.g - k.mu5 * b.g - k.mu6 * c.g) / (1.0 + std::fabs(a.g)));
        const double W = b.g * c.dg - c.g * b.dg;
        w56 = std::max(w56, std::fabs(W - wronskian_zero_closed(xi)) / std::fabs(wronskian_zero_closed(xi)));
        im = std::max(im, std::fabs(g56_imag_residue(xi)));
    }
    CHECK(e34 <= 1e-10);
    CHECK(e56 <= 1e-10);
    CHECK(w34 <= 1e-10);
    CHECK(w56 <= 1e-10);
    CHECK(im <= 1e-12);
}

TEST_CASE("fundamental matrices invert") {
    for (double z : {0.1, 0.5, 0.9, 1.2, 3.0, 15.0}) {
        const auto fm = fundamental_matrix(z > 1.0 ? Region::InfinitySide : Region::ZeroSide, z);
        const auto I = matmul(fm.U, fm.Uinv);
        CHECK(std::fabs(I[0] - 1.0) < 1e-12);
        CHECK(std::fabs(I[1]) < 1e-12);
        CHECK(std::fabs(I[2]) < 1e-12);
        CHECK(std::fabs(I[3] - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(fundamental_matrix(Region::InfinitySide, 0.5), DomainError);
}

TEST_CASE("homogeneous solution: normalisation, equation and ODE path") {
    const auto one = phom_eval(1.0);
    const auto done = phom_derivative(1.0);
    CHECK(one.p == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(done.p == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one.omega == doctest::Approx(-1.0).epsilon(1e-13));
    for (double z : {0.05, 0.3, 0.8, 1.3, 4.0, 20.0}) {
        const auto p = phom_eval(z);
        const auto d = phom_derivative(z);
        const auto L = apply_L(z, p.p, p.omega, d.p, d.omega);
        CHECK(std::fabs(L[0]) < 1e-11 * (1.0 + std::fabs(p.p)));
        CHECK(std::fabs(L[1]) < 1e-11 * (1.0 + std::fabs(p.p)));
        CHECK(std::fabs(second_order_residual(z, p.p, d.p, phom_second_derivative(z))) < 1e-9 * (1.0 + std::fabs(p.p)));
    }
    const PhomOdeSolver ode;
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double z = 0.05 * std::pow(400.0, i / 400.0);
        const auto a = phom_eval(z), b = ode(z);
        worst = std::max({worst, std::fabs(a.p - b.p) / (1.0 + std::fabs(a.p)),
                          std::fabs(a.omega - b.omega) / (1.0 + std::fabs(a.omega))});
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("least-squares refit of the constants") {
    const auto k = build_constants();
    const auto x = cross_check_constants(k);
    CHECK(x.max_delta <= 1e-10);
    CHECK(x.phom_path_delta <= 1e-8);
}

TEST_CASE("small-z behaviour of the homogeneous solution") {
    // z^{1/2} p ~ c1 sin(omega log z + d1) as z -> 0
    const auto k = build_constants();
    for (double z : {1e-3, 3e-3, 1e-2}) {
        const double lhs = std::sqrt(z) * phom_eval(z).p;
        const double rhs = k.c1 * std::sin(kOmega * std::log(z) + k.d1);
        CHECK(std::fabs(lhs - rhs) <= 5.0 * z * z + 1e-12);
    }
}
