#include "doctest.h"

#include <cmath>

#include "selfsim/core.hpp"
#include "selfsim/errors.hpp"

using namespace selfsim;

TEST_CASE("exact solutions have vanishing residual") {
    for (auto kind : {ReferenceKind::FarField, ReferenceKind::Friedman}) {
        const auto p = reference_profile(kind, 1e-2, 1e2);
        for (int i = 0; i <= 200; ++i) {
            const double y = 1e-2 * std::pow(1e4, i / 200.0);
            const auto r = residual(p, y);
            CHECK(std::fabs(r.r1) <= 1e-12 * (1.0 + r.scale1));
            CHECK(std::fabs(r.r2) <= 1e-12 * (1.0 + r.scale2));
        }
    }
}

TEST_CASE("solved form reproduces the far field and Friedman slopes") {
    for (double y : {0.3, 0.7, 2.0, 9.0}) {
        const auto d = rhs({y, 1.0 / (y * y), 0.0});
        CHECK(d.drho == doctest::Approx(-2.0 / (y * y * y)).epsilon(1e-13));
        CHECK(std::fabs(d.du) < 1e-13);
    }
    for (double y : {0.2, 0.9, 4.0}) {
        const auto d = rhs({y, 1.0 / 3.0, -2.0 * y / 3.0});
        CHECK(std::fabs(d.drho) < 1e-13);
        CHECK(d.du == doctest::Approx(-2.0 / 3.0).epsilon(1e-13));
    }
}

TEST_CASE("sonic guard") {
    CHECK(sonic_determinant({1.0, 1.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(rhs({1.0, 1.0, 1e-10}), SonicDegeneracy);
    CHECK_NOTHROW(rhs({1.0, 1.0, 1e-3}));
    CHECK_THROWS_AS(rhs({-1.0, 1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(rhs({1.0, -1.0, 0.3}), DomainError);
}

TEST_CASE("coefficient matrix times solved slopes gives the source terms") {
    const RadialState s{0.8, 1.7, -0.3};
    const auto m = coefficient_matrix(s);
    CHECK(m[0] * m[3] - m[1] * m[2] == doctest::Approx(sonic_determinant(s)).epsilon(1e-15));
    const auto d = rhs(s);
    const double a = s.u + s.y;
    CHECK(m[0] * d.drho + m[1] * d.du == doctest::Approx(-2.0 * s.rho * a / s.y).epsilon(1e-13));
    CHECK(m[2] * d.drho + m[3] * d.du == doctest::Approx(-2.0 * s.rho * a).epsilon(1e-13));
}

TEST_CASE("state conversions round-trip") {
    const RadialState s{0.37, 2.5, -0.11};
    const auto a = from_p_omega(to_p_omega(s));
    CHECK(a.rho == doctest::Approx(s.rho).epsilon(1e-15));
    CHECK(a.u == doctest::Approx(s.u).epsilon(1e-15));
    const auto b = from_log_density(to_log_density(s));
    CHECK(b.rho == doctest::Approx(s.rho).epsilon(1e-15));
    CHECK_THROWS_AS(to_p_omega({0.0, 1.0, 0.0}), DomainError);
}

TEST_CASE("(p, omega) form agrees with the solved form") {
    for (const RadialState s : {RadialState{0.4, 3.0, -0.1}, RadialState{2.5, 0.2, -1.2}, RadialState{7.0, 0.02, 0.3}}) {
        const auto d = rhs(s);
        const auto po = to_p_omega(s);
        const auto dpo = p_omega_rhs(po);
        // p = y^2 rho, omega = u/y + 1
        const double dp = 2.0 * s.y * s.rho + s.y * s.y * d.drho;
        const double dw = d.du / s.y - s.u / (s.y * s.y);
        CHECK(dpo[0] == doctest::Approx(dp).epsilon(1e-12));
        CHECK(dpo[1] == doctest::Approx(dw).epsilon(1e-12));
        const auto r = p_omega_residual(po, dpo[0], dpo[1]);
        CHECK(std::fabs(r[0]) < 1e-12);
        CHECK(std::fabs(r[1]) < 1e-12);
    }
}

TEST_CASE("far-field linearization residue") {
    const auto d = linearized_farfield_residue();
    CHECK(d.trace == doctest::Approx(-1.0));
    CHECK(d.det == doctest::Approx(2.0));
    CHECK(d.eig_plus.real() == doctest::Approx(-0.5));
    CHECK(std::fabs(d.eig_plus.imag()) == doctest::Approx(kOmega).epsilon(1e-15));
    CHECK(d.theta0 == doctest::Approx(kTheta0).epsilon(1e-14));
    CHECK(kTheta0 == doctest::Approx(3.86432690140320885).epsilon(1e-15));
}

TEST_CASE("profile segments") {
    RadialProfile p;
    p.add_segment({1.0, 2.0, [](double) { return ProfilePoint{1, 0, 0, 0}; }, "b"});
    p.add_segment({0.5, 1.0, [](double) { return ProfilePoint{2, 0, 0, 0}; }, "a"});
    CHECK(p.y_min() == 0.5);
    CHECK(p.y_max() == 2.0);
    CHECK(p(0.7).rho == 2.0);
    CHECK(p(1.0).rho == 1.0);
    CHECK_THROWS_AS(p(2.5), DomainError);
    CHECK_THROWS_AS(p.add_segment({1.0, 1.0, nullptr, "bad"}), DomainError);
}
