#include "doctest.h"

#include <cmath>
#include <memory>

#include "selfsim/core.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/isothermal.hpp"

using namespace selfsim;
using namespace selfsim::iso;

namespace {

const IsothermalTables& tables() {
    static const IsothermalTables t;
    return t;
}

std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
    return v;
}

}  // namespace

TEST_CASE("origin series coefficients") {
    // -y^2/3 + y^4/30 - 4y^6/945 + 61y^8/102060
    const double y = 0.05, y2 = y * y;
    const double ref = -y2 / 3 + y2 * y2 / 30 - 4 * y2 * y2 * y2 / 945 + 61 * y2 * y2 * y2 * y2 / 102060;
    CHECK(q_series(y) == doctest::Approx(ref).epsilon(1e-15));
    CHECK(q_series(0.0) == 0.0);
    const double h = 1e-5;
    CHECK(dq_series(0.3) == doctest::Approx((q_series(0.3 + h) - q_series(0.3 - h)) / (2 * h)).epsilon(1e-9));
}

TEST_CASE("ground state against an independent integration") {
    const auto& t = tables();
    CHECK(t.Q(0.1) == doctest::Approx(-0.003330004226836319).epsilon(1e-11));
    CHECK(t.Q(10.0) == doctest::Approx(-4.592664654552796).epsilon(1e-11));
    CHECK(t.v1_first_zero() == doctest::Approx(2.878983028182778).epsilon(1e-11));
    CHECK(t.c2() == doctest::Approx(0.9905385177910464).epsilon(1e-8));
    CHECK(t.d2() == doctest::Approx(6.233197432479422).epsilon(1e-9));
    CHECK(t.density_fit.corrected);
    CHECK(t(0.0).Q == 0.0);
    CHECK_THROWS_AS(t(2e6), DomainError);
}

TEST_CASE("equations hold along the tables") {
    const auto& t = tables();
    double h = 0.0, q = 0.0, m = 0.0;
    for (double y : logspace(1e-3, 1e6, 301)) {
        const auto p = t(y);
        const double s1 = std::fabs(t.v1_second(y)) + 2 * std::fabs(p.dv1 / y) + 2 * p.eQ * std::fabs(p.v1);
        const double s2 = std::fabs(t.v2_second(y)) + 2 * std::fabs(p.dv2 / y) + 2 * p.eQ * std::fabs(p.v2);
        h = std::max({h, std::fabs(t.H_residual(1, y)) / s1, std::fabs(t.H_residual(2, y)) / s2});
        q = std::max(q, std::fabs(t.Q_residual(y)) / (2 * p.eQ + 2 * std::fabs(p.dQ) / y));
        m = std::max(m, std::fabs(t.mass_flux_residual(y)) / p.eQ);
    }
    CHECK(h <= 1e-8);
    CHECK(q <= 1e-8);
    CHECK(m <= 1e-8);
}

TEST_CASE("kernel pair: Wronskian and quadrature") {
    const auto& t = tables();
    for (double y : logspace(1e-2, 1e5, 50)) CHECK(y * y * t.wronskian(y) == doctest::Approx(1.0).epsilon(1e-9));
    for (double y : {2e-4, 0.5, 1.0, 2.0}) CHECK(t(y).v2 == doctest::Approx(t.v2_quadrature(y)).epsilon(1e-10));
    CHECK(t(kLaunchY).v2 == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(t.v2_quadrature(0.0), DomainError);
}

TEST_CASE("velocity near the origin") {
    const auto& t = tables();
    CHECK(t.ustar(1e-4) / 1e-4 == doctest::Approx(-2.0 / 3.0).epsilon(1e-7));
    CHECK(t(0.0).ustar == 0.0);
}

TEST_CASE("amplitudes of the far oscillation") {
    const auto& t = tables();
    CHECK(t.ustar_fit.c == doctest::Approx(t.c2()).epsilon(1e-3));
    CHECK(std::remainder(t.ustar_fit.d - t.d2() - kTheta0, 2 * kPi) == doctest::Approx(0.0).scale(1.0).epsilon(1e-3));
    // the fit window is pinned; a shorter table moves the constants only at the fit level
    const IsothermalTables short_tab(1e5);
    CHECK(short_tab.c2() == doctest::Approx(t.c2()).epsilon(1e-3));
    CHECK_THROWS_AS(t.fit_density_window(1e3, 2e3), IllConditioned);
}

TEST_CASE("scaled ground state") {
    auto t = std::make_shared<const IsothermalTables>();
    const double lam = 1e-3;
    const ScaledIsothermal s(t, lam);
    for (double y : {1e-5, 1e-3, 0.1}) {
        CHECK(s.eQ(y) == doctest::Approx(t->eQ(y / lam) / (lam * lam)).epsilon(1e-14));
        CHECK(s.Q(y) == doctest::Approx(std::log(s.eQ(y))).epsilon(1e-12));
        CHECK(s.u(y) == doctest::Approx(lam * t->ustar(y / lam)).epsilon(1e-14));
        const double h = 1e-6 * y;
        CHECK(s.du(y) == doctest::Approx((s.u(y + h) - s.u(y - h)) / (2 * h)).epsilon(1e-6));
        CHECK(s.deQ(y) == doctest::Approx((s.eQ(y + h) - s.eQ(y - h)) / (2 * h)).epsilon(1e-6));
    }
    CHECK(s.eQ(0.0) == doctest::Approx(1.0 / (lam * lam)));
}

TEST_CASE("source solvers") {
    const auto& t = tables();
    // H w = f with f = H(y^2) so w = y^2
    auto f = [&t](double y) { return -(6.0 + 2.0 * t.eQ(y) * y * y); };
    const auto w = apply_S(t, f, 50.0);
    for (double y : {1e-4, 0.5, 3.0, 40.0}) {
        CHECK(w.value(y) == doctest::Approx(y * y).epsilon(1e-9));
        CHECK(w.derivative(y) == doctest::Approx(2 * y).epsilon(1e-8));
    }
    // finite-difference check that the solution satisfies H w = f for a generic source
    auto g = [](double y) { return std::cos(y) / (1.0 + y * y); };
    const auto v = apply_S(t, g, 20.0);
    for (double y : {0.7, 5.0, 15.0}) {
        const double h = 1e-4 * y;
        const double d2 = (v.derivative(y + h) - v.derivative(y - h)) / (2 * h);
        const double Hv = -(d2 + 2 * v.derivative(y) / y + 2 * t.eQ(y) * v.value(y));
        CHECK(Hv == doctest::Approx(g(y)).epsilon(1e-6));
    }
    // y^2 e^Q T(f) = -int s^2 f
    const auto u = apply_T(t, [](double) { return 1.0; }, 10.0);
    for (double y : {1e-4, 0.3, 8.0}) CHECK(u.value(y) * y * y * t.eQ(y) == doctest::Approx(-y * y * y / 3).epsilon(1e-10));
    CHECK_THROWS_AS(apply_S(t, g, 2e6), DomainError);
}

TEST_CASE("first-order interior correction grows at the expected rates") {
    const auto& t = tables();
    const auto fo = first_order_interior(t, 1e5);
    std::vector<double> y = logspace(1e3, 1e5, 300), w, u;
    for (double s : y) {
        w.push_back(fo.w1(s));
        u.push_back(fo.u1(s));
    }
    const auto gw = growth_exponent(y, w), gu = growth_exponent(y, u);
    CHECK(std::fabs(gw.exponent - 1.5) <= 0.1);
    CHECK(std::fabs(gu.exponent - 2.5) <= 0.1);
    CHECK(gw.rel_residual <= 1e-3);
    CHECK(first_order_source(t, 0.0) == doctest::Approx(-2.0 / 3.0));
    CHECK(fo.w1(1e-4) == doctest::Approx(1e-8 / 9.0).epsilon(1e-6));
}
