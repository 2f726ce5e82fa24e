#include "doctest.h"

#include <cmath>

#include "selfsim/core.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/hypergeom.hpp"
#include "selfsim/matcher.hpp"

using namespace selfsim;
using namespace selfsim::matcher;

namespace {

const MatchContext& ctx() {
    static const MatchContext c;
    return c;
}

double y0() { return choose_y0(ctx().d1()).y0; }

// scipy solve_ivp (DOP853, rtol 1e-13) with brentq in log lambda and epsilon
struct Oracle {
    int k;
    double lambda, epsilon;
};
constexpr Oracle kOracle[] = {
    {3, 4.038069471637575e-4, -0.028666047648327222},
    {4, 3.9440411159914724e-05, 0.008966905634768213},
    {5, 3.614329557246516e-06, -0.0027137781998152768},
};

}  // namespace

TEST_CASE("interface radius") {
    const auto c = choose_y0(ctx().d1());
    CHECK(c.m == 1);
    CHECK(c.deviation <= 1e-12);
    CHECK(c.y0 == doctest::Approx(0.015337794505649108).epsilon(1e-12));
    CHECK(std::sin(kOmega * std::log(c.y0) + ctx().d1()) == doctest::Approx(1.0).epsilon(1e-12));
    const auto lower = choose_y0(ctx().d1(), 1e-3);
    CHECK(c.y0 / lower.y0 == doctest::Approx(std::exp(2 * kPi / kOmega)).epsilon(1e-12));
    CHECK_THROWS_AS(choose_y0(ctx().d1(), 0.5), DomainError);
}

TEST_CASE("exterior at zero offset is the far field") {
    const auto e = exterior_solve(0.0, y0());
    double worst = 0.0;
    for (double y = y0(); y < 1e3; y *= 1.05) {
        const auto p = e.profile(y);
        worst = std::max({worst, std::fabs(p.rho * y * y - 1.0), std::fabs(p.u)});
    }
    CHECK(worst <= 1e-9);
    CHECK(e.min_slope == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exterior trace follows the homogeneous solution") {
    const double y = y0(), eps = 1e-4;
    const auto t = exterior_trace(eps, y);
    const double pred = eps * hypergeom::phom_eval(y).p / (y * y);
    CHECK(std::fabs((t.rho - 1.0 / (y * y) - pred) / pred) <= eps / std::sqrt(y));
    // first order in epsilon: halving the offset halves the deviation
    const auto h = exterior_trace(eps / 2, y);
    CHECK((t.rho - 1.0 / (y * y)) / (h.rho - 1.0 / (y * y)) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(std::sqrt(y) * hypergeom::phom_eval(y).p == doctest::Approx(ctx().c1()).epsilon(y * y));
    CHECK_THROWS_AS(exterior_trace(0.0, 1.5), DomainError);
}

TEST_CASE("interior solution") {
    const double lam = 1e-2, y = 0.1;
    const auto in = interior_solve(lam, y);
    CHECK(in.profile(0.0).rho == doctest::Approx(1.0 / (lam * lam)).epsilon(1e-14));
    CHECK(in.profile(0.0).u == 0.0);
    CHECK(in.max_speed <= 0.5);
    // the deviation from the rescaled ground state is lambda^2 e^Q w1 to leading order
    const auto fo = iso::first_order_interior(ctx().tables(), y / lam);
    for (double s : {0.02, 0.05, 0.1}) {
        const double x = s / lam;
        const double dev = in.profile(s).rho - ctx().tables().eQ(x) / (lam * lam);
        CHECK(dev / (ctx().tables().eQ(x) * fo.w1(x)) == doctest::Approx(1.0).epsilon(0.02));
    }
    CHECK(interior_trace(lam, y).rho == doctest::Approx(in.profile(y).rho).epsilon(1e-12));
    CHECK_THROWS_AS(interior_solve(0.2, 0.1), DomainError);
}

TEST_CASE("matching function at its extrema") {
    const double y = y0();
    for (int k = 3; k <= 6; ++k) {
        const double s = (-k * kPi - ctx().d1() + ctx().d2_lifted() + kPi / 2) / kOmega;
        const auto g = matching_G(ctx(), std::exp(s), y);
        CHECK(std::fabs(std::fabs(g.G) - 1.0) <= 0.02);
        CHECK(std::fabs(g.eps.mismatch) <= 1e-9 * g.eps.interior.rho);
    }
}

TEST_CASE("roots against the independent solver") {
    const double y = y0();
    for (const auto& o : kOracle) {
        const auto r = find_lambda_k(ctx(), o.k, y);
        CHECK(r.lambda == doctest::Approx(o.lambda).epsilon(1e-7));
        CHECK(r.epsilon == doctest::Approx(o.epsilon).epsilon(1e-7));
        CHECK(r.intersections == o.k + 1);
        CHECK(r.sonic_count == 1);
        CHECK(r.report.passed);
        CHECK(r.jump_rho <= 1e-10);
        CHECK(r.jump_u <= 1e-8);
        CHECK(r.y_star == doctest::Approx(1.0 + r.epsilon).epsilon(1e-15));
        CHECK(std::fabs(r.epsilon / r.epsilon_predicted - 1.0) <= 1e-3);
    }
}

TEST_CASE("root is insensitive to the integrator tolerance") {
    MatchConfig loose;
    loose.integrator.rel_tol = 1e-8;
    const MatchContext c(ctx().tables_ptr(), ctx().constants(), loose);
    const double lam = kOracle[0].lambda;
    const double a = match_epsilon(ctx(), lam, y0()).epsilon;
    const double b = match_epsilon(c, lam, y0()).epsilon;
    CHECK(std::fabs(a / b - 1.0) <= 1e-6);
}

TEST_CASE("refusals") {
    const double y = y0();
    CHECK_THROWS_AS(find_lambda_k(ctx(), 1, y), NoBracket);
    CHECK_THROWS_AS(find_lambda_k(ctx(), 2, y), NoBracket);
    CHECK_THROWS_AS(find_lambda_k(ctx(), 50, y), PrecisionFloor);
    CHECK(precision_floor(ctx(), y) == doctest::Approx(1e-16 / (ctx().c2() * ctx().c2() * y)));
    const auto b = lambda_bracket(ctx(), 4, 0.1);
    CHECK(b.lo < kOracle[1].lambda);
    CHECK(b.hi > kOracle[1].lambda);
}

TEST_CASE("Larson-Penston solution") {
    const auto lp = larson_penston_solve();
    // scipy fsolve on the two-sided shooting residual
    CHECK(lp.y_star == doctest::Approx(2.34111728058).epsilon(1e-9));
    CHECK(lp.rho0 == doctest::Approx(0.8329080524692988).epsilon(1e-8));
    CHECK(lp.mismatch <= 1e-10);
    const auto r = analysis::verify(lp.profile, 1e-8, 1, 1);
    CHECK(r.passed);
    REQUIRE(r.sonic_points.size() == 1);
    CHECK(r.sonic_points[0].cls == analysis::SonicClass::LarsonPenston);
}
