#include "doctest.h"

#include <cmath>

#include "selfsim/core.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/ode.hpp"

using namespace selfsim;

namespace {

ode::IntegratorConfig tight() {
    ode::IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    return c;
}

}  // namespace

TEST_CASE("decay and oscillator against closed forms") {
    auto decay = [](double, const double* y, double* dy) { dy[0] = -y[0]; };
    auto r = ode::integrate(decay, 0.0, {1.0}, 5.0, tight());
    CHECK(r.solution->back()[0] == doctest::Approx(std::exp(-5.0)).epsilon(1e-11));

    auto osc = [](double, const double* y, double* dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    auto o = ode::integrate(osc, 0.0, {0.0, 1.0}, 20.0, tight());
    double worst = 0.0, worst_d = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double t = 20.0 * i / 400.0;
        const auto y = (*o.solution)(t);
        const auto d = o.solution->derivative(t);
        worst = std::max(worst, std::fabs(y[0] - std::sin(t)));
        worst_d = std::max(worst_d, std::fabs(d[0] - std::cos(t)));
    }
    CHECK(worst < 1e-10);
    CHECK(worst_d < 1e-8);
}

TEST_CASE("backward integration") {
    auto f = [](double t, const double*, double* dy) { dy[0] = 3.0 * t * t; };
    auto r = ode::integrate(f, 2.0, {8.0}, -1.0, tight());
    CHECK_FALSE(r.solution->increasing());
    CHECK(r.solution->back()[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK((*r.solution)(0.5)[0] == doctest::Approx(0.125).epsilon(1e-11));
}

TEST_CASE("terminal event locates the first zero") {
    auto osc = [](double, const double* y, double* dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    ode::Event e{[](double, const double* y) { return y[0]; }, -1, true};
    auto r = ode::integrate(osc, 0.1, {std::sin(0.1), std::cos(0.1)}, 10.0, tight(), {e});
    REQUIRE(r.terminated);
    CHECK(r.events.back().t == doctest::Approx(kPi).epsilon(1e-11));
}

TEST_CASE("failures are typed") {
    auto blow = [](double, const double* y, double* dy) { dy[0] = y[0] * y[0]; };
    CHECK_THROWS_AS(ode::integrate(blow, 0.0, {1.0}, 2.0, tight()), StepSizeUnderflow);
    auto slow = [](double, const double* y, double* dy) { dy[0] = -y[0]; };
    auto c = tight();
    c.max_steps = 3;
    CHECK_THROWS_AS(ode::integrate(slow, 0.0, {1.0}, 100.0, c), MaxStepsExceeded);
    CHECK_THROWS_AS(ode::integrate(slow, 1.0, {1.0}, 1.0, c), DomainError);
}

TEST_CASE("bracketed roots") {
    auto f = [](double x) { return std::cos(x) - x; };
    const double root = 0.73908513321516064;
    CHECK(ode::bisect(f, 0.0, 1.0, 1e-14) == doctest::Approx(root).epsilon(1e-13));
    CHECK(ode::solve_bracketed(f, 0.0, 1.0, 1e-15) == doctest::Approx(root).epsilon(1e-14));
    CHECK_THROWS_AS(ode::bisect(f, 1.0, 2.0, 1e-12), NoSignChange);
    CHECK_THROWS_AS(ode::solve_bracketed(f, 1.0, 2.0, 1e-12), NoSignChange);
}

TEST_CASE("log-sinusoid fit at fixed frequency") {
    std::vector<double> y, g;
    for (int i = 0; i < 300; ++i) {
        const double yy = 1e3 * std::pow(1e3, i / 299.0);
        y.push_back(yy);
        g.push_back(0.75 * std::sin(kOmega * std::log(yy) + 2.1));
    }
    const auto f = ode::fit_log_sinusoid(y, g, kOmega);
    CHECK(f.amplitude == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(f.phase == doctest::Approx(2.1).epsilon(1e-12));
    CHECK(f.rms_residual < 1e-12);

    for (std::size_t i = 0; i < y.size(); ++i) g[i] += 0.3 / std::sqrt(y[i]) * std::cos(2.0 * kOmega * std::log(y[i]));
    const auto fc = ode::fit_log_sinusoid_corrected(y, g, kOmega);
    CHECK(fc.amplitude == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(fc.phase == doctest::Approx(2.1).epsilon(1e-10));

    std::vector<double> ys(y.begin(), y.begin() + 60), gs(g.begin(), g.begin() + 60);
    CHECK_THROWS_AS(ode::fit_log_sinusoid(ys, gs, kOmega), IllConditioned);
}
