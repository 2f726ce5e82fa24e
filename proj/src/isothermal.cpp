#include "selfsim/isothermal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <Eigen/Dense>

#include "selfsim/core.hpp"
#include "selfsim/errors.hpp"

namespace selfsim::iso {

namespace {

// Q = sum kQ[i] y^{2i+2}
constexpr double kQ[5] = {-1.0 / 3.0, 1.0 / 30.0, -4.0 / 945.0, 61.0 / 102060.0, -629.0 / 7016625.0};

double ddq_series(double y) {
    double s = 0.0, yp = 1.0;
    for (int i = 0; i < 5; ++i) {
        s += kQ[i] * (2 * i + 2) * (2 * i + 1) * yp;
        yp *= y * y;
    }
    return s;
}

// state in t = log y: Q, P = yQ', v1, y v1', v2, y v2'
void ground_rhs(double t, const double* s, double* ds) {
    const double y = std::exp(t);
    const double k = 2.0 * y * y * std::exp(s[0]);
    ds[0] = s[1];
    ds[1] = -s[1] - k;
    ds[2] = s[3];
    ds[3] = -s[3] - k * s[2];
    ds[4] = s[5];
    ds[5] = -s[5] - k * s[4];
}

double gk(const std::function<double(double)>& f, double a, double b) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14, &err);
    if (!std::isfinite(v) || err > 1e-10 * std::max(1.0, std::fabs(v))) {
        std::ostringstream os;
        os << "quadrature on [" << a << ", " << b << "] failed (error estimate " << err << ")";
        throw QuadratureFailure(os.str());
    }
    return v;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, i / double(n - 1));
    return g;
}

}  // namespace

double q_series(double y) {
    double s = 0.0, yp = y * y;
    for (double c : kQ) {
        s += c * yp;
        yp *= y * y;
    }
    return s;
}

double dq_series(double y) {
    double s = 0.0, yp = y;
    for (int i = 0; i < 5; ++i) {
        s += kQ[i] * (2 * i + 2) * yp;
        yp *= y * y;
    }
    return s;
}

ConstantFit fit_with_policy(const std::vector<double>& y, const std::vector<double>& g) {
    const auto plain = ode::fit_log_sinusoid(y, g, kOmega);
    ConstantFit f{plain.amplitude, plain.phase, plain.rms_residual, false};
    if (plain.rms_residual > 1e-3 * plain.amplitude) {
        const auto corr = ode::fit_log_sinusoid_corrected(y, g, kOmega);
        f = {corr.amplitude, corr.phase, corr.rms_residual, true};
    }
    return f;
}

ode::IntegratorConfig IsothermalTables::default_config() {
    ode::IntegratorConfig c;
    c.rel_tol = 1e-13;
    c.abs_tol = 1e-15;
    c.max_steps = 1000000;
    return c;
}

IsothermalTables::IsothermalTables(double y_max, const ode::IntegratorConfig& cfg) : y_max_(y_max) {
    if (!(y_max >= 1e3)) throw DomainError("isothermal tables need y_max >= 1e3");
    const double y = kLaunchY;
    const double dq = dq_series(y), ddq = ddq_series(y);
    const double v1 = 2.0 + y * dq;
    const double dv1 = dq + y * ddq;
    const ode::State s0 = {q_series(y), y * dq, v1, y * dv1, 0.0, 1.0 / (y * v1)};
    sol_ = ode::integrate(ground_rhs, std::log(y), s0, std::log(y_max), cfg).solution;

    // fits start at 1e3, or one full period below y_max when that is shorter
    const double lo = std::min(1e3, y_max_ * std::exp(-1.01 * 2.0 * kPi / kOmega));
    auto fit_trace = [&](auto trace) {
        const auto ys = log_grid(lo, y_max_, 400);
        std::vector<double> g;
        for (double yy : ys) g.push_back(trace((*this)(yy)));
        return fit_with_policy(ys, g);
    };
    density_fit = fit_density_window(lo, y_max_);
    ustar_fit = fit_trace([](const IsoPoint& p) { return p.ustar / std::sqrt(p.y); });
    v1_fit = fit_trace([](const IsoPoint& p) { return p.v1 * std::sqrt(p.y); });
    v2_fit = fit_trace([](const IsoPoint& p) { return p.v2 * std::sqrt(p.y); });
}

ConstantFit IsothermalTables::fit_density_window(double lo, double hi, int samples) const {
    const auto ys = log_grid(lo, hi, samples);
    std::vector<double> g;
    for (double y : ys) {
        const double q = (*this)(y).Q + 2.0 * std::log(y);
        g.push_back(std::sqrt(y) * std::expm1(q));
    }
    return fit_with_policy(ys, g);
}

IsoPoint IsothermalTables::origin_point(double y) const {
    IsoPoint p{};
    p.y = y;
    p.Q = q_series(y);
    p.dQ = dq_series(y);
    p.ddQ = ddq_series(y);
    p.eQ = std::exp(p.Q);
    p.ustar = -y - p.dQ / (2.0 * p.eQ);
    p.dustar = -1.0 - (p.ddQ - p.dQ * p.dQ) / (2.0 * p.eQ);
    p.v1 = 2.0 + y * p.dQ;
    p.dv1 = p.dQ + y * p.ddQ;
    if (y == 0.0) {
        p.v2 = -std::numeric_limits<double>::infinity();
        p.dv2 = std::numeric_limits<double>::infinity();
    } else {
        p.v2 = v2_quadrature(y);
        p.dv2 = (1.0 / (y * y) + p.v2 * p.dv1) / p.v1;
    }
    return p;
}

IsoPoint IsothermalTables::operator()(double y) const {
    if (!(y >= 0.0) || y > y_max_ * (1.0 + 1e-14)) {
        std::ostringstream os;
        os << "isothermal tables evaluated at y=" << y << " outside [0, " << y_max_ << "]";
        throw DomainError(os.str());
    }
    if (y < kLaunchY) return origin_point(y);
    const double t = std::min(std::log(y), sol_->t_end());
    double s[6];
    sol_->eval(t, s);
    IsoPoint p{};
    p.y = y;
    p.Q = s[0];
    p.dQ = s[1] / y;
    p.eQ = std::exp(p.Q);
    p.ddQ = -2.0 * p.eQ - 2.0 * p.dQ / y;
    // u* + y = -Q'/(2e^Q), written through q = Q + 2 log y to avoid cancellation at large y
    const double q = p.Q + 2.0 * std::log(y);
    p.ustar = -y * (2.0 * std::expm1(q) + (s[1] + 2.0)) / (2.0 * std::exp(q));
    p.dustar = -1.0 - (p.ddQ - p.dQ * p.dQ) / (2.0 * p.eQ);
    p.v1 = s[2];
    p.dv1 = s[3] / y;
    p.v2 = s[4];
    p.dv2 = s[5] / y;
    return p;
}

namespace {

// (d(yv')/dt - yv')/y^2 from the dense polynomial
double dense_second(const ode::DenseSolution& sol, int idx, double y) {
    double s[6], ds[6];
    sol.eval(std::log(y), s, ds);
    return (ds[idx] - s[idx]) / (y * y);
}

}  // namespace

double IsothermalTables::v1_second(double y) const { return dense_second(*sol_, 3, y); }
double IsothermalTables::v2_second(double y) const { return dense_second(*sol_, 5, y); }

double IsothermalTables::wronskian(double y) const {
    const auto p = (*this)(y);
    return p.v1 * p.dv2 - p.v2 * p.dv1;
}

double IsothermalTables::H_residual(int which, double y) const {
    if (y < kLaunchY) throw DomainError("H_residual is checked on the integrated range only");
    const auto p = (*this)(y);
    const double v = which == 1 ? p.v1 : p.v2;
    const double dv = which == 1 ? p.dv1 : p.dv2;
    const double d2v = which == 1 ? v1_second(y) : v2_second(y);
    return -(d2v + 2.0 * dv / y + 2.0 * p.eQ * v);
}

double IsothermalTables::Q_residual(double y) const {
    if (y < kLaunchY) throw DomainError("Q_residual is checked on the integrated range only");
    const auto p = (*this)(y);
    const double d2q = dense_second(*sol_, 1, y);  // (dP/dt - P)/y^2
    return d2q + 2.0 * p.dQ / y + 2.0 * p.eQ;
}

double IsothermalTables::mass_flux_residual(double y) const {
    const auto p = (*this)(y);
    const double deQ = p.eQ * p.dQ;
    const double flux = p.eQ * p.ustar;
    const double dflux = deQ * p.ustar + p.eQ * p.dustar;
    return 2.0 * p.eQ + y * deQ + dflux + 2.0 * flux / y;
}

double IsothermalTables::v2_quadrature(double y) const {
    if (!(y > 0.0)) throw DomainError("v2 is singular at the origin");
    // int 1/(v1^2 s^2) = int [1/(v1^2 s^2) - 1/(4 s^2)] + (1/4)(1/a - 1/b)
    auto reg = [this](double s) {
        // v1 = 2 + sQ'; 1/(v1^2 s^2) - 1/(4 s^2) = (2 - v1)(2 + v1)/(4 v1^2 s^2)
        const double dv = -s * (s < kLaunchY ? dq_series(s) : (*this)(s).dQ);
        const double v1 = 2.0 - dv;
        return dv * (2.0 + v1) / (4.0 * v1 * v1 * s * s);
    };
    const double v1y = y < kLaunchY ? 2.0 + y * dq_series(y) : (*this)(y).v1;
    const double a = std::min(y, kLaunchY), b = std::max(y, kLaunchY);
    const double I = gk(reg, a, b) + 0.25 * (1.0 / a - 1.0 / b);
    return y < kLaunchY ? -v1y * I : v1y * I;
}

double IsothermalTables::v1_first_zero() const {
    for (double y = 1.0; y < y_max_; y *= 1.05) {
        if ((*this)(y).v1 <= 0.0)
            return ode::solve_bracketed([this](double s) { return (*this)(s).v1; }, y / 1.05, y, 1e-14 * y);
    }
    throw NoSignChange("v1 has no zero below y_max");
}

// ---------------------------------------------------------------- ScaledIsothermal

ScaledIsothermal::ScaledIsothermal(std::shared_ptr<const IsothermalTables> t, double lambda)
    : t_(std::move(t)), lambda_(lambda) {
    if (!(lambda > 0.0)) throw DomainError("scale must be positive");
}

double ScaledIsothermal::Q(double y) const { return t_->Q(y / lambda_) - 2.0 * std::log(lambda_); }
double ScaledIsothermal::eQ(double y) const { return t_->eQ(y / lambda_) / (lambda_ * lambda_); }
double ScaledIsothermal::deQ(double y) const {
    const auto p = (*t_)(y / lambda_);
    return p.eQ * p.dQ / (lambda_ * lambda_ * lambda_);
}
double ScaledIsothermal::u(double y) const { return lambda_ * t_->ustar(y / lambda_); }
double ScaledIsothermal::du(double y) const { return (*t_)(y / lambda_).dustar; }
double ScaledIsothermal::v1(double y) const { return (*t_)(y / lambda_).v1; }
double ScaledIsothermal::v2(double y) const { return (*t_)(y / lambda_).v2; }

// ---------------------------------------------------------------- S and T

namespace {

ode::IntegratorConfig source_config() {
    ode::IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-16;
    c.max_steps = 1000000;
    return c;
}

void check_end(const IsothermalTables& t, double y_end) {
    if (!(y_end > kLaunchY) || y_end > t.y_max()) throw DomainError("source problem range outside the tables");
}

}  // namespace

SourceSolution apply_S(const IsothermalTables& t, const std::function<double(double)>& f, double y_end) {
    check_end(t, y_end);
    const double Y = kLaunchY;
    const double f0 = f(0.0);
    auto rhs = [&t, f](double tt, const double*, double* ds) {
        const double y = std::exp(tt);
        const auto p = t(y);
        const double w = y * y * y * f(y);
        ds[0] = w * p.v2;
        ds[1] = w * p.v1;
    };
    // leading behaviour of int_0^Y f v2 s^2 and int_0^Y f v1 s^2 with v2 = -(1/2)(1/s - 1/Y)
    const ode::State s0 = {-f0 * Y * Y / 12.0, 2.0 * f0 * Y * Y * Y / 3.0};
    auto sol = ode::integrate(rhs, std::log(Y), s0, std::log(y_end), source_config()).solution;
    const double fz = f0;
    SourceSolution out;
    out.y_end = y_end;
    out.value = [sol, &t, fz](double y) {
        if (y < kLaunchY) return -fz * y * y / 6.0;
        const auto ab = (*sol)(std::log(y));
        const auto p = t(y);
        return ab[0] * p.v1 - ab[1] * p.v2;
    };
    out.derivative = [sol, &t, fz](double y) {
        if (y < kLaunchY) return -fz * y / 3.0;
        const auto ab = (*sol)(std::log(y));
        const auto p = t(y);
        return ab[0] * p.dv1 - ab[1] * p.dv2;
    };
    return out;
}

SourceSolution apply_T(const IsothermalTables& t, const std::function<double(double)>& f, double y_end) {
    check_end(t, y_end);
    const double Y = kLaunchY;
    auto rhs = [f](double tt, const double*, double* ds) {
        const double y = std::exp(tt);
        ds[0] = y * y * y * f(y);
    };
    const double C0 = gk([&f](double s) { return s * s * f(s); }, 0.0, Y);
    auto sol = ode::integrate(rhs, std::log(Y), {C0}, std::log(y_end), source_config()).solution;
    SourceSolution out;
    out.y_end = y_end;
    auto C = [sol, f](double y) {
        if (y < kLaunchY) return gk([&f](double s) { return s * s * f(s); }, 0.0, y);
        return (*sol)(std::log(y))[0];
    };
    out.value = [C, &t](double y) {
        if (y == 0.0) return 0.0;
        return -C(y) / (y * y * t.eQ(y));
    };
    // (y^2 e^Q u)' = -y^2 f
    out.derivative = [C, &t, f](double y) {
        const auto p = t(y);
        if (y == 0.0) return -f(0.0) / 3.0;
        const double u = -C(y) / (y * y * p.eQ);
        return -f(y) / p.eQ - u * (2.0 / y + p.dQ);
    };
    return out;
}

double first_order_source(const IsothermalTables& t, double y) {
    if (y == 0.0) return -2.0 / 3.0;
    const auto p = t(y);
    const double Q1 = p.dQ, Q2 = p.ddQ;
    const double Q3 = -2.0 * p.eQ * Q1 - 2.0 * Q2 / y + 2.0 * Q1 / (y * y);
    const double dd = -(Q3 - 3.0 * Q1 * Q2 + Q1 * Q1 * Q1) / (2.0 * p.eQ);  // u*''
    const double g = (y + p.ustar) * p.dustar;
    const double dg = (1.0 + p.dustar) * p.dustar + (y + p.ustar) * dd;
    return dg + 2.0 * g / y;
}

FirstOrderInterior first_order_interior(const IsothermalTables& t, double y_end) {
    check_end(t, y_end);
    const double Y = kLaunchY;
    const double f0 = first_order_source(t, 0.0);
    auto rhs = [&t](double tt, const double* s, double* ds) {
        const double y = std::exp(tt);
        const auto p = t(y);
        const double f = first_order_source(t, y);
        const double y3 = y * y * y;
        ds[0] = y3 * f * p.v2;
        ds[1] = y3 * f * p.v1;
        const double w1 = s[0] * p.v1 - s[1] * p.v2;
        ds[2] = y3 * p.eQ * w1;
    };
    // w1 ~ -f0 s^2/6 near 0, so int s^2 e^Q w1 ~ -f0 Y^5/30
    const ode::State s0 = {-f0 * Y * Y / 12.0, 2.0 * f0 * Y * Y * Y / 3.0, -f0 * std::pow(Y, 5) / 30.0};
    auto sol = ode::integrate(rhs, std::log(Y), s0, std::log(y_end), source_config()).solution;
    FirstOrderInterior out;
    out.y_end = y_end;
    out.w1 = [sol, &t, f0](double y) {
        if (y < kLaunchY) return -f0 * y * y / 6.0;
        const auto s = (*sol)(std::log(y));
        const auto p = t(y);
        return s[0] * p.v1 - s[1] * p.v2;
    };
    out.u1 = [sol, &t, f0](double y) {
        if (y == 0.0) return 0.0;
        const auto p = t(y);
        double w1, C;
        if (y < kLaunchY) {
            w1 = -f0 * y * y / 6.0;
            C = -f0 * std::pow(y, 5) / 30.0;
        } else {
            const auto s = (*sol)(std::log(y));
            w1 = s[0] * p.v1 - s[1] * p.v2;
            C = s[2];
        }
        return -y * w1 + C / (y * y * p.eQ) - p.ustar * w1;
    };
    return out;
}

GrowthFit growth_exponent(const std::vector<double>& y, const std::vector<double>& g) {
    if (y.size() != g.size() || y.size() < 8) throw IllConditioned("growth_exponent needs >= 8 samples");
    double gg = 0.0;
    for (double v : g) gg += v * v;
    if (!(gg > 0.0)) throw IllConditioned("growth_exponent on a zero trace");
    auto rel = [&](double s) {
        const auto n = static_cast<Eigen::Index>(y.size());
        Eigen::MatrixXd A(n, 2);
        Eigen::VectorXd b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double lt = std::log(y[static_cast<std::size_t>(i)]);
            const double e = std::exp(s * lt);
            A(i, 0) = e * std::cos(kOmega * lt);
            A(i, 1) = e * std::sin(kOmega * lt);
            b(i) = g[static_cast<std::size_t>(i)];
        }
        const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
        return (A * c - b).squaredNorm() / gg;
    };
    const auto r = boost::math::tools::brent_find_minima(rel, 0.5, 3.5, 40);
    return {r.first, r.second};
}

}  // namespace selfsim::iso
