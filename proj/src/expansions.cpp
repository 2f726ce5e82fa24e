#include "selfsim/expansions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "selfsim/errors.hpp"

namespace selfsim::expansions {

namespace {

using Poly = std::vector<double>;

Poly mul(const Poly& a, const Poly& b, std::size_t n) {
    Poly c(n, 0.0);
    for (std::size_t i = 0; i < std::min(n, a.size()); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j + i < n && j < b.size(); ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

Poly der(const Poly& a) {
    Poly d(a.size(), 0.0);
    for (std::size_t i = 1; i < a.size(); ++i) d[i - 1] = a[i] * static_cast<double>(i);
    return d;
}

// Residual polynomials in t = y - center of the two rows, truncated to n terms.
void row_polys(const Poly& r, const Poly& s, double center, double kappa, std::size_t n, Poly& P1, Poly& P2) {
    Poly y(n, 0.0);
    y[0] = center;
    if (n > 1) y[1] = 1.0;
    Poly a = s;
    a.resize(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i] += y[i];
    Poly rr = r, ss = s;
    rr.resize(n, 0.0);
    ss.resize(n, 0.0);
    const Poly rp = der(rr), sp = der(ss);
    const Poly ya = mul(y, a, n), yr = mul(y, rr, n), ra = mul(rr, a, n);
    const Poly t1 = mul(ya, rp, n), t2 = mul(yr, sp, n);
    const Poly t3 = mul(ra, sp, n), t4 = mul(rr, ra, n);
    P1.assign(n, 0.0);
    P2.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        P1[i] = t1[i] + t2[i] + 2.0 * ra[i];
        P2[i] = rp[i] + kappa * t3[i] + 2.0 * t4[i];
    }
}

// Fill order m by solving the 2x2 linear system eqs(x) = 0; eqs is affine in (r[m], s[m]).
template <class Eqs>
void solve_order(Poly& r, Poly& s, std::size_t m, double y_star, Eqs eqs) {
    r[m] = 0.0;
    s[m] = 0.0;
    const auto e0 = eqs(r, s);
    r[m] = 1.0;
    const auto er = eqs(r, s);
    r[m] = 0.0;
    s[m] = 1.0;
    const auto es = eqs(r, s);
    s[m] = 0.0;
    Eigen::Matrix2d J;
    J << er[0] - e0[0], es[0] - e0[0], er[1] - e0[1], es[1] - e0[1];
    const double det = J.determinant();
    const double scale = J.cwiseAbs().rowwise().sum().prod();
    if (!(std::fabs(det) > 1e-12 * scale)) throw ResonantOrder(static_cast<int>(m), y_star);
    const Eigen::Vector2d x = J.partialPivLu().solve(Eigen::Vector2d(-e0[0], -e0[1]));
    r[m] = x(0);
    s[m] = x(1);
}

ProfilePoint horner(const Poly& r, const Poly& s, double t) {
    ProfilePoint p{0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = r.size(); i-- > 0;) {
        p.drho = p.drho * t + p.rho;
        p.rho = p.rho * t + r[i];
        p.du = p.du * t + p.u;
        p.u = p.u * t + s[i];
    }
    return p;
}

double eval_poly(const Poly& p, double t, std::size_t from) {
    double v = 0.0;
    for (std::size_t i = p.size(); i-- > from;) v = v * t + p[i];
    for (std::size_t i = 0; i < from; ++i) v *= t;
    return v;
}

}  // namespace

const char* branch_name(Branch b) { return b == Branch::Hunter ? "Hunter" : "LarsonPenston"; }

double default_sonic_offset(double y_star) { return 1e-3 * std::max(1.0, y_star); }

SonicExpansion sonic_expansion(double y_star, Branch branch, int order, double delta) {
    if (!(y_star > 0.0)) throw DomainError("sonic point must be positive");
    if (order < 4) throw DomainError("sonic series order must be at least 4");
    const std::size_t M = static_cast<std::size_t>(order), n = M + 2;
    Poly r(n, 0.0), s(n, 0.0);
    r[0] = 1.0 / y_star;
    s[0] = 1.0 - y_star;
    if (branch == Branch::Hunter) {
        r[1] = 1.0 / y_star - 3.0 / (y_star * y_star);
        s[1] = 1.0 / y_star - 1.0;
    } else {
        r[1] = -1.0 / (y_star * y_star);
        s[1] = -1.0 / y_star;
    }
    for (std::size_t m = 2; m <= M; ++m) {
        solve_order(r, s, m, y_star, [&](const Poly& rr, const Poly& ss) {
            Poly P1, P2;
            row_polys(rr, ss, y_star, 1.0, n, P1, P2);
            // left null vector (1, -y*) of the coefficient matrix at the sonic point
            return std::array<double, 2>{P1[m] - y_star * P2[m], P1[m - 1]};
        });
    }
    r.resize(M + 1);
    s.resize(M + 1);
    return {branch, y_star, r, s, delta > 0.0 ? delta : default_sonic_offset(y_star)};
}

ProfilePoint SonicExpansion::eval(double y) const { return horner(rho, u, y - y_star); }

OriginExpansion origin_expansion(double rho0, int order, double kappa) {
    if (!(rho0 > 0.0)) throw DomainError("central density must be positive");
    if (order < 2) throw DomainError("origin series order must be at least 2");
    const std::size_t M = static_cast<std::size_t>(order), n = M + 2;
    Poly r(n, 0.0), s(n, 0.0);
    r[0] = rho0;
    for (std::size_t m = 1; m <= M; ++m) {
        solve_order(r, s, m, 0.0, [&](const Poly& rr, const Poly& ss) {
            Poly P1, P2;
            row_polys(rr, ss, 0.0, kappa, n, P1, P2);
            return std::array<double, 2>{P2[m - 1], P1[m]};
        });
    }
    r.resize(M + 1);
    s.resize(M + 1);
    return {rho0, kappa, r, s};
}

ProfilePoint OriginExpansion::eval(double y) const { return horner(rho, u, y); }

namespace {

SeriesResidual residual_impl(const Poly& r, const Poly& s, double center, double kappa, double y,
                             std::size_t solved_through) {
    const std::size_t n = 2 * r.size() + 2;
    Poly P1, P2;
    row_polys(r, s, center, kappa, n, P1, P2);
    const auto pt = horner(r, s, y - center);
    const double a = pt.u + y;
    SeriesResidual out{};
    out.scale = std::fabs(y * a * pt.drho) + std::fabs(y * pt.rho * pt.du) + std::fabs(2.0 * pt.rho * a) +
                std::fabs(pt.drho) + std::fabs(kappa * pt.rho * a * pt.du) + std::fabs(2.0 * pt.rho * pt.rho * a);
    double coef_scale = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) coef_scale = std::max({coef_scale, std::fabs(r[i]), std::fabs(s[i])});
    double low = 0.0;
    for (std::size_t i = 0; i < solved_through; ++i) low = std::max({low, std::fabs(P1[i]), std::fabs(P2[i])});
    out.low_orders = low / std::max(1.0, coef_scale);
    const double t = y - center;
    out.tail = std::hypot(eval_poly(P1, t, solved_through), eval_poly(P2, t, solved_through)) / out.scale;
    const double m1 = y * a * pt.drho + y * pt.rho * pt.du + 2.0 * pt.rho * a;
    const double m2 = pt.drho + kappa * pt.rho * a * pt.du + 2.0 * pt.rho * pt.rho * a;
    out.pointwise = std::hypot(m1, m2) / out.scale;
    return out;
}

}  // namespace

SeriesResidual series_residual(const SonicExpansion& e, double y) {
    // both rows vanish through order M-1
    return residual_impl(e.rho, e.u, e.y_star, 1.0, y, e.rho.size() - 1);
}

SeriesResidual series_residual(const OriginExpansion& e, double y) {
    // the momentum row vanishes through order M-1, the mass row through M
    return residual_impl(e.rho, e.u, 0.0, e.kappa, y, e.rho.size() - 1);
}

RowCoefficients row_coefficients(const SonicExpansion& e) {
    RowCoefficients c;
    row_polys(e.rho, e.u, e.y_star, 1.0, e.rho.size(), c.mass, c.momentum);
    return c;
}

RowCoefficients row_coefficients(const OriginExpansion& e) {
    RowCoefficients c;
    row_polys(e.rho, e.u, 0.0, e.kappa, e.rho.size(), c.mass, c.momentum);
    return c;
}

Derivs scaled_rhs(double y, double rho, double u, double kappa, double guard) {
    if (!(y > 0.0) || !(rho > 0.0)) throw DomainError("scaled_rhs needs y > 0 and rho > 0");
    const double a = u + y;
    const double D = kappa * a * a - 1.0;
    if (std::fabs(D) < guard) throw SonicDegeneracy("sonic degeneracy in the scaled system");
    const double b1 = -2.0 * rho * a / y, b2 = -2.0 * rho * a;
    return {(kappa * a * b1 - rho * b2) / D, (a * b2 - b1 / rho) / D};
}

// ---------------------------------------------------------------- Frobenius measurements

namespace {

ode::IntegratorConfig tight() {
    ode::IntegratorConfig c;
    c.rel_tol = 1e-13;
    c.abs_tol = 1e-16;
    c.max_steps = 1000000;
    return c;
}

void system_rhs(double y, const double* s, double* ds) {
    const auto d = rhs({y, s[0], s[1]});
    ds[0] = d.drho;
    ds[1] = d.du;
}

ExponentMeasurement regress(const std::vector<double>& x, const std::vector<double>& g, double expected) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = std::log(x[static_cast<std::size_t>(i)]);
        b(i) = std::log(g[static_cast<std::size_t>(i)]);
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    const double rms = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(n));
    return {c(1), expected, rms, static_cast<int>(n)};
}

RadialProfile dense_profile(std::shared_ptr<const ode::DenseSolution> sol, const std::string& kind) {
    RadialProfile p;
    const double a = std::min(sol->t_begin(), sol->t_end()), b = std::max(sol->t_begin(), sol->t_end());
    p.add_segment({a, b,
                   [sol](double y) {
                       double s[2];
                       sol->eval(y, s);
                       const auto d = rhs({y, s[0], s[1]});
                       return ProfilePoint{s[0], s[1], d.drho, d.du};
                   },
                   kind});
    return p;
}

}  // namespace

ExponentMeasurement sonic_separation_exponent(const RadialProfile& analytic, const RadialProfile& perturbed,
                                              double y_star, double t_min, double t_max) {
    if (std::fabs(y_star - 1.0) < 1e-12)
        throw DegenerateExponent("sonic exponents {0, y*-1} coincide at y* = 1");
    std::vector<double> ts, gs;
    const double floor = 1e-14;
    for (int i = 0; i <= 60; ++i) {
        const double t = t_min * std::pow(t_max / t_min, i / 60.0);
        const double d1 = perturbed(y_star + t).rho - analytic(y_star + t).rho;
        const double d2 = perturbed(y_star + 0.5 * t).rho - analytic(y_star + 0.5 * t).rho;
        const double g = std::fabs(d1 - d2);
        if (g > floor) {
            ts.push_back(t);
            gs.push_back(g);
        }
    }
    if (ts.size() < 10) throw InsufficientSeparation("separation of the two solutions is below round-off");
    return regress(ts, gs, y_star - 1.0);
}

ExponentMeasurement sonic_separation_exponent(double y_star, double perturbation) {
    if (std::fabs(y_star - 1.0) < 1e-12)
        throw DegenerateExponent("sonic exponents {0, y*-1} coincide at y* = 1");
    if (!(y_star > 1.0 && y_star < 2.0))
        throw DomainError("separation exponent measured for Hunter sonic points in (1, 2)");
    const auto ex = sonic_expansion(y_star, Branch::Hunter);
    const double d = ex.delta, far = 0.1;
    const auto l = ex.eval(y_star + d);
    auto ref = ode::integrate(system_rhs, y_star + d, {l.rho, l.u}, y_star + far, tight()).solution;
    RadialProfile analytic;
    analytic.add_segment({y_star, y_star + d, [ex](double y) { return ex.eval(y); }, "series"});
    analytic.add_segment(dense_profile(ref, "outer").segments().front());
    const auto s0 = (*ref)(y_star + far);
    const double t_stop = 4e-7;
    auto pert = ode::integrate(system_rhs, y_star + far, {s0[0] * (1.0 + perturbation), s0[1]},
                               y_star + t_stop, tight())
                    .solution;
    const auto perturbed = dense_profile(pert, "perturbed");
    return sonic_separation_exponent(analytic, perturbed, y_star, 1e-6, 1e-3);
}

ExponentMeasurement origin_blowup_exponent(double rho0, double y_start, double perturbation) {
    const auto ex = origin_expansion(rho0, 10, 1.0);
    const double y_launch = 1e-3;
    const auto l = ex.eval(y_launch);
    auto ref = ode::integrate(system_rhs, y_launch, {l.rho, l.u}, y_start, tight()).solution;
    const auto s0 = (*ref)(y_start);
    auto pert = ode::integrate(system_rhs, y_start, {s0[0], s0[1] + perturbation}, y_launch, tight()).solution;
    std::vector<double> ys, gs;
    for (int i = 0; i <= 40; ++i) {
        const double y = 2e-3 * std::pow(10.0, i / 40.0);
        const double g = std::fabs((*pert)(y)[1] - (*ref)(y)[1]);
        if (g > 0.0) {
            ys.push_back(y);
            gs.push_back(g);
        }
    }
    if (ys.size() < 10) throw InsufficientSeparation("no measurable velocity deviation");
    return regress(ys, gs, -2.0);
}

}  // namespace selfsim::expansions
