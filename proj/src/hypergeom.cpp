#include "selfsim/hypergeom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "selfsim/core.hpp"
#include "selfsim/errors.hpp"

namespace selfsim::hypergeom {

namespace {

constexpr double kSeriesTol = 1e-17;
constexpr int kMaxTerms = 20000;
constexpr double kIntTol = 1e-14;

bool is_nonpositive_integer(cplx z) {
    if (std::fabs(z.imag()) > 0.0) return false;
    const double r = z.real();
    return r <= 0.0 && std::fabs(r - std::round(r)) < 1e-14;
}

bool near_integer(cplx z) {
    return std::fabs(z.imag()) < 1e-12 && std::fabs(z.real() - std::round(z.real())) < 1e-12;
}

// Lanczos g=7, n=9
const double kLanczos[9] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                            771.32342877765313,   -176.61502916214059,   12.507343278686905,
                            -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

cplx lanczos_gamma(cplx z) {
    // valid for Re z >= 1/2
    z -= 1.0;
    cplx x = kLanczos[0];
    for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + static_cast<double>(i));
    const cplx t = z + 7.5;
    return std::sqrt(2.0 * kPi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

/// 1/Gamma(z), zero at the poles.
cplx rgamma(cplx z) {
    if (is_nonpositive_integer(z)) return 0.0;
    return 1.0 / complex_gamma(z);
}

cplx series_2f1(cplx a, cplx b, cplx c, double x) {
    cplx term = 1.0, sum = 1.0;
    for (int n = 0; n < kMaxTerms; ++n) {
        const double dn = static_cast<double>(n);
        term *= (a + dn) * (b + dn) / ((c + dn) * (dn + 1.0)) * x;
        sum += term;
        if (std::abs(term) <= kSeriesTol * std::abs(sum) && n > 2) return sum;
        if (term == 0.0) return sum;
    }
    std::ostringstream os;
    os << "2F1 series did not converge at x=" << x;
    throw SlowConvergence(os.str());
}

// Continue F and F' along the real axis by re-expanding the hypergeometric ODE in Taylor series.
void taylor_continue(cplx a, cplx b, cplx c, double x0, cplx& F, cplx& dF, double x1) {
    double x = x0;
    while (x != x1) {
        const double dist = std::min(std::fabs(x), std::fabs(1.0 - x));
        double h = x1 - x;
        const double hmax = 0.5 * dist;
        if (std::fabs(h) > hmax) h = std::copysign(hmax, h);
        const double P0 = x * (1.0 - x), P1 = 1.0 - 2.0 * x, P2 = -1.0;
        const cplx Q0 = c - (a + b + 1.0) * x, Q1 = -(a + b + 1.0);
        const cplx ab = a * b;
        cplx cn = F, cn1 = dF;  // c_n, c_{n+1}
        cplx val = cn + cn1 * h, der = cn1;
        double hp = h;  // h^{n+1} for the current c_{n+1}
        for (int n = 0; n < kMaxTerms; ++n) {
            const double dn = static_cast<double>(n);
            const cplx cn2 = -((P1 * dn * (dn + 1.0) + Q0 * (dn + 1.0)) * cn1 +
                               (P2 * dn * (dn - 1.0) + Q1 * dn - ab) * cn) /
                             (P0 * (dn + 2.0) * (dn + 1.0));
            const cplx dv = cn2 * hp * h;
            const cplx dd = (dn + 2.0) * cn2 * hp;
            val += dv;
            der += dd;
            hp *= h;
            cn = cn1;
            cn1 = cn2;
            if (std::abs(dv) <= kSeriesTol * std::abs(val) && std::abs(dd) <= kSeriesTol * std::abs(der) &&
                n > 4)
                break;
            if (n == kMaxTerms - 1) throw SlowConvergence("2F1 Taylor continuation did not converge");
        }
        F = val;
        dF = der;
        x += h;
        if (std::fabs(x1 - x) < 1e-15 * std::max(1.0, std::fabs(x1))) x = x1;
    }
}

// 1 - x connection; requires c - a - b not an integer.
cplx one_minus_x(cplx a, cplx b, cplx c, double x) {
    const double w = 1.0 - x;
    const cplx s = c - a - b;
    const cplx A = complex_gamma(c) * complex_gamma(s) * rgamma(c - a) * rgamma(c - b);
    const cplx B = complex_gamma(c) * complex_gamma(-s) * rgamma(a) * rgamma(b);
    return A * series_2f1(a, b, 1.0 - s, w) + B * std::pow(cplx(w), s) * series_2f1(c - a, c - b, s + 1.0, w);
}

cplx eval_2f1(cplx a, cplx b, cplx c, double x) {
    if (std::fabs(x) <= 0.5) return series_2f1(a, b, c, x);
    if (x > 0.5) {
        if (!near_integer(c - a - b)) return one_minus_x(a, b, c, x);
        cplx F = series_2f1(a, b, c, 0.5);
        cplx dF = a * b / c * series_2f1(a + 1.0, b + 1.0, c + 1.0, 0.5);
        taylor_continue(a, b, c, 0.5, F, dF, x);
        return F;
    }
    if (x >= -1.0) {
        // Pfaff: argument x/(x-1) in [1/3, 1/2)
        const double xp = x / (x - 1.0);
        return std::pow(cplx(1.0 - x), -a) * series_2f1(a, c - b, c, xp);
    }
    if (!near_integer(a - b)) {
        const double xp = x / (x - 1.0);  // in (1/2, 1)
        return std::pow(cplx(1.0 - x), -a) * one_minus_x(a, c - b, c, xp);
    }
    // degenerate a - b: continue from x = -1 along the ODE
    cplx F = eval_2f1(a, b, c, -1.0);
    cplx dF = a * b / c * eval_2f1(a + 1.0, b + 1.0, c + 1.0, -1.0);
    taylor_continue(a, b, c, -1.0, F, dF, x);
    return F;
}

}  // namespace

cplx complex_gamma(cplx z) {
    if (is_nonpositive_integer(z)) {
        std::ostringstream os;
        os << "Gamma pole at z=" << z.real();
        throw PoleError(os.str());
    }
    if (z.real() < 0.5) return kPi / (std::sin(kPi * z) * lanczos_gamma(1.0 - z));
    return lanczos_gamma(z);
}

cplx gauss_2f1(cplx a, cplx b, cplx c, double x) {
    if (is_nonpositive_integer(c)) throw PoleError("2F1 undefined for c a nonpositive integer");
    if (!(x < 1.0)) throw DomainError("gauss_2f1 requires real x < 1");
    if (x == 0.0) return 1.0;
    return eval_2f1(a, b, c, x);
}

cplx gauss_2f1_derivative(cplx a, cplx b, cplx c, double x) {
    return a * b / c * gauss_2f1(a + 1.0, b + 1.0, c + 1.0, x);
}

cplx gamma_const() { return {0.5, 0.5 * std::sqrt(7.0)}; }

HypergeomConstants build_constants() {
    const cplx g = gamma_const(), gb = std::conj(g);
    HypergeomConstants k{};
    k.gamma = g;
    k.theta0 = kTheta0;
    k.mu3 = (complex_gamma(1.5) / (complex_gamma(1.0 + g / 2.0) * complex_gamma(1.0 + gb / 2.0))).real();
    k.mu4 = (-1.5 * complex_gamma(-1.5) / (complex_gamma(-g / 2.0) * complex_gamma(-gb / 2.0))).real();
    const cplx half56 = complex_gamma(1.0) * complex_gamma(-(gb - g) / 2.0) /
                        (complex_gamma(-gb / 2.0) * complex_gamma(1.0 + g / 2.0));
    k.mu5 = 2.0 * half56.real();
    k.mu6 = 2.0 * half56.imag();
    k.c1 = std::hypot(k.mu5, k.mu6);
    double d = std::atan2(k.mu5, k.mu6);
    if (d < 0.0) d += 2.0 * kPi;
    k.d1 = d;
    return k;
}

// ---------------------------------------------------------------- g functions

namespace {

cplx A1() { return -gamma_const() / 2.0; }
cplx B1() { return -std::conj(gamma_const()) / 2.0; }

}  // namespace

GPair g1(double xi) {
    const cplx a = A1(), b = B1();
    return {gauss_2f1(a, b, 1.0, xi).real(), gauss_2f1_derivative(a, b, 1.0, xi).real()};
}

double g1_second_derivative(double xi) {
    const cplx a = A1(), b = B1();
    const cplx f = a * (a + 1.0) * b * (b + 1.0) / 2.0 * gauss_2f1(a + 2.0, b + 2.0, 3.0, xi);
    return f.real();
}

GPair g3(double xi) {
    if (!(xi > 0.0 && xi < 1.0)) throw DomainError("g3 defined for xi in (0,1)");
    const cplx a = A1(), b = B1();
    const double w = 1.0 - xi;
    const cplx F = gauss_2f1(a, b, -0.5, w);
    const cplx dF = -gauss_2f1_derivative(a, b, -0.5, w);
    return {F.real(), dF.real()};
}

GPair g4(double xi) {
    if (!(xi > 0.0 && xi < 1.0)) throw DomainError("g4 defined for xi in (0,1)");
    const cplx A = 1.0 - A1(), B = 1.0 - B1();  // 1 + gamma/2, 1 + conj(gamma)/2
    const double w = 1.0 - xi;
    const cplx F = gauss_2f1(A, B, 2.5, w);
    const cplx Fp = gauss_2f1_derivative(A, B, 2.5, w);
    const double w32 = std::pow(w, 1.5);
    const double g = -(2.0 / 3.0) * w32 * F.real();
    const double dg = std::sqrt(w) * F.real() + (2.0 / 3.0) * w32 * Fp.real();
    return {g, dg};
}

namespace {

struct GaPair {
    cplx g, dg;
};

GaPair ga_eval(double xi, bool conjugate) {
    if (!(xi < 0.0)) throw DomainError("g5/g6 defined for xi < 0");
    const cplx gam = conjugate ? std::conj(gamma_const()) : gamma_const();
    const cplx al = -gam / 2.0;
    const cplx c = conjugate ? cplx(1.0, 0.5 * std::sqrt(7.0)) : cplx(1.0, -0.5 * std::sqrt(7.0));
    const double x = 1.0 / xi;
    const cplx pw = std::pow(cplx(-xi), gam / 2.0);
    const cplx F = gauss_2f1(al, al, c, x);
    const cplx Fp = gauss_2f1_derivative(al, al, c, x);
    // d/dxi (-xi)^{gam/2} = -(gam/2) (-xi)^{gam/2 - 1}
    const cplx dpw = -(gam / 2.0) * pw / cplx(-xi);
    const cplx g = pw * F;
    const cplx dg = dpw * F + pw * Fp * (-1.0 / (xi * xi));
    return {g, dg};
}

}  // namespace

GPair g5(double xi) {
    const auto a = ga_eval(xi, false), b = ga_eval(xi, true);
    const cplx g = 0.5 * (a.g + b.g), dg = 0.5 * (a.dg + b.dg);
    return {g.real(), dg.real()};
}

GPair g6(double xi) {
    const auto a = ga_eval(xi, false), b = ga_eval(xi, true);
    const cplx i(0.0, 1.0);
    const cplx g = -(a.g - b.g) / (2.0 * i), dg = -(a.dg - b.dg) / (2.0 * i);
    return {g.real(), dg.real()};
}

double g56_imag_residue(double xi) {
    const auto a = ga_eval(xi, false), b = ga_eval(xi, true);
    const cplx i(0.0, 1.0);
    const cplx g5c = 0.5 * (a.g + b.g), g6c = -(a.g - b.g) / (2.0 * i);
    return std::max(std::fabs(g5c.imag()), std::fabs(g6c.imag()));
}

// ---------------------------------------------------------------- homogeneous solution

PHom phom_eval(double z) {
    if (!(z > 0.0)) throw DomainError("phom_eval requires z > 0");
    const double xi = 1.0 - 1.0 / (z * z);
    const auto g = g1(xi);
    return {g.g, -g.g + xi * g.dg};
}

PHom phom_derivative(double z) {
    if (!(z > 0.0)) throw DomainError("phom_derivative requires z > 0");
    const double xi = 1.0 - 1.0 / (z * z);
    const double dxi = 2.0 / (z * z * z);
    const auto g = g1(xi);
    const double g2 = g1_second_derivative(xi);
    return {g.dg * dxi, xi * g2 * dxi};
}

double phom_second_derivative(double z) {
    const double xi = 1.0 - 1.0 / (z * z);
    const double dxi = 2.0 / (z * z * z);
    const double ddxi = -6.0 / (z * z * z * z);
    const auto g = g1(xi);
    return g1_second_derivative(xi) * dxi * dxi + g.dg * ddxi;
}

std::array<double, 2> apply_L(double z, double p, double omega, double dp, double domega) {
    return {z * dp + z * domega + omega,
            dp / z + z * domega + 2.0 / (z * z) * p + (2.0 / (z * z) + 1.0) * omega};
}

double second_order_residual(double z, double p, double dp, double d2p) {
    const double z2 = z * z;
    return d2p + (4.0 * z2 - 2.0) / (z * (z2 - 1.0)) * dp - 2.0 / (z2 * (z2 - 1.0)) * p;
}

namespace {

void L_standard_rhs(double z, const double* s, double* ds) {
    const double k = 1.0 / (z * (z * z - 1.0));
    const double p = s[0], w = s[1];
    ds[0] = -k * (-2.0 * p - 2.0 * w);
    ds[1] = -k * (2.0 * p + (z * z + 1.0) * w);
}

// order-8 truncation of the g1 series at xi
void launch_data(double z, double& p, double& w) {
    const cplx a = A1(), b = B1();
    const double xi = 1.0 - 1.0 / (z * z);
    cplx t = 1.0, g = 1.0, dg = 0.0;
    for (int n = 0; n < 8; ++n) {
        const double dn = static_cast<double>(n);
        t *= (a + dn) * (b + dn) / ((1.0 + dn) * (dn + 1.0));
        g += t * std::pow(xi, n + 1);
        dg += (dn + 1.0) * t * std::pow(xi, n);
    }
    p = g.real();
    w = -g.real() + xi * dg.real();
}

}  // namespace

ode::IntegratorConfig PhomOdeSolver::default_config() {
    ode::IntegratorConfig c;
    c.rel_tol = kIntTol;
    c.abs_tol = kIntTol;
    return c;
}

PhomOdeSolver::PhomOdeSolver(double z_min, double z_max, const ode::IntegratorConfig& cfg)
    : z_min_(z_min), z_max_(z_max), guard_(kPhomLaunchGuard) {
    if (!(z_min > 0.0 && z_min < 1.0 - guard_ && z_max > 1.0 + guard_))
        throw DomainError("PhomOdeSolver needs z_min < 1 < z_max");
    ode::Rhs f = L_standard_rhs;
    double p, w;
    launch_data(1.0 - guard_, p, w);
    inner_ = ode::integrate(f, 1.0 - guard_, {p, w}, z_min, cfg).solution;
    launch_data(1.0 + guard_, p, w);
    outer_ = ode::integrate(f, 1.0 + guard_, {p, w}, z_max, cfg).solution;
}

PHom PhomOdeSolver::operator()(double z) const {
    if (z >= 1.0 - guard_ && z <= 1.0 + guard_) {
        double p, w;
        launch_data(z, p, w);
        return {p, w};
    }
    const auto& sol = z < 1.0 ? inner_ : outer_;
    const auto s = (*sol)(z);
    return {s[0], s[1]};
}

// ---------------------------------------------------------------- fundamental matrices

double wronskian_inf_closed(double xi) { return std::sqrt(1.0 - xi) / xi; }

double wronskian_zero_closed(double xi) { return -0.25 * std::sqrt(7.0) * std::sqrt(1.0 - xi) / xi; }

Mat2 matmul(const Mat2& a, const Mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

FundamentalMatrix fundamental_matrix(Region region, double z) {
    FundamentalMatrix fm{};
    fm.region = region;
    const double xi = 1.0 - 1.0 / (z * z);
    GPair c1, c2;
    double W;
    if (region == Region::InfinitySide) {
        if (!(z > 1.0)) throw DomainError("U_inf defined for z > 1");
        c1 = g3(xi);
        c2 = g4(xi);
        W = wronskian_inf_closed(xi);
    } else {
        if (!(z > 0.0 && z < 1.0)) throw DomainError("U_0 defined for z in (0,1)");
        c1 = g5(xi);
        c2 = g6(xi);
        W = wronskian_zero_closed(xi);
    }
    const Mat2 V = {c1.g, c2.g, c1.dg, c2.dg};
    const Mat2 M = {1.0, 0.0, -1.0, xi};
    const Mat2 Vinv = {c2.dg / W, -c2.g / W, -c1.dg / W, c1.g / W};
    const Mat2 Minv = {1.0, 0.0, 1.0 / xi, 1.0 / xi};
    fm.U = matmul(M, V);
    fm.Uinv = matmul(Vinv, Minv);
    return fm;
}

ConstantsCrossCheck cross_check_constants(const HypergeomConstants& k) {
    ConstantsCrossCheck out{};
    PhomOdeSolver ode_path(0.05, 20.0);
    auto fit = [&](Region region, const std::vector<double>& zs, double& m1, double& m2) {
        Eigen::MatrixXd A(2 * static_cast<Eigen::Index>(zs.size()), 2);
        Eigen::VectorXd r(2 * static_cast<Eigen::Index>(zs.size()));
        for (std::size_t i = 0; i < zs.size(); ++i) {
            const auto fm = fundamental_matrix(region, zs[i]);
            const auto v = ode_path(zs[i]);
            const auto j = 2 * static_cast<Eigen::Index>(i);
            A(j, 0) = fm.U[0];
            A(j, 1) = fm.U[1];
            A(j + 1, 0) = fm.U[2];
            A(j + 1, 1) = fm.U[3];
            r(j) = v.p;
            r(j + 1) = v.omega;
        }
        Eigen::Vector2d c = A.colPivHouseholderQr().solve(r);
        m1 = c(0);
        m2 = c(1);
    };
    std::vector<double> z_inf, z_zero;
    for (int i = 0; i < 24; ++i) z_inf.push_back(1.5 * std::pow(20.0 / 1.5, i / 23.0));
    for (int i = 0; i < 24; ++i) z_zero.push_back(0.05 * std::pow(0.6 / 0.05, i / 23.0));
    fit(Region::InfinitySide, z_inf, out.mu3_fit, out.mu4_fit);
    fit(Region::ZeroSide, z_zero, out.mu5_fit, out.mu6_fit);
    out.max_delta = std::max({std::fabs(out.mu3_fit - k.mu3), std::fabs(out.mu4_fit - k.mu4),
                              std::fabs(out.mu5_fit - k.mu5), std::fabs(out.mu6_fit - k.mu6)});
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double z = 0.05 * std::pow(20.0 / 0.05, i / 400.0);
        const auto a = phom_eval(z), b = ode_path(z);
        worst = std::max({worst, std::fabs(a.p - b.p), std::fabs(a.omega - b.omega)});
    }
    out.phom_path_delta = worst;
    return out;
}

}  // namespace selfsim::hypergeom
