#pragma once

#include <array>
#include <complex>
#include <memory>

#include "selfsim/ode.hpp"

namespace selfsim::hypergeom {

using cplx = std::complex<double>;
using Mat2 = std::array<double, 4>;  // row major

cplx complex_gamma(cplx z);

/// Principal branch of 2F1(a, b; c; x) for real x < 1.
cplx gauss_2f1(cplx a, cplx b, cplx c, double x);

/// d/dx 2F1(a, b; c; x).
cplx gauss_2f1_derivative(cplx a, cplx b, cplx c, double x);

struct HypergeomConstants {
    cplx gamma;
    double theta0;
    double mu3;
    double mu4;
    double mu5;
    double mu6;
    double c1;
    double d1;
};

HypergeomConstants build_constants();

/// gamma = 1/2 + i sqrt(7)/2
cplx gamma_const();

// Solutions of g'' + (xi-2)/(2 xi (xi-1)) g' + g/(2 xi (xi-1)) = 0 and their xi-derivatives.
struct GPair {
    double g;
    double dg;
};
GPair g1(double xi);
GPair g3(double xi);  // xi in (0, 1)
GPair g4(double xi);  // xi in (0, 1)
GPair g5(double xi);  // xi < 0
GPair g6(double xi);  // xi < 0
/// Imaginary residue left after forming g5, g6 from the conjugate pair (should vanish).
double g56_imag_residue(double xi);
double g1_second_derivative(double xi);

struct PHom {
    double p;
    double omega;
};

/// Closed-form homogeneous solution normalised by p(1)=1, p'(1)=1, omega(1)=-1.
PHom phom_eval(double z);
/// z-derivatives of the closed form.
PHom phom_derivative(double z);
/// p'' from the closed form.
double phom_second_derivative(double z);

/// Coefficient form L(p, omega) for supplied values and derivatives.
std::array<double, 2> apply_L(double z, double p, double omega, double dp, double domega);

/// Residual of p'' + (4z^2-2)/(z(z^2-1)) p' - 2/(z^2(z^2-1)) p.
double second_order_residual(double z, double p, double dp, double d2p);

/// Dense ODE solutions of L(p, omega)=0 launched from the z=1 Taylor data.
class PhomOdeSolver {
public:
    explicit PhomOdeSolver(double z_min = 0.05, double z_max = 20.0,
                           const ode::IntegratorConfig& cfg = default_config());
    PHom operator()(double z) const;
    double z_min() const { return z_min_; }
    double z_max() const { return z_max_; }
    static ode::IntegratorConfig default_config();

private:
    double z_min_, z_max_, guard_;
    std::shared_ptr<const ode::DenseSolution> inner_, outer_;
};

/// Launch offset from z = 1 on the ODE path.
inline constexpr double kPhomLaunchGuard = 1e-3;

enum class Region { ZeroSide, InfinitySide };

struct FundamentalMatrix {
    Region region;
    Mat2 U;
    Mat2 Uinv;
};

/// U_inf on (1, inf) or U_0 on (0, 1); inverse built from the Wronskian.
FundamentalMatrix fundamental_matrix(Region region, double z);

double wronskian_inf_closed(double xi);   // sqrt(1-xi)/xi
double wronskian_zero_closed(double xi);  // -(sqrt 7/4) sqrt(1-xi)/xi

Mat2 matmul(const Mat2& a, const Mat2& b);

struct ConstantsCrossCheck {
    double mu3_fit, mu4_fit, mu5_fit, mu6_fit;
    double max_delta;          // worst |fit - closed form| over the four constants
    double phom_path_delta;    // max closed-form vs ODE mismatch on [0.05, 20]
};

ConstantsCrossCheck cross_check_constants(const HypergeomConstants& k);

}  // namespace selfsim::hypergeom
