#pragma once

#include <functional>
#include <memory>

#include "selfsim/ode.hpp"

namespace selfsim::iso {

/// Inner launch radius for every origin-seeded integration; also the anchor of v2 (v2(Y0) = 0).
inline constexpr double kLaunchY = 1e-3;

/// Series of the isothermal ground state Q at the origin, through y^8.
double q_series(double y);
double dq_series(double y);

struct IsoPoint {
    double y;
    double Q, dQ, ddQ, eQ;
    double ustar, dustar;
    double v1, dv1;
    double v2, dv2;
};

struct ConstantFit {
    double c = 0.0;
    double d = 0.0;
    double rms = 0.0;
    bool corrected = false;  // the y^{-1/2} correction basis was used
};

/// Fit c sin(omega log y + d) with the window-residual policy: the corrected basis is used
/// when the plain fit leaves a residual above 1e-3 c.
ConstantFit fit_with_policy(const std::vector<double>& y, const std::vector<double>& g);

/// Q, u*, the kernel pair v1, v2 and the interior asymptotic constants.
class IsothermalTables {
public:
    static ode::IntegratorConfig default_config();
    explicit IsothermalTables(double y_max = 1e6, const ode::IntegratorConfig& cfg = default_config());

    double y_max() const { return y_max_; }
    IsoPoint operator()(double y) const;

    double Q(double y) const { return (*this)(y).Q; }
    double eQ(double y) const { return (*this)(y).eQ; }
    double ustar(double y) const { return (*this)(y).ustar; }

    /// Second derivatives from the dense polynomial of v_i' (not from the ODE).
    double v1_second(double y) const;
    double v2_second(double y) const;

    /// v1 v2' - v2 v1'
    double wronskian(double y) const;
    /// H v_i = -(v'' + 2v'/y + 2 e^Q v) with v'' from the dense polynomial.
    double H_residual(int which, double y) const;
    /// Q'' + 2Q'/y + 2e^Q with Q'' from the dense polynomial.
    double Q_residual(double y) const;
    /// (2 + y d/dy) e^Q + div(e^Q u*)
    double mass_flux_residual(double y) const;
    /// v2 from -v1 int_y^{Y0} dy'/(v1^2 y'^2); only valid before the first zero of v1.
    double v2_quadrature(double y) const;
    /// First zero of v1.
    double v1_first_zero() const;

    // fitted constants, window [1e3, y_max]
    ConstantFit density_fit;   // y^{5/2}(e^Q - y^-2) ~ c2 sin(w log y + d2)
    ConstantFit ustar_fit;     // u*/y^{1/2} ~ c2 sin(w log y + d2 + theta0)
    ConstantFit v1_fit;        // y^{1/2} v1 ~ c3 sin(w log y + d3)
    ConstantFit v2_fit;        // y^{1/2} v2 ~ c4 sin(w log y + d4)

    double c2() const { return density_fit.c; }
    double d2() const { return density_fit.d; }

    /// Density trace used for the (c2, d2) fit on [lo, hi].
    ConstantFit fit_density_window(double lo, double hi, int samples = 400) const;

private:
    std::shared_ptr<const ode::DenseSolution> sol_;  // t = log y
    double y_max_;
    IsoPoint origin_point(double y) const;
};

/// Evaluators of the rescaled ground state at scale lambda.
class ScaledIsothermal {
public:
    ScaledIsothermal(std::shared_ptr<const IsothermalTables> t, double lambda);
    double lambda() const { return lambda_; }
    double Q(double y) const;   // Q(y/lambda) - 2 log lambda
    double eQ(double y) const;  // lambda^-2 e^Q(y/lambda)
    double deQ(double y) const;
    double u(double y) const;   // lambda u*(y/lambda)
    double du(double y) const;
    double v1(double y) const;
    double v2(double y) const;
    const IsothermalTables& tables() const { return *t_; }

private:
    std::shared_ptr<const IsothermalTables> t_;
    double lambda_;
};

/// Dense solution of a source problem on [0, y_end].
struct SourceSolution {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    double y_end;
};

/// w = S(f): H w = f, regular at the origin with w(0) = 0.
SourceSolution apply_S(const IsothermalTables& t, const std::function<double(double)>& f, double y_end);

/// u = T(f) = -(1/(y^2 e^Q)) int_0^y s^2 f(s) ds.
SourceSolution apply_T(const IsothermalTables& t, const std::function<double(double)>& f, double y_end);

/// Source div((y+u*) u*') of the first-order interior correction.
double first_order_source(const IsothermalTables& t, double y);

struct FirstOrderInterior {
    std::function<double(double)> w1;
    std::function<double(double)> u1;
    double y_end;
};

/// (w1, u1): w1 = S(div((y+u*)u*')) and u1 from the linearized mass equation.
FirstOrderInterior first_order_interior(const IsothermalTables& t, double y_end);

struct GrowthFit {
    double exponent;
    double rel_residual;
};

/// Fit g ~ y^s (a cos(w log y) + b sin(w log y)) with s free (variable projection).
GrowthFit growth_exponent(const std::vector<double>& y, const std::vector<double>& g);

}  // namespace selfsim::iso
