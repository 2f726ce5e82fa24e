#pragma once

#include <vector>

#include "selfsim/core.hpp"
#include "selfsim/ode.hpp"

namespace selfsim::expansions {

enum class Branch { Hunter, LarsonPenston };

const char* branch_name(Branch b);

/// Truncated Taylor data (in y - y*) of an analytic solution through a sonic point.
struct SonicExpansion {
    Branch branch;
    double y_star;
    std::vector<double> rho;  // rho[n] multiplies (y - y*)^n
    std::vector<double> u;
    double delta;  // launch offset

    int order() const { return static_cast<int>(rho.size()) - 1; }
    ProfilePoint eval(double y) const;
};

/// Launch offset 1e-3 max(1, y*).
double default_sonic_offset(double y_star);

/// Order-by-order series at y*. Throws ResonantOrder if an order's 2x2 system is singular.
SonicExpansion sonic_expansion(double y_star, Branch branch, int order = 10, double delta = -1.0);

/// Truncated series at the origin of the system whose momentum row carries kappa
/// (kappa = 1: the physical system; kappa = lambda^2: the interior system in x = y/lambda).
struct OriginExpansion {
    double rho0;
    double kappa;
    std::vector<double> rho;
    std::vector<double> u;

    ProfilePoint eval(double y) const;
};

OriginExpansion origin_expansion(double rho0, int order = 10, double kappa = 1.0);

struct SeriesResidual {
    double low_orders;  // largest residual coefficient among the orders the recursion solved, scaled
    double tail;        // truncation residual at the point: solved orders treated as exact
    double pointwise;   // residual of the evaluated series in double arithmetic
    double scale;
};

/// Residual of the truncated sonic series at y.
SeriesResidual series_residual(const SonicExpansion& e, double y);
/// Residual of the truncated origin series at y.
SeriesResidual series_residual(const OriginExpansion& e, double y);

/// Values of the polynomial forms of the two rows at order n, for identity checks.
struct RowCoefficients {
    std::vector<double> mass;      // y(u+y)rho' + y rho u' + 2 rho (u+y)
    std::vector<double> momentum;  // rho' + kappa rho (u+y) u' + 2 rho^2 (u+y)
};
RowCoefficients row_coefficients(const SonicExpansion& e);
RowCoefficients row_coefficients(const OriginExpansion& e);

/// Derivatives of the system whose momentum row is scaled by kappa.
Derivs scaled_rhs(double y, double rho, double u, double kappa, double guard = kDefaultSonicGuard);

struct ExponentMeasurement {
    double measured;
    double expected;
    double rms;  // rms of the log-log regression
    int samples;
};

/// Separation exponent of solutions near a Hunter-type sonic point with y* in (1, 2):
/// the analytic solution and one launched from a perturbed state at y* + 0.1.
ExponentMeasurement sonic_separation_exponent(double y_star, double perturbation = 1e-9);

/// Same measurement from two caller-supplied profiles; differences d(t) - d(t/2) remove the
/// exponent-zero mode.
ExponentMeasurement sonic_separation_exponent(const RadialProfile& analytic,
                                              const RadialProfile& perturbed, double y_star,
                                              double t_min, double t_max);

/// Growth exponent of u - u_regular under inward integration from a perturbed regular state.
ExponentMeasurement origin_blowup_exponent(double rho0 = 1.0, double y_start = 0.1,
                                           double perturbation = 1e-10);

}  // namespace selfsim::expansions
