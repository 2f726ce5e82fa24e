#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfsim/core.hpp"
#include "selfsim/isothermal.hpp"

namespace selfsim::analysis {

/// Log-spaced sample abscissae covering every segment of the profile. A segment starting at 0
/// is sampled from 1e-6 lambda (lambda = 1 when the profile carries no scale), or from 1e-3 of
/// its right end if that is smaller.
std::vector<double> sample_grid(const RadialProfile& p, int per_decade = 400);

struct IntersectionResult {
    int count = 0;
    std::vector<double> roots;
    bool identically_zero = false;  // |y^2 rho - 1| below 1e-12 everywhere
    double tail_value = 0.0;        // y^2 rho - 1 at y_max
};

/// Sign changes of y^2 rho - 1 with a tail guard at y_max (throws TailUncertain).
IntersectionResult count_intersections(const RadialProfile& p, int per_decade = 400);

enum class SonicClass { Hunter, LarsonPenston, Unclassified };
const char* sonic_class_name(SonicClass c);

struct SonicPoint {
    double y;
    SonicClass cls;
    bool degenerate;  // y* = 1, where the branch data nearly coincide
    double D;         // (u+y)^2 - 1 at the reported root
    double dev_hunter;
    double dev_lp;
};

/// Roots of (u+y)^2 - 1, classified against both branch formulas with relative tolerance 1e-4.
std::vector<SonicPoint> count_sonic_points(const RadialProfile& p, int per_decade = 400);

struct ResidualScan {
    double max_scaled = 0.0;  // max |r_i| / (1 + |rho'| + |u'|)
    double max_relative = 0.0;  // max |r_i| / (sum of |terms| of row i)
    double y_at_max = 0.0;
};

ResidualScan residual_scan(const RadialProfile& p, int per_decade = 200);

struct NormEntry {
    std::string name;
    double value;
};

struct NormTable {
    std::vector<NormEntry> entries;
    double scale;  // epsilon y0^{-1/2} (exterior) or 1 (interior)
    double value(const std::string& name) const;
};

/// Weighted sups of the exterior remainder (rho - y^-2 - eps y^-2 p_hom)/eps and (u - eps y w_hom)/eps.
NormTable exterior_weighted_norms(const RadialProfile& ext, double epsilon, double y0, double y_max,
                                  int per_decade = 100);

/// Weighted sups of rho - e^{Q_lambda} and (u - u_lambda)/lambda^3 on [x_min lambda, y0].
/// Below x = 1e-2 the velocity deviation drops under double resolution once lambda <= 1e-4.
NormTable interior_weighted_norms(const RadialProfile& in, double lambda, double y0,
                                  const iso::IsothermalTables& tables, int per_decade = 100,
                                  double x_min = 1e-2);

struct FrequencyFit {
    double omega;
    double uncertainty;
    double amplitude;
    double phase;
    double rel_residual;
};

/// c sin(omega log y + d) with omega free; uncertainty from the residual curvature. Needs at least
/// one period of the fitted frequency in log y.
FrequencyFit frequency_check(const std::vector<double>& y, const std::vector<double>& g);

struct VelocityBounds {
    std::optional<double> exterior_min_slope;  // min (u+y)' on [y0, y_max]
    std::optional<double> interior_max_speed;  // max |u+y| on [0, y0]
};

VelocityBounds velocity_bounds(const RadialProfile& p, int per_decade = 200);

struct VerificationReport {
    ResidualScan residual;
    std::optional<IntersectionResult> intersections;
    std::string intersection_error;
    std::vector<SonicPoint> sonic_points;
    VelocityBounds velocity;
    double residual_tolerance = 1e-8;
    bool passed = false;
    std::vector<std::string> failures;
};

/// Residual, counts and velocity bounds. Passing requires the residual tolerance, a certified
/// intersection count and every sonic point classified; expected counts are checked when given.
VerificationReport verify(const RadialProfile& p, double residual_tolerance = 1e-8,
                          std::optional<int> expected_intersections = std::nullopt,
                          std::optional<int> expected_sonic = std::nullopt);

}  // namespace selfsim::analysis
