#pragma once

#include <memory>

#include "selfsim/analysis.hpp"
#include "selfsim/core.hpp"
#include "selfsim/expansions.hpp"
#include "selfsim/hypergeom.hpp"
#include "selfsim/isothermal.hpp"
#include "selfsim/ode.hpp"

namespace selfsim::matcher {

struct MatchConfig {
    ode::IntegratorConfig integrator = default_integrator();
    double y_max = 1e3;          // outer end of exterior profiles
    double x_launch = 1e-3;      // origin series launch, in the scaled coordinate
    int series_order = 10;
    double bracket_half_width = 0.1;
    double inflated_half_width = 0.5;

    static ode::IntegratorConfig default_integrator();
};

/// Far-field and ground-state constants shared by every matching solve.
class MatchContext {
public:
    explicit MatchContext(MatchConfig cfg = {});
    MatchContext(std::shared_ptr<const iso::IsothermalTables> tables, const hypergeom::HypergeomConstants& k,
                 MatchConfig cfg = {});

    const MatchConfig& config() const { return cfg_; }
    const iso::IsothermalTables& tables() const { return *tables_; }
    std::shared_ptr<const iso::IsothermalTables> tables_ptr() const { return tables_; }
    const hypergeom::HypergeomConstants& constants() const { return k_; }

    double c1() const { return k_.c1; }
    double d1() const { return k_.d1; }
    double c2() const { return c2_; }
    double d2() const { return d2_; }
    /// d2 shifted by a multiple of 2 pi so that d2 - d1 lies in (-pi, pi]; fixes the labelling of k.
    double d2_lifted() const { return d2_lift_; }

private:
    MatchConfig cfg_;
    std::shared_ptr<const iso::IsothermalTables> tables_;
    hypergeom::HypergeomConstants k_;
    double c2_, d2_, d2_lift_;
};

struct Y0Choice {
    double y0;
    int m;
    double deviation;  // |sin(omega log y0 + d1) - 1|
};

/// Admissible interface radius nearest target_scale (in log) with omega log y0 + d1 = pi/2 mod 2 pi.
Y0Choice choose_y0(double d1, double target_scale = 0.015);

struct ExteriorSolution {
    double epsilon;
    double y0;
    double y_max;
    RadialProfile profile;  // on [y0, y_max]
    expansions::SonicExpansion sonic;
    double min_slope;  // min (u+y)'
    double min_rho;
};

/// Hunter series at y* = 1 + epsilon, integrated inward to y0 and outward to y_max.
/// Throws SonicGuardHit on a second sonic crossing, VelocityBoundViolated if (u+y)' < 1/2.
ExteriorSolution exterior_solve(double epsilon, double y0, double y_max = 1e3, const MatchConfig& cfg = {});

/// (rho, u) of the exterior solution at y0 only.
RadialState exterior_trace(double epsilon, double y0, const MatchConfig& cfg = {});

struct InteriorSolution {
    double lambda;
    double y0;
    RadialProfile profile;  // on [0, y0]
    expansions::OriginExpansion origin;  // in x = y/lambda, R(0) = 1
    double max_speed;  // max |u+y|
};

/// Origin series with rho(0) = lambda^-2, integrated in x = y/lambda out to y0/lambda.
/// Throws DomainError if lambda > y0/10, BlowupBeforeY0 on a sonic crossing, OriginSeriesFailure
/// on a bad launch and VelocityBoundViolated if |u+y| > 1/2.
InteriorSolution interior_solve(double lambda, double y0, const MatchConfig& cfg = {});

/// (rho, u) of the interior solution at y0 only.
RadialState interior_trace(double lambda, double y0, const MatchConfig& cfg = {});

double predicted_epsilon(const MatchContext& ctx, double lambda);

struct EpsilonMatch {
    double epsilon;
    double predicted;
    double lo, hi;    // bracket actually used
    bool inflated;    // default bracket had no sign change
    double mismatch;  // rho_ext(y0) - rho_int(y0)
    RadialState interior;
    RadialState exterior;
};

/// Root in epsilon of rho_ext(y0) - rho_int(y0) at fixed lambda. Throws NoBracket.
EpsilonMatch match_epsilon(const MatchContext& ctx, double lambda, double y0);

struct GValue {
    double G;
    EpsilonMatch eps;
};

/// Velocity mismatch normalised by c2 (y0 lambda)^{1/2} sin(theta0).
GValue matching_G(const MatchContext& ctx, double lambda, double y0);

struct LambdaBracket {
    double lo;
    double hi;
};

LambdaBracket lambda_bracket(const MatchContext& ctx, int k, double half_width);

/// Smallest lambda whose interior deviation is resolvable in double precision at y0.
double precision_floor(const MatchContext& ctx, double y0);

struct MatchResult {
    int k;
    double lambda;
    double epsilon;
    double epsilon_predicted;
    double y_star;
    double y0;
    double G_residual;
    bool bracket_inflated;
    RadialProfile profile;
    int intersections;
    int sonic_count;
    double jump_rho;  // |rho_ext - rho_int| y0^2
    double jump_u;    // |u_ext - u_int| / y0
    double exterior_min_slope;
    double interior_max_speed;
    analysis::VerificationReport report;
};

/// k-th root of G on the exponent window, glued and counted. Throws NoBracket or PrecisionFloor.
MatchResult find_lambda_k(const MatchContext& ctx, int k, double y0);

struct LarsonPenstonResult {
    RadialProfile profile;
    double y_star;
    double rho0;
    double bracket_lo, bracket_hi;  // shooting bracket after bisection
    double junction;                // radius where the two halves meet
    double mismatch;                // max relative (rho, u) jump there
};

/// Shooting on y* in (2, 3) for the sonic solution regular at the origin. Throws NoBracket.
LarsonPenstonResult larson_penston_solve(const MatchConfig& cfg = {});

}  // namespace selfsim::matcher
