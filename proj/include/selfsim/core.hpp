#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace selfsim {

inline constexpr double kPi = 3.14159265358979323846;
/// Oscillation frequency sqrt(7)/2 shared by the exterior and interior regions.
inline const double kOmega = 0.5 * std::sqrt(7.0);
/// Phase offset arctan(sqrt(7)/3) + pi between density and velocity oscillations.
inline const double kTheta0 = std::atan(std::sqrt(7.0) / 3.0) + kPi;

inline constexpr double kDefaultSonicGuard = 1e-8;

struct RadialState {
    double y;
    double rho;
    double u;
};

struct POmegaState {
    double y;
    double p;
    double omega;
};

struct LogDensityState {
    double y;
    double w;
    double u;
};

struct Derivs {
    double drho;
    double du;
};

/// Sonic determinant (u+y)^2 - 1.
double sonic_determinant(const RadialState& s);

/// Coefficient matrix of the quasilinear system, row major.
std::array<double, 4> coefficient_matrix(const RadialState& s);

/// Solved form of the self-similar system away from the sonic set.
Derivs rhs(const RadialState& s, double sonic_guard = kDefaultSonicGuard);

POmegaState to_p_omega(const RadialState& s);
RadialState from_p_omega(const POmegaState& s);
LogDensityState to_log_density(const RadialState& s);
RadialState from_log_density(const LogDensityState& s);

/// (p', omega') from the mass/momentum system written in p, omega.
std::array<double, 2> p_omega_rhs(const POmegaState& s, double sonic_guard = kDefaultSonicGuard);

/// Residuals of the (p, omega) system for supplied derivatives.
std::array<double, 2> p_omega_residual(const POmegaState& s, double dp, double domega);

enum class ReferenceKind { FarField, Friedman };

struct ProfilePoint {
    double rho;
    double u;
    double drho;
    double du;
};

ProfilePoint reference_solution(ReferenceKind kind, double y);

/// A piece of a radial profile on [a, b] with its own evaluator.
struct ProfileSegment {
    double a;
    double b;
    std::function<ProfilePoint(double)> eval;
    std::string kind;
};

/// Sampled solution with dense evaluation and matching metadata.
class RadialProfile {
public:
    RadialProfile() = default;

    void add_segment(ProfileSegment seg);
    const std::vector<ProfileSegment>& segments() const { return segs_; }

    double y_min() const;
    double y_max() const;
    bool contains(double y) const;
    ProfilePoint operator()(double y) const;

    std::optional<double> epsilon;
    std::optional<double> lambda;
    std::optional<double> y0;
    std::optional<double> y_star;

private:
    std::vector<ProfileSegment> segs_;
};

RadialProfile reference_profile(ReferenceKind kind, double y_min, double y_max);

struct Residual {
    double r1;
    double r2;
    double scale1;  // sum of magnitudes of the terms in r1
    double scale2;
};

/// Pointwise residual of the mass equation and of the momentum row.
Residual residual(const RadialProfile& profile, double y);
Residual residual_at(double y, const ProfilePoint& pt);

struct ResidueDecomposition {
    std::array<double, 4> matrix;  // row major
    std::complex<double> eig_plus;
    std::complex<double> eig_minus;
    double trace;
    double det;
    double theta0;  // arg of the eigenvector ratio for eig_plus
};

/// Negative residue at y=0 of the linearization about the far field in (y^2 rho, u/y).
ResidueDecomposition linearized_farfield_residue();

}  // namespace selfsim
