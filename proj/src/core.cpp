#include "selfsim/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "selfsim/errors.hpp"

namespace selfsim {

namespace {

void check_domain(double y, double rho) {
    if (!(y > 0.0)) {
        std::ostringstream os;
        os << "radius must be positive, got y=" << y;
        throw DomainError(os.str());
    }
    if (!(rho > 0.0)) {
        std::ostringstream os;
        os << "density must be positive, got rho=" << rho << " at y=" << y;
        throw DomainError(os.str());
    }
}

}  // namespace

double sonic_determinant(const RadialState& s) {
    const double a = s.u + s.y;
    return a * a - 1.0;
}

std::array<double, 4> coefficient_matrix(const RadialState& s) {
    const double a = s.u + s.y;
    return {a, s.rho, 1.0 / s.rho, a};
}

Derivs rhs(const RadialState& s, double sonic_guard) {
    check_domain(s.y, s.rho);
    const double a = s.u + s.y;
    const double D = a * a - 1.0;
    if (std::fabs(D) < sonic_guard) {
        std::ostringstream os;
        os << "sonic degeneracy at y=" << s.y << " (D=" << D << ")";
        throw SonicDegeneracy(os.str());
    }
    Derivs d{};
    d.drho = -(2.0 * s.rho * a / D) * (a / s.y - s.rho);
    d.du = -(2.0 * a / D) * (s.rho * a - 1.0 / s.y);
    return d;
}

POmegaState to_p_omega(const RadialState& s) {
    if (!(s.y > 0.0)) throw DomainError("to_p_omega requires y > 0");
    return {s.y, s.y * s.y * s.rho, s.u / s.y + 1.0};
}

RadialState from_p_omega(const POmegaState& s) {
    if (!(s.y > 0.0)) throw DomainError("from_p_omega requires y > 0");
    return {s.y, s.p / (s.y * s.y), s.y * (s.omega - 1.0)};
}

LogDensityState to_log_density(const RadialState& s) {
    check_domain(s.y, s.rho);
    return {s.y, std::log(s.rho), s.u};
}

RadialState from_log_density(const LogDensityState& s) { return {s.y, std::exp(s.w), s.u}; }

std::array<double, 2> p_omega_rhs(const POmegaState& s, double sonic_guard) {
    if (!(s.y > 0.0) || !(s.p > 0.0)) throw DomainError("p_omega_rhs requires y > 0, p > 0");
    const double y = s.y, p = s.p, w = s.omega;
    // [w y, p y; 1/(y p), w y] (p', w')^T = (ra, rb)^T
    const double ra = p - p * w;
    const double rb = -w * (w - 1.0) - 2.0 * (p * w - 1.0) / (y * y);
    const double D = w * w * y * y - 1.0;
    if (std::fabs(D) < sonic_guard) throw SonicDegeneracy("sonic degeneracy in (p, omega) form");
    return {(ra * w * y - p * y * rb) / D, (w * y * rb - ra / (y * p)) / D};
}

std::array<double, 2> p_omega_residual(const POmegaState& s, double dp, double domega) {
    const double y = s.y, p = s.p, w = s.omega;
    // (p w y)' - p and w (y (w - 1))' + p'/(y p) + 2 (p w - 1)/y^2
    const double e1 = dp * w * y + p * domega * y + p * w - p;
    const double e2 = w * ((w - 1.0) + y * domega) + dp / (y * p) + 2.0 * (p * w - 1.0) / (y * y);
    return {e1, e2};
}

ProfilePoint reference_solution(ReferenceKind kind, double y) {
    if (!(y > 0.0)) throw DomainError("reference solutions need y > 0");
    switch (kind) {
        case ReferenceKind::FarField:
            return {1.0 / (y * y), 0.0, -2.0 / (y * y * y), 0.0};
        case ReferenceKind::Friedman:
            return {1.0 / 3.0, -2.0 * y / 3.0, 0.0, -2.0 / 3.0};
    }
    throw DomainError("unknown reference kind");
}

// ---------------------------------------------------------------- RadialProfile

void RadialProfile::add_segment(ProfileSegment seg) {
    if (!(seg.b > seg.a)) throw DomainError("profile segment must have b > a");
    segs_.push_back(std::move(seg));
    std::sort(segs_.begin(), segs_.end(),
              [](const ProfileSegment& l, const ProfileSegment& r) { return l.a < r.a; });
}

double RadialProfile::y_min() const {
    if (segs_.empty()) throw DomainError("empty profile");
    return segs_.front().a;
}

double RadialProfile::y_max() const {
    if (segs_.empty()) throw DomainError("empty profile");
    return segs_.back().b;
}

bool RadialProfile::contains(double y) const {
    for (const auto& s : segs_)
        if (y >= s.a && y <= s.b) return true;
    return false;
}

ProfilePoint RadialProfile::operator()(double y) const {
    // the last segment whose closed interval holds y wins, so shared endpoints
    // resolve to the right-hand piece
    const ProfileSegment* hit = nullptr;
    for (const auto& s : segs_)
        if (y >= s.a && y <= s.b) hit = &s;
    if (!hit) {
        std::ostringstream os;
        os << "profile evaluated at y=" << y << " outside its domain";
        throw DomainError(os.str());
    }
    return hit->eval(y);
}

RadialProfile reference_profile(ReferenceKind kind, double y_min, double y_max) {
    RadialProfile p;
    p.add_segment({y_min, y_max, [kind](double y) { return reference_solution(kind, y); },
                   kind == ReferenceKind::FarField ? "farfield" : "friedman"});
    return p;
}

Residual residual_at(double y, const ProfilePoint& pt) {
    const double rho = pt.rho, u = pt.u, dr = pt.drho, du = pt.du;
    const double a = u + y;
    Residual r{};
    const double t1 = y * dr, t2 = 2.0 * rho, t3 = dr * u, t4 = rho * du, t5 = 2.0 * rho * u / y;
    r.r1 = t1 + t2 + t3 + t4 + t5;
    r.scale1 = std::fabs(t1) + std::fabs(t2) + std::fabs(t3) + std::fabs(t4) + std::fabs(t5);
    const double s1 = dr / rho, s2 = a * du, s3 = 2.0 * rho * a;
    r.r2 = s1 + s2 + s3;
    r.scale2 = std::fabs(s1) + std::fabs(s2) + std::fabs(s3);
    return r;
}

Residual residual(const RadialProfile& profile, double y) {
    if (!(y > 0.0)) throw DomainError("residual needs y > 0");
    return residual_at(y, profile(y));
}

ResidueDecomposition linearized_farfield_residue() {
    ResidueDecomposition d{};
    d.matrix = {-2.0, -2.0, 2.0, 1.0};
    d.trace = d.matrix[0] + d.matrix[3];
    d.det = d.matrix[0] * d.matrix[3] - d.matrix[1] * d.matrix[2];
    const double disc = d.trace * d.trace - 4.0 * d.det;  // negative
    const std::complex<double> root(0.0, std::sqrt(-disc));
    d.eig_plus = 0.5 * (d.trace + root);
    d.eig_minus = 0.5 * (d.trace - root);
    // eigenvector (1, v): first row gives m00 + m01 v = eig
    const std::complex<double> v = (d.eig_plus - d.matrix[0]) / d.matrix[1];
    double th = std::arg(v);
    if (th < 0.0) th += 2.0 * kPi;
    d.theta0 = th;
    return d;
}

}  // namespace selfsim
