#include "selfsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <Eigen/Dense>

#include "selfsim/errors.hpp"
#include "selfsim/hypergeom.hpp"
#include "selfsim/ode.hpp"

namespace selfsim::analysis {

namespace {

void append_log(std::vector<double>& g, double a, double b, int per_decade) {
    const int n = std::max(8, static_cast<int>(std::ceil(per_decade * std::log10(b / a))));
    for (int i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, i / double(n)));
    g.push_back(b);
}

double bracket_root(const std::function<double(double)>& f, double a, double b) {
    return ode::solve_bracketed(f, a, b, 1e-13 * std::max(1.0, std::fabs(b)));
}

}  // namespace

std::vector<double> sample_grid(const RadialProfile& p, int per_decade) {
    std::vector<double> g;
    for (const auto& s : p.segments()) {
        double a = s.a;
        if (!(a > 0.0)) a = std::min(1e-6 * p.lambda.value_or(1.0), 1e-3 * s.b);
        if (a < s.b) append_log(g, a, s.b, per_decade);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

IntersectionResult count_intersections(const RadialProfile& p, int per_decade) {
    const auto grid = sample_grid(p, per_decade);
    auto f = [&p](double y) { return y * y * p(y).rho - 1.0; };
    IntersectionResult out;
    std::vector<double> fv(grid.size());
    double fmax = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        fv[i] = f(grid[i]);
        fmax = std::max(fmax, std::fabs(fv[i]));
    }
    out.tail_value = fv.back();
    if (fmax <= 1e-12) {
        out.identically_zero = true;
        return out;
    }
    std::size_t last = grid.size();  // index of the last nonzero sample
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (fv[i] == 0.0) continue;
        if (last < grid.size() && (fv[last] > 0.0) != (fv[i] > 0.0)) {
            out.roots.push_back(bracket_root(f, grid[last], grid[i]));
        }
        last = i;
    }
    out.count = static_cast<int>(out.roots.size());

    // tail guard: either the trace moves away from zero, or what is left of a decaying tail
    // (about y f') cannot reach zero
    const double ym = grid.back();
    const auto pt = p(ym);
    const double fe = ym * ym * pt.rho - 1.0;
    const double yfp = ym * (2.0 * ym * pt.rho + ym * ym * pt.drho);
    const double ya = ym / 10.0;
    const auto pa = p(std::max(ya, p.y_min()));
    const double fa = ya * ya * pa.rho - 1.0;
    const double yfpa = ya * (2.0 * ya * pa.rho + ya * ya * pa.drho);
    const bool same_sign = (fe > 0.0) == (fa > 0.0);
    const bool receding = fe * yfp > 0.0;
    const bool decaying = std::fabs(fe) > 2.0 * std::fabs(yfp) && std::fabs(yfp) <= std::fabs(yfpa);
    if (!same_sign || !(receding || decaying)) {
        std::ostringstream os;
        os << "intersection tail not certified at y=" << ym << " (y^2 rho - 1 = " << fe << ", y f' = " << yfp
           << "); extend y_max";
        throw TailUncertain(os.str());
    }
    return out;
}

const char* sonic_class_name(SonicClass c) {
    switch (c) {
        case SonicClass::Hunter:
            return "Hunter";
        case SonicClass::LarsonPenston:
            return "LarsonPenston";
        default:
            return "Unclassified";
    }
}

std::vector<SonicPoint> count_sonic_points(const RadialProfile& p, int per_decade) {
    const auto grid = sample_grid(p, per_decade);
    auto D = [&p](double y) {
        const auto pt = p(y);
        const double a = pt.u + y;
        return a * a - 1.0;
    };
    std::vector<SonicPoint> out;
    double prev = D(grid.front());
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = D(grid[i]);
        if (cur == 0.0 || (prev != 0.0 && (prev > 0.0) != (cur > 0.0))) {
            const double ys = cur == 0.0 ? grid[i] : bracket_root(D, grid[i - 1], grid[i]);
            const auto pt = p(ys);
            SonicPoint sp{};
            sp.y = ys;
            sp.D = D(ys);
            sp.degenerate = std::fabs(ys - 1.0) < 1e-9;
            const double r0 = 1.0 / ys;
            const double dh = 1.0 / ys - 3.0 / (ys * ys), dl = -1.0 / (ys * ys);
            const double vdev = std::fabs(pt.rho - r0) / r0;
            sp.dev_hunter = std::max(vdev, std::fabs(pt.drho - dh) / std::max(std::fabs(dh), 1.0 / (ys * ys)));
            sp.dev_lp = std::max(vdev, std::fabs(pt.drho - dl) / std::max(std::fabs(dl), 1.0 / (ys * ys)));
            const bool forward = pt.u + ys > 0.0;
            if (forward && sp.dev_hunter <= 1e-4 && sp.dev_hunter <= sp.dev_lp)
                sp.cls = SonicClass::Hunter;
            else if (forward && sp.dev_lp <= 1e-4)
                sp.cls = SonicClass::LarsonPenston;
            else
                sp.cls = SonicClass::Unclassified;
            out.push_back(sp);
            if (cur == 0.0) ++i;
            prev = i < grid.size() ? D(grid[i]) : cur;
            continue;
        }
        prev = cur;
    }
    return out;
}

ResidualScan residual_scan(const RadialProfile& p, int per_decade) {
    ResidualScan out;
    for (double y : sample_grid(p, per_decade)) {
        const auto pt = p(y);
        const auto r = residual_at(y, pt);
        const double scaled = std::max(std::fabs(r.r1), std::fabs(r.r2)) / (1.0 + std::fabs(pt.drho) + std::fabs(pt.du));
        const double rel = std::max(r.scale1 > 0.0 ? std::fabs(r.r1) / r.scale1 : 0.0,
                                    r.scale2 > 0.0 ? std::fabs(r.r2) / r.scale2 : 0.0);
        if (scaled > out.max_scaled) {
            out.max_scaled = scaled;
            out.y_at_max = y;
        }
        out.max_relative = std::max(out.max_relative, rel);
    }
    return out;
}

double NormTable::value(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return e.value;
    throw DomainError("no norm entry named " + name);
}

NormTable exterior_weighted_norms(const RadialProfile& ext, double epsilon, double y0, double y_max,
                                  int per_decade) {
    if (epsilon == 0.0) {
        // the remainder is defined through division by epsilon; at epsilon = 0 the exterior is the
        // far field and every entry is reported from the undivided deviation
        NormTable t{{}, 0.0};
        double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
        std::vector<double> g;
        append_log(g, y0, y_max, per_decade);
        for (double y : g) {
            const auto pt = ext(y);
            a = std::max(a, std::fabs(pt.rho - 1.0 / (y * y)) * y * y);
            b = std::max(b, std::fabs(pt.u));
            c = std::max(c, std::fabs(pt.drho + 2.0 / (y * y * y)) * y * y * y);
            d = std::max(d, std::fabs(pt.du) * y);
        }
        t.entries = {{"rho", a}, {"u", b}, {"drho", c}, {"du", d}};
        return t;
    }
    std::vector<double> g;
    append_log(g, y0, y_max, per_decade);
    double in[4] = {0, 0, 0, 0}, out[4] = {0, 0, 0, 0};
    for (double y : g) {
        const auto pt = ext(y);
        const auto h = hypergeom::phom_eval(y);
        const auto dh = hypergeom::phom_derivative(y);
        const double y2 = y * y, y3 = y2 * y;
        const double r = (pt.rho - 1.0 / y2 - epsilon * h.p / y2) / epsilon;
        const double dr = (pt.drho + 2.0 / y3 - epsilon * (dh.p / y2 - 2.0 * h.p / y3)) / epsilon;
        const double u = (pt.u - epsilon * y * h.omega) / epsilon;
        const double du = (pt.du - epsilon * (h.omega + y * dh.omega)) / epsilon;
        if (y <= 1.0) {
            in[0] = std::max(in[0], std::pow(y, 2.5) * std::fabs(r));
            in[1] = std::max(in[1], std::fabs(u) / std::sqrt(y));
            in[2] = std::max(in[2], std::pow(y, 3.5) * std::fabs(dr));
            in[3] = std::max(in[3], std::sqrt(y) * std::fabs(du));
        }
        if (y >= 1.0) {
            out[0] = std::max(out[0], y2 * std::fabs(r));
            out[1] = std::max(out[1], std::fabs(u));
            out[2] = std::max(out[2], y3 * std::fabs(dr));
            out[3] = std::max(out[3], y * std::fabs(du));
        }
    }
    NormTable t;
    t.scale = epsilon / std::sqrt(y0);
    t.entries = {{"inner_rho", in[0]}, {"inner_u", in[1]}, {"inner_drho", in[2]}, {"inner_du", in[3]},
                 {"outer_rho", out[0]}, {"outer_u", out[1]}, {"outer_drho", out[2]}, {"outer_du", out[3]}};
    return t;
}

NormTable interior_weighted_norms(const RadialProfile& in, double lambda, double y0,
                                  const iso::IsothermalTables& tables, int per_decade, double x_min) {
    std::vector<double> g;
    append_log(g, x_min * lambda, y0, per_decade);
    double e[4] = {0, 0, 0, 0};
    const double l3 = lambda * lambda * lambda;
    for (double y : g) {
        const double x = y / lambda;
        const auto pt = in(y);
        const auto q = tables(x);
        const double jx = std::sqrt(1.0 + x * x);
        const double eQl = q.eQ / (lambda * lambda);
        const double deQl = q.eQ * q.dQ / l3;
        const double r = pt.rho - eQl;
        const double dr = pt.drho - deQl;
        const double u = (pt.u - lambda * q.ustar) / l3;
        const double du = (pt.du - q.dustar) / l3;
        e[0] = std::max(e[0], std::fabs(r) / (x * std::pow(jx, -1.5)));
        e[1] = std::max(e[1], std::fabs(u) / (x * x * std::sqrt(jx)));
        e[2] = std::max(e[2], std::fabs(dr) / (std::pow(jx, -1.5) / lambda));
        e[3] = std::max(e[3], std::fabs(du) / (x / lambda * jx));
    }
    NormTable t;
    t.scale = 1.0;
    t.entries = {{"rho", e[0]}, {"u", e[1]}, {"drho", e[2]}, {"du", e[3]}};
    return t;
}

namespace {

double projected_rss(const std::vector<double>& y, const std::vector<double>& g, double omega,
                     double* amp = nullptr, double* phase = nullptr) {
    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ph = omega * std::log(y[static_cast<std::size_t>(i)]);
        A(i, 0) = std::cos(ph);
        A(i, 1) = std::sin(ph);
        b(i) = g[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    if (amp) *amp = std::hypot(c(0), c(1));
    if (phase) {
        double d = std::atan2(c(0), c(1));
        if (d < 0.0) d += 2.0 * kPi;
        *phase = d;
    }
    return (A * c - b).squaredNorm();
}

}  // namespace

FrequencyFit frequency_check(const std::vector<double>& y, const std::vector<double>& g) {
    if (y.size() != g.size() || y.size() < 16) throw IllConditioned("frequency_check needs >= 16 samples");
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    const double span = std::log(*mx / *mn);
    double gg = 0.0;
    for (double v : g) gg += v * v;
    // coarse scan then Brent polish
    double best = 0.0, best_rss = 1e300;
    for (int i = 0; i <= 400; ++i) {
        const double w = 0.25 + 3.75 * i / 400.0;
        const double r = projected_rss(y, g, w);
        if (r < best_rss) {
            best_rss = r;
            best = w;
        }
    }
    const double step = 3.75 / 400.0;
    auto rss = [&](double w) { return projected_rss(y, g, w); };
    const auto m = boost::math::tools::brent_find_minima(rss, best - step, best + step, 50);
    FrequencyFit f{};
    f.omega = m.first;
    // the criterion window [1e3, 1e6] holds about 1.45 periods
    if (span * f.omega < 2.0 * kPi) throw IllConditioned("frequency_check needs at least one period in log y");
    projected_rss(y, g, f.omega, &f.amplitude, &f.phase);
    f.rel_residual = std::sqrt(m.second / gg);
    const double h = 1e-4;
    const double curv = (rss(f.omega + h) - 2.0 * m.second + rss(f.omega - h)) / (h * h);
    const double sigma2 = m.second / static_cast<double>(y.size() - 3);
    f.uncertainty = curv > 0.0 ? std::sqrt(2.0 * sigma2 / curv) : std::numeric_limits<double>::infinity();
    return f;
}

VelocityBounds velocity_bounds(const RadialProfile& p, int per_decade) {
    VelocityBounds vb;
    if (!p.y0) return vb;
    const double y0 = *p.y0;
    double smin = 1e300, amax = 0.0;
    bool ext = false, in = false;
    for (double y : sample_grid(p, per_decade)) {
        const auto pt = p(y);
        if (y >= y0) {
            smin = std::min(smin, pt.du + 1.0);
            ext = true;
        }
        if (y <= y0) {
            amax = std::max(amax, std::fabs(pt.u + y));
            in = true;
        }
    }
    if (ext) vb.exterior_min_slope = smin;
    if (in) vb.interior_max_speed = amax;
    return vb;
}

VerificationReport verify(const RadialProfile& p, double residual_tolerance,
                          std::optional<int> expected_intersections, std::optional<int> expected_sonic) {
    VerificationReport r;
    r.residual_tolerance = residual_tolerance;
    r.residual = residual_scan(p);
    if (!(r.residual.max_scaled <= residual_tolerance)) {
        std::ostringstream os;
        os << "residual " << r.residual.max_scaled << " above " << residual_tolerance << " at y=" << r.residual.y_at_max;
        r.failures.push_back(os.str());
    }
    try {
        r.intersections = count_intersections(p);
        if (expected_intersections && r.intersections->count != *expected_intersections)
            r.failures.push_back("intersection count " + std::to_string(r.intersections->count) + " expected " +
                                 std::to_string(*expected_intersections));
    } catch (const TailUncertain& e) {
        r.intersection_error = e.what();
        r.failures.push_back(e.what());
    }
    r.sonic_points = count_sonic_points(p);
    for (const auto& s : r.sonic_points)
        if (s.cls == SonicClass::Unclassified) {
            std::ostringstream os;
            os << "unclassified sonic point at y=" << s.y;
            r.failures.push_back(os.str());
        }
    if (expected_sonic && static_cast<int>(r.sonic_points.size()) != *expected_sonic)
        r.failures.push_back("sonic point count " + std::to_string(r.sonic_points.size()) + " expected " +
                             std::to_string(*expected_sonic));
    r.velocity = velocity_bounds(p);
    if (r.velocity.exterior_min_slope && *r.velocity.exterior_min_slope < 0.5)
        r.failures.push_back("exterior (u+y)' below 1/2");
    if (r.velocity.interior_max_speed && *r.velocity.interior_max_speed > 0.5)
        r.failures.push_back("interior |u+y| above 1/2");
    r.passed = r.failures.empty();
    return r;
}

}  // namespace selfsim::analysis
