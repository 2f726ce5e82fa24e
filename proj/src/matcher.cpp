#include "selfsim/matcher.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "selfsim/errors.hpp"

namespace selfsim::matcher {

namespace {

using expansions::Branch;

// State (W, V) = (log R, U/x) in t = log x for the system whose momentum row carries kappa.
ode::Rhs log_rhs(double kappa) {
    return [kappa](double t, const double* s, double* ds) {
        const double x = std::exp(t);
        const double R = std::exp(s[0]), U = s[1] * x, a = U + x;
        const double D = kappa * a * a - 1.0;
        const double b1 = -2.0 * R * a / x, b2 = -2.0 * R * a;
        const double Rp = (kappa * a * b1 - R * b2) / D;
        const double Up = (a * b2 - b1 / R) / D;
        ds[0] = x * Rp / R;
        ds[1] = Up - s[1];
    };
}

double sonic_D(double kappa, double t, const double* s) {
    const double x = std::exp(t);
    const double a = s[1] * x + x;
    return kappa * a * a - 1.0;
}

ode::State to_log_state(double x, double R, double U) { return {std::log(R), U / x}; }

ProfileSegment log_segment(std::shared_ptr<const ode::DenseSolution> sol, double lambda, double a, double b,
                           std::string kind) {
    const double tlo = std::min(sol->t_begin(), sol->t_end());
    const double thi = std::max(sol->t_begin(), sol->t_end());
    return {a, b,
            [sol, lambda, tlo, thi](double y) {
                const double x = y / lambda;
                const double t = std::clamp(std::log(x), tlo, thi);
                double s[2], ds[2];
                sol->eval(t, s, ds);
                const double R = std::exp(s[0]);
                const double Rp = R * ds[0] / x;
                const double U = s[1] * x, Up = s[1] + ds[1];
                const double l2 = lambda * lambda;
                return ProfilePoint{R / l2, lambda * U, Rp / (l2 * lambda), Up};
            },
            std::move(kind)};
}

// integrate in log coordinates; a terminal event fires when kappa (U+x)^2 - 1 changes sign
ode::IntegrationResult run_log(double kappa, double x0, const ode::State& s0, double x1, const MatchConfig& cfg,
                               bool near_event = false) {
    std::vector<ode::Event> ev;
    if (near_event) {
        ev.push_back({[kappa](double t, const double* s) { return std::fabs(sonic_D(kappa, t, s)) - 1e-6; }, -1,
                      true});
        // blowup of the singular origin mode
        ev.push_back({[](double, const double* s) { return std::fabs(s[1]) - 1e6; }, 1, true});
    }
    else
        ev.push_back({[kappa](double t, const double* s) { return sonic_D(kappa, t, s); }, 0, true});
    return ode::integrate(log_rhs(kappa), std::log(x0), s0, std::log(x1), cfg.integrator, ev);
}

std::vector<double> scan_points(const RadialProfile& p, double lo) {
    std::vector<double> g;
    for (const auto& s : p.segments()) {
        const double a = s.a > 0.0 ? s.a : lo;
        if (!(a < s.b)) continue;
        const int n = std::max(16, static_cast<int>(std::ceil(60.0 * std::log10(s.b / a))));
        for (int i = 0; i < n; ++i) g.push_back(a * std::pow(s.b / a, i / double(n)));
        g.push_back(s.b);
    }
    return g;
}

struct ExteriorParts {
    expansions::SonicExpansion sonic;
    std::shared_ptr<const ode::DenseSolution> inner;
};

ExteriorParts exterior_inner(double epsilon, double y0, const MatchConfig& cfg) {
    const double ys = 1.0 + epsilon;
    if (!(y0 < ys - 2.0 * expansions::default_sonic_offset(ys)))
        throw DomainError("interface radius must lie inside the sonic point");
    auto son = expansions::sonic_expansion(ys, Branch::Hunter, cfg.series_order);
    const double yl = ys - son.delta;
    const auto l = son.eval(yl);
    auto r = run_log(1.0, yl, to_log_state(yl, l.rho, l.u), y0, cfg);
    if (r.terminated) {
        std::ostringstream os;
        os << "second sonic crossing at y=" << std::exp(r.events.back().t) << " for epsilon=" << epsilon;
        throw SonicGuardHit(os.str());
    }
    return {std::move(son), r.solution};
}

}  // namespace

ode::IntegratorConfig MatchConfig::default_integrator() {
    ode::IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    c.max_step = 0.25;
    c.max_steps = 1000000;
    return c;
}

MatchContext::MatchContext(MatchConfig cfg)
    : MatchContext(std::make_shared<const iso::IsothermalTables>(), hypergeom::build_constants(), cfg) {}

MatchContext::MatchContext(std::shared_ptr<const iso::IsothermalTables> tables,
                           const hypergeom::HypergeomConstants& k, MatchConfig cfg)
    : cfg_(cfg), tables_(std::move(tables)), k_(k) {
    c2_ = tables_->c2();
    d2_ = tables_->d2();
    d2_lift_ = k_.d1 + std::remainder(d2_ - k_.d1, 2.0 * kPi);
    if (d2_lift_ - k_.d1 <= -kPi) d2_lift_ += 2.0 * kPi;
}

Y0Choice choose_y0(double d1, double target_scale) {
    if (!(target_scale >= 1e-3 && target_scale <= 1e-1)) throw DomainError("target scale outside [1e-3, 1e-1]");
    const double base = kPi / 2.0 - d1;
    const int m = static_cast<int>(std::lround((base - kOmega * std::log(target_scale)) / (2.0 * kPi)));
    Y0Choice c{};
    c.m = m;
    c.y0 = std::exp((base - 2.0 * kPi * m) / kOmega);
    c.deviation = std::fabs(std::sin(kOmega * std::log(c.y0) + d1) - 1.0);
    return c;
}

RadialState exterior_trace(double epsilon, double y0, const MatchConfig& cfg) {
    const auto parts = exterior_inner(epsilon, y0, cfg);
    const auto& s = parts.inner->back();
    return {y0, std::exp(s[0]), s[1] * y0};
}

ExteriorSolution exterior_solve(double epsilon, double y0, double y_max, const MatchConfig& cfg) {
    if (!(y0 > 0.0 && y0 < 1.0 && y_max > 1.0)) throw DomainError("exterior needs 0 < y0 < 1 < y_max");
    auto parts = exterior_inner(epsilon, y0, cfg);
    const auto& son = parts.sonic;
    const double ys = son.y_star, yr = ys + son.delta;
    if (!(yr < y_max)) throw DomainError("y_max inside the sonic launch window");
    const auto l = son.eval(yr);
    auto r = run_log(1.0, yr, to_log_state(yr, l.rho, l.u), y_max, cfg);
    if (r.terminated) {
        std::ostringstream os;
        os << "second sonic crossing at y=" << std::exp(r.events.back().t) << " for epsilon=" << epsilon;
        throw SonicGuardHit(os.str());
    }
    ExteriorSolution e{epsilon, y0, y_max, {}, son, 0.0, 0.0};
    e.profile.add_segment(log_segment(parts.inner, 1.0, y0, ys - son.delta, "exterior_inner"));
    e.profile.add_segment({ys - son.delta, yr, [son](double y) { return son.eval(y); }, "sonic_series"});
    e.profile.add_segment(log_segment(r.solution, 1.0, yr, y_max, "exterior_outer"));
    e.profile.epsilon = epsilon;
    e.profile.y0 = y0;
    e.profile.y_star = ys;
    double smin = 1e300, rmin = 1e300;
    for (double y : scan_points(e.profile, y0)) {
        const auto pt = e.profile(y);
        smin = std::min(smin, 1.0 + pt.du);
        rmin = std::min(rmin, pt.rho);
    }
    e.min_slope = smin;
    e.min_rho = rmin;
    if (smin < 0.5) {
        std::ostringstream os;
        os << "exterior (u+y)' reaches " << smin << " for epsilon=" << epsilon;
        throw VelocityBoundViolated(os.str());
    }
    if (!(rmin > 0.0)) throw DomainError("exterior density not positive");
    return e;
}

namespace {

struct InteriorParts {
    expansions::OriginExpansion origin;
    std::shared_ptr<const ode::DenseSolution> sol;
};

InteriorParts interior_run(double lambda, double y0, const MatchConfig& cfg) {
    if (!(lambda > 0.0 && lambda <= y0 / 10.0)) {
        std::ostringstream os;
        os << "interior needs 0 < lambda <= y0/10 (lambda=" << lambda << ", y0=" << y0 << ")";
        throw DomainError(os.str());
    }
    const double kappa = lambda * lambda, x0 = cfg.x_launch;
    auto o = expansions::origin_expansion(1.0, cfg.series_order, kappa);
    const auto res = expansions::series_residual(o, x0);
    if (!(std::max(res.tail, res.pointwise) <= 1e-10))
        throw OriginSeriesFailure("origin series residual too large at the launch radius");
    const auto l = o.eval(x0);
    ode::IntegrationResult r;
    try {
        r = run_log(kappa, x0, to_log_state(x0, l.rho, l.u), y0 / lambda, cfg);
    } catch (const StepSizeUnderflow& e) {
        throw BlowupBeforeY0(std::string("interior integration stalled: ") + e.what());
    }
    if (r.terminated) {
        std::ostringstream os;
        os << "interior reaches the sonic set at y=" << lambda * std::exp(r.events.back().t) << " for lambda=" << lambda;
        throw BlowupBeforeY0(os.str());
    }
    return {std::move(o), r.solution};
}

}  // namespace

RadialState interior_trace(double lambda, double y0, const MatchConfig& cfg) {
    const auto parts = interior_run(lambda, y0, cfg);
    const auto& s = parts.sol->back();
    const double x = y0 / lambda;
    return {y0, std::exp(s[0]) / (lambda * lambda), lambda * s[1] * x};
}

InteriorSolution interior_solve(double lambda, double y0, const MatchConfig& cfg) {
    auto parts = interior_run(lambda, y0, cfg);
    InteriorSolution in{lambda, y0, {}, parts.origin, 0.0};
    const double ys = lambda * cfg.x_launch;
    const auto o = parts.origin;
    in.profile.add_segment({0.0, ys,
                            [o, lambda](double y) {
                                const auto p = o.eval(y / lambda);
                                const double l2 = lambda * lambda;
                                return ProfilePoint{p.rho / l2, lambda * p.u, p.drho / (l2 * lambda), p.du};
                            },
                            "origin_series"});
    in.profile.add_segment(log_segment(parts.sol, lambda, ys, y0, "interior"));
    in.profile.lambda = lambda;
    in.profile.y0 = y0;
    double vmax = 0.0;
    for (double y : scan_points(in.profile, 1e-6 * lambda)) {
        const auto pt = in.profile(y);
        vmax = std::max(vmax, std::fabs(pt.u + y));
    }
    in.max_speed = vmax;
    if (vmax > 0.5) {
        std::ostringstream os;
        os << "interior |u+y| reaches " << vmax << " for lambda=" << lambda;
        throw VelocityBoundViolated(os.str());
    }
    return in;
}

double predicted_epsilon(const MatchContext& ctx, double lambda) {
    return ctx.c2() / ctx.c1() * std::sqrt(lambda) * std::cos(kOmega * std::log(lambda) + ctx.d1() - ctx.d2());
}

EpsilonMatch match_epsilon(const MatchContext& ctx, double lambda, double y0) {
    const auto& cfg = ctx.config();
    EpsilonMatch m{};
    m.interior = interior_trace(lambda, y0, cfg);
    m.predicted = predicted_epsilon(ctx, lambda);
    auto F = [&](double e) { return exterior_trace(e, y0, cfg).rho - m.interior.rho; };
    double h = 3.0 * std::fabs(m.predicted) + 1e-14;
    m.lo = m.predicted - h;
    m.hi = m.predicted + h;
    double flo = F(m.lo), fhi = F(m.hi);
    if ((flo > 0.0) == (fhi > 0.0)) {
        // near a zero of the cosine the default bracket collapses; use the full amplitude once
        const double amp = ctx.c2() / ctx.c1() * std::sqrt(lambda);
        if (amp > h) {
            m.inflated = true;
            m.lo = m.predicted - amp;
            m.hi = m.predicted + amp;
            flo = F(m.lo);
            fhi = F(m.hi);
        }
        if ((flo > 0.0) == (fhi > 0.0)) {
            std::ostringstream os;
            os << "no density match for lambda=" << lambda << ": predicted epsilon " << m.predicted
               << ", scanned [" << m.lo << ", " << m.hi << "]";
            throw NoBracket(os.str());
        }
    }
    m.epsilon = ode::solve_bracketed(F, m.lo, m.hi, 1e-17 + 1e-15 * std::fabs(m.predicted));
    m.exterior = exterior_trace(m.epsilon, y0, cfg);
    m.mismatch = m.exterior.rho - m.interior.rho;
    return m;
}

GValue matching_G(const MatchContext& ctx, double lambda, double y0) {
    GValue g{};
    g.eps = match_epsilon(ctx, lambda, y0);
    const double scale = ctx.c2() * std::sqrt(y0 * lambda) * std::sin(ctx.constants().theta0);
    g.G = (g.eps.exterior.u - g.eps.interior.u) / scale;
    return g;
}

LambdaBracket lambda_bracket(const MatchContext& ctx, int k, double half_width) {
    const double base = -k * kPi - ctx.d1() + ctx.d2_lifted();
    return {std::exp((base - half_width) / kOmega), std::exp((base + half_width) / kOmega)};
}

double precision_floor(const MatchContext& ctx, double y0) { return 1e-16 / (ctx.c2() * ctx.c2() * y0); }

MatchResult find_lambda_k(const MatchContext& ctx, int k, double y0) {
    const auto& cfg = ctx.config();
    const double floor = precision_floor(ctx, y0);
    auto br = lambda_bracket(ctx, k, cfg.bracket_half_width);
    if (br.lo < floor) {
        std::ostringstream os;
        os << "k=" << k << ": lambda bracket [" << br.lo << ", " << br.hi << "] below the precision floor " << floor;
        throw PrecisionFloor(os.str());
    }
    if (br.hi > y0 / 10.0) {
        std::ostringstream os;
        os << "k=" << k << ": lambda bracket [" << br.lo << ", " << br.hi << "] exceeds y0/10 = " << y0 / 10.0;
        throw NoBracket(os.str());
    }
    auto G = [&](double s) { return matching_G(ctx, std::exp(s), y0).G; };
    double slo = std::log(br.lo), shi = std::log(br.hi);
    double glo = G(slo), ghi = G(shi);
    bool inflated = false;
    if ((glo > 0.0) == (ghi > 0.0)) {
        br = lambda_bracket(ctx, k, cfg.inflated_half_width);
        br.hi = std::min(br.hi, y0 / 10.0);
        br.lo = std::max(br.lo, floor);
        slo = std::log(br.lo);
        shi = std::log(br.hi);
        glo = G(slo);
        ghi = G(shi);
        inflated = true;
        if ((glo > 0.0) == (ghi > 0.0)) {
            std::ostringstream os;
            os << "k=" << k << ": matching function keeps its sign on [" << br.lo << ", " << br.hi << "] (G = " << glo
               << ", " << ghi << ")";
            throw NoBracket(os.str());
        }
    }
    const double s = ode::solve_bracketed(G, slo, shi, 1e-14);
    const double lambda = std::exp(s);
    const auto gv = matching_G(ctx, lambda, y0);

    MatchResult m{};
    m.k = k;
    m.lambda = lambda;
    m.epsilon = gv.eps.epsilon;
    m.epsilon_predicted = gv.eps.predicted;
    m.y_star = 1.0 + m.epsilon;
    m.y0 = y0;
    m.G_residual = gv.G;
    m.bracket_inflated = inflated;

    const auto in = interior_solve(lambda, y0, cfg);
    const auto ext = exterior_solve(m.epsilon, y0, cfg.y_max, cfg);
    for (const auto& seg : in.profile.segments()) m.profile.add_segment(seg);
    for (const auto& seg : ext.profile.segments()) m.profile.add_segment(seg);
    m.profile.epsilon = m.epsilon;
    m.profile.lambda = lambda;
    m.profile.y0 = y0;
    m.profile.y_star = m.y_star;
    const auto pi = in.profile(y0), pe = ext.profile(y0);
    m.jump_rho = std::fabs(pe.rho - pi.rho) * y0 * y0;
    m.jump_u = std::fabs(pe.u - pi.u) / y0;
    m.exterior_min_slope = ext.min_slope;
    m.interior_max_speed = in.max_speed;
    m.report = analysis::verify(m.profile, 1e-8, k + 1, 1);
    m.intersections = m.report.intersections ? m.report.intersections->count : -1;
    m.sonic_count = static_cast<int>(m.report.sonic_points.size());
    return m;
}

namespace {

// +1 / -1: sign of the y^-2 mode picked up by the inward LP integration from y*
int lp_shooting_sign(double ys, const MatchConfig& cfg, double* rho_small = nullptr) {
    const auto son = expansions::sonic_expansion(ys, Branch::LarsonPenston, cfg.series_order);
    const double yl = ys - son.delta;
    const auto l = son.eval(yl);
    const auto r = run_log(1.0, yl, to_log_state(yl, l.rho, l.u), cfg.x_launch, cfg, true);
    if (rho_small) {
        const double y = 0.02;
        if (r.solution->contains(std::log(y))) *rho_small = std::exp((*r.solution)(std::log(y))[0]);
    }
    const auto& s = r.terminated ? r.events.back().y : r.solution->back();
    const double t = r.terminated ? r.events.back().t : r.solution->t_end();
    const double y = std::exp(t);
    const double u = s[1] * y;
    if (r.terminated && r.events.back().index == 0) return u + y > 0.0 ? 1 : -1;
    return u + 2.0 * y / 3.0 > 0.0 ? 1 : -1;
}

struct LpHalves {
    expansions::OriginExpansion origin;
    expansions::SonicExpansion sonic;
    std::shared_ptr<const ode::DenseSolution> inner, middle;
};

LpHalves lp_halves(double rho0, double ys, double ym, const MatchConfig& cfg) {
    auto o = expansions::origin_expansion(rho0, cfg.series_order, 1.0);
    const double x0 = cfg.x_launch;
    const auto lo = o.eval(x0);
    auto a = run_log(1.0, x0, to_log_state(x0, lo.rho, lo.u), ym, cfg);
    auto son = expansions::sonic_expansion(ys, Branch::LarsonPenston, cfg.series_order);
    const double yl = ys - son.delta;
    const auto ls = son.eval(yl);
    auto b = run_log(1.0, yl, to_log_state(yl, ls.rho, ls.u), ym, cfg);
    if (a.terminated || b.terminated) throw SonicGuardHit("sonic crossing between origin and the LP sonic point");
    return {std::move(o), std::move(son), a.solution, b.solution};
}

}  // namespace

LarsonPenstonResult larson_penston_solve(const MatchConfig& cfg) {
    double lo = 2.0, hi = 3.0;
    const int slo = lp_shooting_sign(lo, cfg), shi = lp_shooting_sign(hi, cfg);
    if (slo == shi) throw NoBracket("LP shooting function has one sign on [2, 3]");
    double rho_small = 0.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (lp_shooting_sign(mid, cfg, &rho_small) == slo ? lo : hi) = mid;
    }
    LarsonPenstonResult res{};
    res.bracket_lo = lo;
    res.bracket_hi = hi;

    // two-sided Newton on (rho0, y*) with the halves meeting at ym
    const double ym = 1.0;
    res.junction = ym;
    auto mismatch = [&](double r0, double ys) {
        const auto h = lp_halves(r0, ys, ym, cfg);
        const auto& a = h.inner->back();
        const auto& b = h.middle->back();
        return std::array<double, 2>{a[0] - b[0], a[1] - b[1]};
    };
    double r0 = rho_small > 0.0 ? rho_small : 1.0, ys = 0.5 * (lo + hi);
    for (int it = 0; it < 20; ++it) {
        const auto f = mismatch(r0, ys);
        const double h1 = 1e-7 * r0, h2 = 1e-7 * ys;
        const auto fa = mismatch(r0 + h1, ys), fb = mismatch(r0, ys + h2);
        const double j11 = (fa[0] - f[0]) / h1, j21 = (fa[1] - f[1]) / h1;
        const double j12 = (fb[0] - f[0]) / h2, j22 = (fb[1] - f[1]) / h2;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0) throw IllConditioned("LP Newton Jacobian singular");
        const double dr = (f[0] * j22 - f[1] * j12) / det;
        const double dy = (j11 * f[1] - j21 * f[0]) / det;
        r0 -= dr;
        ys -= dy;
        if (!(ys > 2.0 && ys < 3.0)) throw NoBracket("LP Newton left the bracket (2, 3)");
        if (std::fabs(dr) <= 1e-14 * r0 && std::fabs(dy) <= 1e-14 * ys) break;
    }
    const auto h = lp_halves(r0, ys, ym, cfg);
    const auto& a = h.inner->back();
    const auto& b = h.middle->back();
    res.mismatch = std::max(std::fabs(a[0] - b[0]), std::fabs(a[1] - b[1]) / std::fabs(b[1]));
    res.rho0 = r0;
    res.y_star = ys;

    const double yr = ys + h.sonic.delta;
    const auto lr = h.sonic.eval(yr);
    auto outer = run_log(1.0, yr, to_log_state(yr, lr.rho, lr.u), cfg.y_max, cfg);
    if (outer.terminated) throw SonicGuardHit("second sonic crossing outside the LP sonic point");

    const auto o = h.origin;
    const auto son = h.sonic;
    const double x0 = cfg.x_launch;
    res.profile.add_segment({0.0, x0, [o](double y) { return o.eval(y); }, "origin_series"});
    res.profile.add_segment(log_segment(h.inner, 1.0, x0, ym, "lp_inner"));
    res.profile.add_segment(log_segment(h.middle, 1.0, ym, ys - son.delta, "lp_middle"));
    res.profile.add_segment({ys - son.delta, yr, [son](double y) { return son.eval(y); }, "sonic_series"});
    res.profile.add_segment(log_segment(outer.solution, 1.0, yr, cfg.y_max, "lp_outer"));
    res.profile.y_star = ys;
    return res;
}

}  // namespace selfsim::matcher
