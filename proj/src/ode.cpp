#include "selfsim/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <Eigen/Dense>

#include "dop853_tableau.hpp"
#include "selfsim/errors.hpp"

namespace selfsim::ode {

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kEventRelTol = 1e-13;

double rms_norm(const double* v, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s / static_cast<double>(n));
}

}  // namespace

// ---------------------------------------------------------------- DenseSolution

void DenseSolution::start(double t0, const State& y0) {
    dim_ = y0.size();
    t_.assign(1, t0);
    y_.assign(1, y0);
    F_.clear();
}

void DenseSolution::push(double t1, const State& y1, std::vector<double> coeffs) {
    t_.push_back(t1);
    y_.push_back(y1);
    F_.push_back(std::move(coeffs));
}

void DenseSolution::truncate_last(double t_new, const State& y_new) {
    // interval keeps its original step length (stored in the coefficient tail)
    t_.back() = t_new;
    y_.back() = y_new;
}

bool DenseSolution::contains(double t) const {
    if (t_.empty()) return false;
    const double lo = std::min(t_.front(), t_.back());
    const double hi = std::max(t_.front(), t_.back());
    return t >= lo && t <= hi;
}

std::size_t DenseSolution::locate(double t) const {
    const std::size_t n = F_.size();
    if (n == 0) return 0;
    if (increasing()) {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t k = static_cast<std::size_t>(it - t_.begin());
        if (k == 0) return 0;
        return std::min(k - 1, n - 1);
    }
    auto it = std::upper_bound(t_.begin(), t_.end(), t, std::greater<double>());
    std::size_t k = static_cast<std::size_t>(it - t_.begin());
    if (k == 0) return 0;
    return std::min(k - 1, n - 1);
}

void DenseSolution::eval(double t, double* out, double* dout) const {
    if (!contains(t)) {
        std::ostringstream os;
        os << "dense output evaluated at t=" << t << " outside [" << t_begin() << ", " << t_end()
           << "]";
        throw DomainError(os.str());
    }
    const std::size_t k = locate(t);
    if (F_.empty()) {
        for (std::size_t i = 0; i < dim_; ++i) {
            out[i] = y_[0][i];
            if (dout) dout[i] = 0.0;
        }
        return;
    }
    const auto& F = F_[k];
    const double t0 = t_[k];
    const double h = F[dop853::kInterpPower * dim_];
    if (!dout && (t == t_[k + 1] || t == t0)) {
        const State& s = (t == t0) ? y_[k] : y_[k + 1];
        std::copy(s.begin(), s.end(), out);
        return;
    }
    const double x = (t - t0) / h;
    for (std::size_t i = 0; i < dim_; ++i) {
        // nested form: x(F0 + (1-x)(F1 + x(F2 + (1-x)(F3 + x(F4 + (1-x)(F5 + x F6))))))
        double v = 0.0;
        double dv = 0.0;  // derivative with respect to x
        for (int j = dop853::kInterpPower - 1; j >= 0; --j) {
            const double c = F[static_cast<std::size_t>(j) * dim_ + i];
            v += c;
            const int from_top = dop853::kInterpPower - 1 - j;
            if (from_top % 2 == 0) {
                dv = dv * x + v;
                v *= x;
            } else {
                dv = dv * (1.0 - x) - v;
                v *= (1.0 - x);
            }
        }
        out[i] = y_[k][i] + v;
        if (dout) dout[i] = dv / h;
    }
}

State DenseSolution::operator()(double t) const {
    State s(dim_);
    eval(t, s.data());
    return s;
}

State DenseSolution::derivative(double t) const {
    State s(dim_), d(dim_);
    eval(t, s.data(), d.data());
    return d;
}

// ---------------------------------------------------------------- integrate

namespace {

class Stepper {
public:
    Stepper(const Rhs& f, std::size_t n) : f_(f), n_(n), K_(dop853::kStagesExtended, State(n)) {}

    // One trial step from (t, y) with f(t,y) in K_[0]. Returns error norm.
    double trial(double t, const State& y, double h, const IntegratorConfig& cfg, State& y_new,
                 State& f_new) {
        State tmp(n_);
        for (int s = 1; s < dop853::kStages; ++s) {
            for (std::size_t i = 0; i < n_; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j) acc += dop853::A[s][j] * K_[j][i];
                tmp[i] = y[i] + h * acc;
            }
            f_(t + dop853::C[s] * h, tmp.data(), K_[s].data());
            ++evals;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < dop853::kStages; ++j) acc += dop853::B[j] * K_[j][i];
            y_new[i] = y[i] + h * acc;
        }
        f_(t + h, y_new.data(), f_new.data());
        ++evals;
        K_[dop853::kStages] = f_new;

        State e5(n_), e3(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double a5 = 0.0, a3 = 0.0;
            for (int j = 0; j <= dop853::kStages; ++j) {
                a5 += dop853::E5[j] * K_[j][i];
                a3 += dop853::E3[j] * K_[j][i];
            }
            const double sc =
                cfg.abs_tol + cfg.rel_tol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
            e5[i] = a5 / sc;
            e3[i] = a3 / sc;
        }
        double n5 = 0.0, n3 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            n5 += e5[i] * e5[i];
            n3 += e3[i] * e3[i];
        }
        if (n5 == 0.0 && n3 == 0.0) return 0.0;
        if (!std::isfinite(n5) || !std::isfinite(n3)) return std::numeric_limits<double>::infinity();
        const double denom = n5 + 0.01 * n3;
        return std::fabs(h) * n5 / std::sqrt(denom * static_cast<double>(n_));
    }

    std::vector<double> dense_coeffs(double t, const State& y, double h, const State& y_new,
                                     const State& f_new) {
        State tmp(n_);
        for (int s = dop853::kStages + 1; s < dop853::kStagesExtended; ++s) {
            for (std::size_t i = 0; i < n_; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j) acc += dop853::A[s][j] * K_[j][i];
                tmp[i] = y[i] + h * acc;
            }
            f_(t + dop853::C[s] * h, tmp.data(), K_[s].data());
            ++evals;
        }
        std::vector<double> F(dop853::kInterpPower * n_ + 1);
        for (std::size_t i = 0; i < n_; ++i) {
            const double dy = y_new[i] - y[i];
            F[0 * n_ + i] = dy;
            F[1 * n_ + i] = h * K_[0][i] - dy;
            F[2 * n_ + i] = 2.0 * dy - h * (f_new[i] + K_[0][i]);
            for (int r = 0; r < dop853::kInterpPower - 3; ++r) {
                double acc = 0.0;
                for (int j = 0; j < dop853::kStagesExtended; ++j) acc += dop853::D[r][j] * K_[j][i];
                F[static_cast<std::size_t>(3 + r) * n_ + i] = h * acc;
            }
        }
        F[dop853::kInterpPower * n_] = h;
        return F;
    }

    State& k0() { return K_[0]; }
    std::size_t evals = 0;

private:
    const Rhs& f_;
    std::size_t n_;
    std::vector<State> K_;
};

double initial_step(const Rhs& f, double t0, const State& y0, const State& f0, double dir,
                    const IntegratorConfig& cfg, std::size_t& evals) {
    const std::size_t n = y0.size();
    State sc(n), tmp(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) sc[i] = cfg.abs_tol + cfg.rel_tol * std::fabs(y0[i]);
    State a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = y0[i] / sc[i];
        b[i] = f0[i] / sc[i];
    }
    const double d0 = rms_norm(a.data(), n), d1 = rms_norm(b.data(), n);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, cfg.max_step);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + dir * h0 * f0[i];
    f(t0 + dir * h0, tmp.data(), f1.data());
    ++evals;
    for (std::size_t i = 0; i < n; ++i) a[i] = (f1[i] - f0[i]) / sc[i];
    const double d2 = rms_norm(a.data(), n) / h0;
    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    return std::min({100.0 * h0, h1, cfg.max_step});
}

}  // namespace

IntegrationResult integrate(const Rhs& f, double t0, const State& y0, double t1,
                            const IntegratorConfig& cfg, const std::vector<Event>& events) {
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0) || cfg.max_steps == 0)
        throw DomainError("invalid integrator configuration");
    if (t1 == t0) throw DomainError("degenerate integration span");
    const std::size_t n = y0.size();
    const double dir = t1 > t0 ? 1.0 : -1.0;

    auto sol = std::make_shared<DenseSolution>();
    sol->start(t0, y0);
    IntegrationResult res;

    Stepper st(f, n);
    State y = y0, y_new(n), f_new(n);
    f(t0, y.data(), st.k0().data());
    ++st.evals;
    std::size_t init_evals = 0;
    double h = initial_step(f, t0, y, st.k0(), dir, cfg, init_evals);
    st.evals += init_evals;

    std::vector<double> g_old(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) g_old[e] = events[e].g(t0, y.data());

    double t = t0;
    bool last_rejected = false;
    while (dir * (t1 - t) > 0.0) {
        if (res.steps >= cfg.max_steps) {
            std::ostringstream os;
            os << "max steps exceeded at t=" << t;
            throw MaxStepsExceeded(os.str());
        }
        const double min_h = cfg.min_step * std::max(1.0, std::fabs(t));
        h = std::min(h, cfg.max_step);
        bool final_step = false;
        if (dir * (t + dir * h - t1) >= 0.0) {
            h = std::fabs(t1 - t);
            final_step = true;
        }
        double err = 0.0;
        try {
            err = st.trial(t, y, dir * h, cfg, y_new, f_new);
        } catch (const SonicDegeneracy&) {
            err = std::numeric_limits<double>::infinity();
        }
        if (!(err <= 1.0)) {
            double fac = std::isfinite(err) ? std::max(kMinFactor, kSafety * std::pow(err, -1.0 / 8.0))
                                            : 0.25;
            h *= std::min(fac, 1.0);
            last_rejected = true;
            if (h < min_h) {
                std::ostringstream os;
                os << "step size underflow at t=" << t;
                throw StepSizeUnderflow(os.str());
            }
            continue;
        }
        const double t_new = final_step ? t1 : t + dir * h;
        auto F = st.dense_coeffs(t, y, dir * h, y_new, f_new);
        sol->push(t_new, y_new, std::move(F));
        ++res.steps;

        // events on this step
        bool stop = false;
        for (std::size_t e = 0; e < events.size() && !stop; ++e) {
            const double g_new = events[e].g(t_new, y_new.data());
            const double ga = g_old[e];
            const bool change = (ga < 0.0 && g_new >= 0.0) || (ga > 0.0 && g_new <= 0.0);
            const int sense = g_new > ga ? 1 : -1;
            if (change && (events[e].direction == 0 || events[e].direction == sense)) {
                State tmp(n);
                auto ge = [&](double tt) {
                    sol->eval(tt, tmp.data());
                    return events[e].g(tt, tmp.data());
                };
                double root = t_new;
                if (g_new != 0.0) {
                    const double tol = kEventRelTol * std::max(1.0, std::fabs(t_new));
                    root = solve_bracketed(ge, std::min(t, t_new), std::max(t, t_new), tol);
                }
                State yr = (*sol)(root);
                res.events.push_back({e, root, yr});
                if (events[e].terminal) {
                    sol->truncate_last(root, yr);
                    res.terminated = true;
                    stop = true;
                }
            }
            g_old[e] = g_new;
        }
        if (stop) break;

        t = t_new;
        y = y_new;
        st.k0() = f_new;
        double fac = err == 0.0 ? cfg.max_step_factor
                                : std::min(cfg.max_step_factor, kSafety * std::pow(err, -1.0 / 8.0));
        if (last_rejected) fac = std::min(fac, 1.0);
        h *= std::max(fac, kMinFactor);
        last_rejected = false;
    }
    res.rhs_evals = st.evals;
    res.solution = sol;
    return res;
}

// ---------------------------------------------------------------- roots

double bisect(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        std::ostringstream os;
        os << "no sign change on [" << a << ", " << b << "]: f=" << fa << ", " << fb;
        throw NoSignChange(os.str());
    }
    auto term = [tol](double lo, double hi) { return std::fabs(hi - lo) <= tol; };
    auto r = boost::math::tools::bisect(f, a, b, term);
    return 0.5 * (r.first + r.second);
}

double solve_bracketed(const std::function<double(double)>& f, double a, double b, double tol,
                       std::size_t max_iter) {
    if (a > b) std::swap(a, b);
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        std::ostringstream os;
        os << "no sign change on [" << a << ", " << b << "]: f=" << fa << ", " << fb;
        throw NoSignChange(os.str());
    }
    auto term = [tol](double lo, double hi) { return std::fabs(hi - lo) <= tol; };
    boost::uintmax_t it = max_iter;
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, term, it);
    const double lo = r.first, hi = r.second;
    if (std::fabs(hi - lo) > tol) {
        // finish with plain bisection when TOMS 748 runs out of iterations
        return bisect(f, lo, hi, tol);
    }
    const double flo = f(lo), fhi = f(hi);
    return std::fabs(flo) <= std::fabs(fhi) ? lo : hi;
}

// ---------------------------------------------------------------- fits

namespace {

SinusoidFit fit_impl(const std::vector<double>& y, const std::vector<double>& g, double omega,
                     bool corrected) {
    if (y.size() != g.size()) throw DomainError("fit_log_sinusoid: size mismatch");
    if (y.size() < 8) throw IllConditioned("fit_log_sinusoid: need at least 8 samples");
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    if (!(*mn > 0.0)) throw DomainError("fit_log_sinusoid: y must be positive");
    const double span = std::log(*mx / *mn);
    const double period = 2.0 * M_PI / omega;
    if (span < period) throw IllConditioned("fit_log_sinusoid: window shorter than one period");
    const int cols = corrected ? 5 : 2;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(y.size()), cols);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double ph = omega * std::log(y[i]);
        const auto r = static_cast<Eigen::Index>(i);
        A(r, 0) = std::cos(ph);
        A(r, 1) = std::sin(ph);
        if (corrected) {
            const double w = 1.0 / std::sqrt(y[i]);
            A(r, 2) = w;
            A(r, 3) = w * std::cos(2.0 * ph);
            A(r, 4) = w * std::sin(2.0 * ph);
        }
        rhs(r) = g[i];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(rhs);
    const double Acoef = c(0);  // c sin d
    const double Bcoef = c(1);  // c cos d
    SinusoidFit out{};
    out.amplitude = std::hypot(Acoef, Bcoef);
    double d = std::atan2(Acoef, Bcoef);
    if (d < 0.0) d += 2.0 * M_PI;
    if (d >= 2.0 * M_PI) d -= 2.0 * M_PI;
    out.phase = d;
    out.rms_residual = std::sqrt((A * c - rhs).squaredNorm() / static_cast<double>(y.size()));
    return out;
}

}  // namespace

SinusoidFit fit_log_sinusoid(const std::vector<double>& y, const std::vector<double>& g,
                             double omega) {
    return fit_impl(y, g, omega, false);
}

SinusoidFit fit_log_sinusoid_corrected(const std::vector<double>& y,
                                       const std::vector<double>& g, double omega) {
    return fit_impl(y, g, omega, true);
}

}  // namespace selfsim::ode
